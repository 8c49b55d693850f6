"""Seeded random draws: Haar unitaries, Haar states, uniform disorder.

All randomness flows through :class:`SeededStream`, a thin wrapper over
numpy's ``PCG64`` bit generator.  Identical seeds and call sequences give
bit-identical draws.  Parallel work derives independent child streams with
:meth:`SeededStream.child`, keyed by ``(seed, index)`` rather than by
position in a shared stream, so results do not depend on the worker count.
"""
from __future__ import annotations

import numpy as np

ALGORITHM = "numpy.PCG64/SeedSequence"


class SeededStream:
    """Single-owner reproducible random stream."""

    algorithm = ALGORITHM

    def __init__(self, seed: int = 0, _path: tuple[int, ...] = ()):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self.path = tuple(_path)
        ss = np.random.SeedSequence(seed, spawn_key=self.path)
        self.generator = np.random.Generator(np.random.PCG64(ss))
        self.draws = 0

    def child(self, index: int) -> "SeededStream":
        """Independent stream determined only by ``(seed, path, index)``."""
        return SeededStream(self.seed, self.path + (int(index),))

    def normal(self, size) -> np.ndarray:
        self.draws += 1
        return self.generator.standard_normal(size)

    def uniform(self, lo: float, hi: float, size) -> np.ndarray:
        self.draws += 1
        return self.generator.uniform(lo, hi, size)

    def __repr__(self):
        return f"SeededStream(seed={self.seed}, path={self.path}, draws={self.draws})"


def as_stream(rng) -> SeededStream:
    if isinstance(rng, SeededStream):
        return rng
    if rng is None:
        return SeededStream(0)
    return SeededStream(int(rng))


def ginibre(d: int, rng: SeededStream) -> np.ndarray:
    z = rng.normal((d, d, 2))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)


def haar_unitary(d: int, rng) -> np.ndarray:
    """Haar-random ``d x d`` unitary.

    QR of a complex Ginibre matrix, with the phases of ``diag(R)`` absorbed
    into ``Q``; without that correction the QR output is not Haar distributed.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    rng = as_stream(rng)
    q, r = np.linalg.qr(ginibre(d, rng))
    diag = np.diagonal(r)
    phases = diag / np.abs(diag)
    return q * phases[np.newaxis, :]


def haar_state(d: int, rng) -> np.ndarray:
    """Haar-random unit vector as a ``(d, 1)`` column."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    rng = as_stream(rng)
    z = rng.normal((d, 2))
    psi = z[:, 0] + 1j * z[:, 1]
    psi /= np.linalg.norm(psi)
    return psi.reshape(d, 1)


def uniform_disorder(count: int, lo: float, hi: float, rng) -> list[float]:
    if not lo < hi:
        raise ValueError(f"need lo < hi, got lo={lo}, hi={hi}")
    if count < 0:
        raise ValueError("count must be nonnegative")
    if count == 0:
        return []
    rng = as_stream(rng)
    return [float(x) for x in rng.uniform(lo, hi, count)]
