"""Dense linear algebra on tensor-product Hilbert spaces.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128`` in
C (row-major) order.  Multi-factor spaces use the standard Kronecker
ordering: for factors of dimensions ``(d0, d1, ..., dn)`` the basis index
``(i0, i1, ..., in)`` maps to ``i0*d1*...*dn + ... + in``, so the first
factor is the most significant digit.

The doubled space of a bipartition ``A (x) B`` is always laid out as
``A, B, A', B'``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from typing import Sequence

import numpy as np

ATOL = 1e-12

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class Bipartition:
    """Factorization ``d = dA * dB`` of a Hilbert space."""

    dA: int
    dB: int
    d: int = field(init=False)

    def __post_init__(self):
        if self.dA < 1 or self.dB < 1:
            raise ValueError(f"subsystem dimensions must be positive, got {self.dA}, {self.dB}")
        object.__setattr__(self, "d", self.dA * self.dB)

    @classmethod
    def symmetric(cls, n: int) -> "Bipartition":
        return cls(n, n)

    @property
    def is_symmetric(self) -> bool:
        return self.dA == self.dB

    @property
    def doubled_dims(self) -> tuple[int, int, int, int]:
        return (self.dA, self.dB, self.dA, self.dB)

    def swapped(self) -> "Bipartition":
        return Bipartition(self.dB, self.dA)


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {a.shape}")
    return np.ascontiguousarray(a)


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def kron(*ms) -> np.ndarray:
    """Kronecker product of one or more matrices, left factor most significant."""
    if not ms:
        raise ValueError("kron needs at least one operand")
    out = as_matrix(ms[0])
    for m in ms[1:]:
        out = np.kron(out, as_matrix(m))
    return out


def is_hermitian(m: np.ndarray, atol: float = 1e-10) -> bool:
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and np.max(np.abs(m - dagger(m)), initial=0.0) <= atol


def unitarity_defect(m: np.ndarray) -> float:
    """``max |M^dag M - 1|`` entrywise."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return np.inf
    return float(np.max(np.abs(dagger(m) @ m - np.eye(m.shape[0])), initial=0.0))


def is_unitary(m: np.ndarray, atol: float = ATOL) -> bool:
    return unitarity_defect(m) <= atol


def require_unitary(u, d: int | None = None, atol: float = 1e-10) -> np.ndarray:
    """Validate and return ``u`` as a complex matrix.

    Raises ``ValueError`` for non-square, wrong-dimension, or non-unitary input.
    The default tolerance is looser than ``ATOL`` so that products of many
    exactly-unitary factors still pass.
    """
    u = as_matrix(u)
    if u.shape[0] != u.shape[1]:
        raise ValueError(f"matrix must be square, got {u.shape}")
    if d is not None and u.shape[0] != d:
        raise ValueError(f"dimension mismatch: matrix is {u.shape[0]}x{u.shape[0]}, bipartition has d={d}")
    defect = unitarity_defect(u)
    if defect > atol:
        raise ValueError(f"matrix is not unitary (max |U^dag U - 1| = {defect:.3e})")
    return u


def permute_factors(m: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Conjugate ``m`` by the factor permutation ``perm``.

    The result acts on the space whose k-th factor is the original factor
    ``perm[k]``.  Every reordering of tensor factors in the package goes
    through this function.
    """
    dims = tuple(int(x) for x in dims)
    perm = tuple(int(p) for p in perm)
    n = len(dims)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{perm} is not a permutation of {n} factors")
    D = prod(dims)
    m = as_matrix(m)
    if m.shape != (D, D):
        raise ValueError(f"matrix shape {m.shape} does not match factor dims {dims}")
    t = m.reshape(dims + dims)
    t = t.transpose(perm + tuple(n + p for p in perm))
    return t.reshape(D, D)


def permutation_matrix(dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Unitary ``P`` with ``P (x0 (x) x1 ...) = x_perm[0] (x) x_perm[1] ...`` on product vectors."""
    dims = tuple(int(x) for x in dims)
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(len(dims))):
        raise ValueError(f"{perm} is not a permutation of {len(dims)} factors")
    D = prod(dims)
    src = np.arange(D)
    digits = np.unravel_index(src, dims)
    dst = np.ravel_multi_index([digits[p] for p in perm], [dims[p] for p in perm])
    out = np.zeros((D, D), dtype=complex)
    out[dst, src] = 1.0
    return out


def partial_trace(m: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every factor not listed in ``keep``.

    Kept factors stay in their original relative order.
    """
    dims = tuple(int(x) for x in dims)
    m = as_matrix(m)
    D = prod(dims)
    if m.shape != (D, D):
        raise ValueError(f"matrix shape {m.shape} does not match factor dims {dims} (product {D})")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {len(dims)} factors")
    n = len(dims)
    traced = [k for k in range(n) if k not in keep]
    # bring kept factors to the front, then contract the rest pairwise
    order = keep + traced
    t = m.reshape(dims + dims).transpose(order + [n + k for k in order])
    dk = prod(dims[k] for k in keep)
    dt = prod(dims[k] for k in traced)
    t = t.reshape(dk, dt, dk, dt)
    return np.einsum("iaja->ij", t)


def swap_operator(d1: int, d2: int | None = None) -> np.ndarray:
    """Swap ``C^d1 (x) C^d2 -> C^d2 (x) C^d1``; for ``d1 == d2`` the usual SWAP."""
    d2 = d1 if d2 is None else d2
    return permutation_matrix((d1, d2), (1, 0))


def subsystem_swap(bip: Bipartition, which: str) -> np.ndarray:
    """Swap operator on the doubled space ``A B A' B'``.

    ``which`` is ``"AA'"``, ``"BB'"`` or ``"full"`` (``AB <-> A'B'``).
    """
    dims = bip.doubled_dims
    key = which.replace("′", "'").upper()
    perms = {
        "AA'": (2, 1, 0, 3),
        "AA": (2, 1, 0, 3),
        "BB'": (0, 3, 2, 1),
        "BB": (0, 3, 2, 1),
        "FULL": (2, 3, 0, 1),
    }
    if key not in perms:
        raise ValueError(f"unknown swap {which!r}; expected AA', BB' or full")
    return permutation_matrix(dims, perms[key])


def expm_hermitian_phase(h: np.ndarray, t: float, atol: float = 1e-10) -> np.ndarray:
    """``exp(i t h)`` for Hermitian ``h`` via eigendecomposition."""
    h = as_matrix(h)
    if not is_hermitian(h, atol):
        raise ValueError("expm_hermitian_phase requires a Hermitian matrix")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * t * w)) @ dagger(v)


def expm_antihermitian(g: np.ndarray, mu: float = 1.0) -> np.ndarray:
    """``exp(mu g)`` for anti-Hermitian ``g``; exactly unitary up to round-off."""
    g = as_matrix(g)
    h = 1j * g
    h = 0.5 * (h + dagger(h))
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * mu * w)) @ dagger(v)


@dataclass(frozen=True)
class Norms:
    two_norm_sq: float
    spectral_norm: float


def norms(m: np.ndarray) -> Norms:
    m = as_matrix(m)
    two = float(np.vdot(m, m).real)
    spec = float(np.linalg.norm(m, 2)) if m.size else 0.0
    return Norms(two, spec)


def hs_norm_sq(m: np.ndarray) -> float:
    """``Tr(m^dag m)``."""
    return float(np.vdot(m, m).real)


def realign(m: np.ndarray, bip: Bipartition) -> np.ndarray:
    """Operator-Schmidt realignment ``R[(a,a'),(b,b')] = <a b|m|a' b'>``.

    Singular values of ``R`` are the operator-Schmidt coefficients of ``m``
    across ``A:B``.
    """
    m = as_matrix(m)
    dA, dB = bip.dA, bip.dB
    return m.reshape(dA, dB, dA, dB).transpose(0, 2, 1, 3).reshape(dA * dA, dB * dB)


def unrealign(r: np.ndarray, bip: Bipartition) -> np.ndarray:
    """Inverse of :func:`realign`."""
    dA, dB = bip.dA, bip.dB
    return np.ascontiguousarray(
        np.asarray(r).reshape(dA, dA, dB, dB).transpose(0, 2, 1, 3).reshape(dA * dB, dA * dB)
    )


def polar_unitary(m: np.ndarray) -> np.ndarray:
    """Closest unitary to ``m`` in Frobenius norm."""
    w, _, vh = np.linalg.svd(as_matrix(m))
    return w @ vh
