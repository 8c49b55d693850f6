"""Open spin-1/2 chains with Ising coupling and site-dependent fields.

    H = - sum_i Z_i Z_{i+1} - sum_i (h Z_i + g_i X_i)

Time evolution is ``U_t = exp(i t H)``, obtained from a single
eigendecomposition per Hamiltonian.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

from .metrics import ep_symmetric, man_aa, op_entanglement, op_space_entangling_power
from .sampling import SeededStream, as_stream, uniform_disorder
from .tensor import (
    SIGMA_X,
    SIGMA_Z,
    Bipartition,
    as_matrix,
    dagger,
    hs_norm_sq,
    is_hermitian,
    partial_trace,
    realign,
)

MAX_SITES = 10
PRESETS = ("nonintegrable", "integrable", "anderson", "mbl")
DISORDER_RANGE = (-10.0, 10.0)


@dataclass(frozen=True)
class SpinChainSpec:
    L: int
    h: float
    g: tuple[float, ...]
    boundary: str = field(default="open")

    def __post_init__(self):
        object.__setattr__(self, "g", tuple(float(x) for x in self.g))
        if self.L < 2 or self.L % 2:
            raise ValueError(f"L must be a positive even integer, got {self.L}")
        if len(self.g) != self.L:
            raise ValueError(f"need {self.L} transverse fields, got {len(self.g)}")
        if self.boundary != "open":
            raise ValueError("only open boundary conditions are supported")

    @property
    def bipartition(self) -> Bipartition:
        return Bipartition.symmetric(2 ** (self.L // 2))


@dataclass(frozen=True)
class ScramblingRate:
    tau_s_inv: float


def _site_op(op: np.ndarray, i: int, L: int) -> np.ndarray:
    return reduce(np.kron, [op if k == i else np.eye(2) for k in range(L)])


def build_hamiltonian(spec: SpinChainSpec) -> np.ndarray:
    L = spec.L
    if L > MAX_SITES:
        raise ValueError(f"L={L} exceeds the exact-diagonalization limit of {MAX_SITES}")
    # diagonal part: Ising bonds and longitudinal field in the Z basis
    bits = (np.arange(2**L)[:, None] >> np.arange(L - 1, -1, -1)[None, :]) & 1
    z = 1.0 - 2.0 * bits
    diag = -np.sum(z[:, :-1] * z[:, 1:], axis=1) - spec.h * np.sum(z, axis=1)
    H = np.diag(diag).astype(complex)
    for i, gi in enumerate(spec.g):
        if gi != 0.0:
            H -= gi * _site_op(SIGMA_X, i, L)
    return H


def model_preset(name: str, L: int, rng=None) -> SpinChainSpec:
    """Coupling presets: clean (non)integrable Ising chains and two disordered ones."""
    if name == "nonintegrable":
        return SpinChainSpec(L, 0.5, (1.05,) * L)
    if name == "integrable":
        return SpinChainSpec(L, 0.0, (1.0,) * L)
    if name in ("anderson", "mbl"):
        g = uniform_disorder(L, *DISORDER_RANGE, as_stream(rng))
        return SpinChainSpec(L, 0.0 if name == "anderson" else 0.5, tuple(g))
    raise ValueError(f"unknown model {name!r}; expected one of {PRESETS}")


def local_part(h: np.ndarray, bip: Bipartition) -> np.ndarray:
    """Orthogonal projection of ``h`` onto operators of the form ``X_A (x) 1 + 1 (x) Y_B``."""
    dims = (bip.dA, bip.dB)
    on_b = partial_trace(h, dims, [1]) / bip.dA
    on_a = partial_trace(h, dims, [0]) / bip.dB
    mean = np.trace(h) / bip.d
    return (np.kron(np.eye(bip.dA), on_b) + np.kron(on_a, np.eye(bip.dB))
            - mean * np.eye(bip.d))


def scrambling_rate(h, bip: Bipartition) -> ScramblingRate:
    """Gaussian scrambling rate ``||H - H_loc||_2 / sqrt(d)``.

    ``H_loc`` is the projection onto sums of single-side operators, so the
    rate vanishes exactly for non-interacting ``H_A (x) 1 + 1 (x) H_B``
    (including its identity component).
    """
    h = as_matrix(h)
    if h.shape != (bip.d, bip.d):
        raise ValueError(f"Hamiltonian shape {h.shape} does not match d={bip.d}")
    if not is_hermitian(h):
        raise ValueError("scrambling_rate requires a Hermitian matrix")
    rest = h - local_part(h, bip)
    return ScramblingRate(float(np.sqrt(hs_norm_sq(rest) / bip.d)))


class Propagator:
    """``t -> exp(i t H)`` from one spectral decomposition."""

    def __init__(self, h):
        h = as_matrix(h)
        if not is_hermitian(h):
            raise ValueError("Propagator requires a Hermitian matrix")
        self.h = h
        self.energies, self.vectors = np.linalg.eigh(h)

    def __call__(self, t: float) -> np.ndarray:
        v = self.vectors
        return (v * np.exp(1j * t * self.energies)) @ dagger(v)


def _e_and_e_swapped(u: np.ndarray, bip: Bipartition) -> tuple[float, float]:
    n = bip.dA
    r = realign(u, bip)
    rr = r @ dagger(r)
    e_u = 1.0 - np.vdot(rr, rr).real / bip.d**2
    # realignment of U S: swap the column factors
    us = u.reshape(n, n, n, n).transpose(0, 1, 3, 2).reshape(bip.d, bip.d)
    r2 = realign(us, bip)
    rr2 = r2 @ dagger(r2)
    e_us = 1.0 - np.vdot(rr2, rr2).real / bip.d**2
    return float(e_u), float(e_us)


def short_time_suite(h, bip: Bipartition, t_grid: Sequence[float]) -> list[dict]:
    """Exact ``E(U_t)``, ``S(U_t(A):A)`` and the operator entangling power on ``t_grid``."""
    prop = Propagator(h)
    rows = []
    for t in t_grid:
        u = prop(float(t))
        rows.append({
            "t": float(t),
            "E": op_entanglement(u, bip).value,
            "S_AA": man_aa(u, bip).value,
            "Ep": op_space_entangling_power(u, bip).value,
        })
    return rows


@dataclass
class TimeSeries:
    t: np.ndarray
    E_U: np.ndarray
    E_US: np.ndarray
    Ep: np.ndarray
    n_realizations: int
    seed: int | None

    def rows(self):
        for k in range(self.t.size):
            yield (self.t[k], self.E_U[k], self.E_US[k], self.Ep[k], self.n_realizations, self.seed)


def single_series(spec: SpinChainSpec, t_grid: Sequence[float]) -> np.ndarray:
    """``(len(t_grid), 3)`` array of ``E(U_t)``, ``E(U_t S)``, ``Ep`` for one Hamiltonian."""
    bip = spec.bipartition
    prop = Propagator(build_hamiltonian(spec))
    out = np.empty((len(t_grid), 3))
    for k, t in enumerate(t_grid):
        e_u, e_us = _e_and_e_swapped(prop(float(t)), bip)
        out[k] = (e_u, e_us, ep_symmetric(e_u, e_us, bip.d))
    return out


def _realization(args):
    model, L, seed, index, t_grid = args
    spec = model_preset(model, L, SeededStream(seed).child(index))
    return single_series(spec, t_grid)


def time_series(model: str, L: int, t_grid: Sequence[float], realizations: int = 1,
                rng=None, jobs: int = 1) -> TimeSeries:
    """Disorder-averaged metric curves for a preset model on the half-chain cut.

    Realization ``k`` draws its fields from the child stream ``k`` of the
    given seed, so the result does not depend on ``jobs``.
    """
    if realizations < 1:
        raise ValueError("realizations must be >= 1")
    stream = as_stream(rng)
    t_grid = np.asarray(t_grid, dtype=float)
    disordered = model in ("anderson", "mbl")
    if not disordered:
        realizations = 1
    tasks = [(model, L, stream.seed, k, t_grid) for k in range(realizations)]
    if jobs > 1 and realizations > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_realization, tasks))
    else:
        results = [_realization(task) for task in tasks]
    stack = np.stack(results)  # [realization, t, metric]
    mean = np.sum(stack, axis=0) / realizations
    return TimeSeries(t_grid, mean[:, 0], mean[:, 1], mean[:, 2], realizations, stream.seed)
