"""Steepest ascent of the operator space entangling power on the unitary group.

The Euclidean gradient ``Gamma`` of ``Ep`` is mapped to the Riemannian
direction ``G = Gamma U^dag - U Gamma^dag``, which is anti-Hermitian, and the
iterate moves along the geodesic ``U -> exp(mu G) U``.  The step ``mu`` doubles
after every accepted step and is halved until the objective does not
decrease.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .metrics import ep_symmetric
from .sampling import as_stream, haar_unitary
from .tensor import (
    Bipartition,
    dagger,
    expm_antihermitian,
    polar_unitary,
    realign,
    require_unitary,
    unitarity_defect,
    unrealign,
)

log = logging.getLogger(__name__)

EPSILON = 1e-16
MAX_ITER = 100_000
MAX_HALVINGS = 60
REUNITARIZE_EVERY = 50
D_SIDE_RANGE = (2, 8)


@dataclass
class AscentState:
    u: np.ndarray
    ep: float
    mu: float
    iteration: int
    epsilon: float = EPSILON
    converged: bool = False

    @property
    def d_side(self) -> int:
        return int(round(np.sqrt(self.u.shape[0])))


class AscentError(RuntimeError):
    """Raised when the iteration budget runs out; ``state`` holds the best iterate."""

    def __init__(self, message: str, state: AscentState):
        super().__init__(message)
        self.state = state


def bound(d_side: int) -> float:
    """Largest attainable ``Ep`` at ``dA = dB = d_side``."""
    d = d_side * d_side
    return 1.0 - 2.0 / (d + 1)


def _swap_columns(m: np.ndarray, n: int) -> np.ndarray:
    """``m S`` for the swap ``S`` of two ``n``-dimensional factors."""
    return m.reshape(n, n, n, n).transpose(0, 1, 3, 2).reshape(n * n, n * n)


def _e_and_grad(u: np.ndarray, bip: Bipartition) -> tuple[float, np.ndarray]:
    """``E(U)`` and its gradient with respect to ``conj(U)``."""
    r = realign(u, bip)
    rr = r @ dagger(r)
    d2 = bip.d**2
    return 1.0 - np.vdot(rr, rr).real / d2, -(2.0 / d2) * unrealign(rr @ r, bip)


def _value_and_gradient(u: np.ndarray, bip: Bipartition) -> tuple[float, np.ndarray]:
    n, d = bip.dA, bip.d
    es = 1.0 - 1.0 / d
    e1, g1 = _e_and_grad(u, bip)
    e2, g2 = _e_and_grad(_swap_columns(u, n), bip)
    # the map U -> U S is linear, so its gradient pulls back through S (S^dag = S)
    g2 = _swap_columns(g2, n)
    x, y = e1 / es, e2 / es
    gamma = (2.0 / es) * ((1.0 - x - y / d) * g1 + (1.0 - y - x / d) * g2)
    return ep_symmetric(e1, e2, d), gamma


def _require_symmetric(bip: Bipartition) -> None:
    if not bip.is_symmetric:
        raise ValueError(f"gradient ascent needs dA = dB, got ({bip.dA}, {bip.dB})")


def euclidean_gradient(u, bip: Bipartition) -> np.ndarray:
    """Gradient ``Gamma_U`` of ``Ep`` so that ``dEp = 2 Re Tr[Gamma^dag dU]``."""
    _require_symmetric(bip)
    u = require_unitary(u, bip.d)
    return _value_and_gradient(u, bip)[1]


def riemannian_direction(u, gamma) -> np.ndarray:
    """Steepest-ascent direction ``G = Gamma U^dag - U Gamma^dag`` (anti-Hermitian)."""
    return gamma @ dagger(u) - u @ dagger(gamma)


def ascend(d_side: int, rng=None, epsilon: float = EPSILON, max_iter: int = MAX_ITER,
           u0: np.ndarray | None = None) -> AscentState:
    """Maximize ``Ep`` over ``U(d_side^2)`` from a Haar-random start.

    Stops once an accepted step changes ``Ep`` by at most ``epsilon``, or
    when no step size in ``MAX_HALVINGS`` halvings gives an improvement.
    """
    lo, hi = D_SIDE_RANGE
    if not lo <= d_side <= hi:
        raise ValueError(f"d_side must lie in [{lo}, {hi}], got {d_side}")
    bip = Bipartition.symmetric(d_side)
    u = haar_unitary(bip.d, as_stream(rng)) if u0 is None else require_unitary(u0, bip.d)
    ep, gamma = _value_and_gradient(u, bip)
    gnorm = np.linalg.norm(gamma)
    mu = 0.1 / gnorm if gnorm > 0 else 1.0
    state = AscentState(u, ep, mu, 0, epsilon)
    for it in range(1, max_iter + 1):
        g = riemannian_direction(u, gamma)
        for _ in range(MAX_HALVINGS + 1):
            u_new = expm_antihermitian(g, mu) @ u
            ep_new, gamma_new = _value_and_gradient(u_new, bip)
            if ep_new >= ep:
                break
            mu *= 0.5
        else:
            # no ascent direction left at machine precision
            state.iteration = it
            state.converged = True
            log.debug("step size collapsed at iteration %d, Ep=%.17g", it, ep)
            return state
        delta = ep_new - ep
        u, ep, gamma = u_new, ep_new, gamma_new
        if it % REUNITARIZE_EVERY == 0 and unitarity_defect(u) > 1e-14:
            u = polar_unitary(u)
            ep, gamma = _value_and_gradient(u, bip)
        state = AscentState(u, ep, mu, it, epsilon)
        mu *= 2.0
        if abs(delta) <= epsilon:
            state.converged = True
            return state
    raise AscentError(f"no convergence within {max_iter} iterations (Ep={ep:.17g})", state)


@dataclass(frozen=True)
class RestartResult:
    d_side: int
    seed: int
    iterations: int
    ep_final: float
    bound: float
    gap: float
    best_restart: int
    converged: bool

    def as_dict(self) -> dict:
        return {
            "d_side": self.d_side,
            "seed": self.seed,
            "iterations": self.iterations,
            "ep_final": self.ep_final,
            "bound": self.bound,
            "gap": self.gap,
        }


def _restart_task(args):
    d_side, seed, index, epsilon, max_iter = args
    stream = as_stream(seed).child(index)
    try:
        return ascend(d_side, stream, epsilon, max_iter), True
    except AscentError as exc:
        return exc.state, False


def maximize(d_side: int, restarts: int = 5, seed: int = 0, epsilon: float = EPSILON,
             max_iter: int = MAX_ITER, jobs: int = 1) -> RestartResult:
    """Best of ``restarts`` independent ascents; restart ``k`` uses child stream ``k``."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    tasks = [(d_side, seed, k, epsilon, max_iter) for k in range(restarts)]
    if jobs > 1 and restarts > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_restart_task, tasks))
    else:
        results = [_restart_task(task) for task in tasks]
    best = max(range(restarts), key=lambda k: results[k][0].ep)
    state, ok = results[best]
    b = bound(d_side)
    out = RestartResult(d_side, int(seed), state.iteration, float(state.ep), b,
                        float(b - state.ep), best, ok)
    if not any(ok for _, ok in results):
        raise AscentError("iteration cap reached on every restart", state)
    return out
