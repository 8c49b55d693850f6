"""Operator entanglement, mutual averaged non-commutativity and entangling powers.

Closed forms are evaluated through operator-Schmidt realignment and
partial traces on the single-copy space, never by materializing operators
on the doubled space (which would cost ``d**4`` memory).  The doubled-space
trace formulas are kept in :func:`op_entanglement_trace` and
:func:`man_trace` for cross-checking at small ``d``.

All quantities are normalized linear entropies and lie in ``[0, 1]``.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .sampling import as_stream, haar_state, haar_unitary
from .tensor import (
    Bipartition,
    as_matrix,
    dagger,
    partial_trace,
    permutation_matrix,
    realign,
    require_unitary,
    subsystem_swap,
    swap_operator,
)

log = logging.getLogger(__name__)


class Kind(str, enum.Enum):
    E = "E"
    E_SWAPPED = "E_swapped"
    S_AB = "S_AB"
    S_AA = "S_AA"
    EP = "Ep"
    EP_STATE = "ep"


@dataclass(frozen=True)
class MetricValue:
    value: float
    kind: Kind
    bipartition: Bipartition

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class MCEstimate:
    estimate: float
    stderr: float
    nsamples: int

    def within(self, target: float, nsigma: float = 4.0) -> bool:
        return abs(self.estimate - target) <= nsigma * self.stderr


@dataclass(frozen=True)
class IdentityCheck:
    """Closed-form value next to its Monte-Carlo entropy-production estimate."""

    lhs: MetricValue
    rhs_mc: float
    stderr: float


@dataclass(frozen=True)
class TypicalValues:
    ep_bound: float
    s_ab_star: float
    s_aa_star: float


@dataclass(frozen=True)
class FeasibilityCoords:
    I1: float
    I2: float

    def satisfies_bounds(self, atol: float = 1e-10) -> bool:
        i1, i2 = max(self.I1, 0.0), max(self.I2, 0.0)
        return (self.I1 + self.I2 >= 1 / 3 - atol) and (np.sqrt(i1) + np.sqrt(i2) <= 1 + atol)


def _mc_summary(samples) -> MCEstimate:
    x = np.asarray(samples, dtype=float)
    n = x.size
    # np.sum reduces contiguous float arrays pairwise
    mean = float(np.sum(x) / n)
    stderr = float(np.sqrt(np.sum((x - mean) ** 2) / (n - 1) / n)) if n > 1 else float("inf")
    return MCEstimate(mean, stderr, n)


def linear_entropy(rho: np.ndarray) -> float:
    """``1 - Tr(rho^2)`` for a normalized density matrix."""
    rho = as_matrix(rho)
    return float(1.0 - np.vdot(rho.conj().T, rho).real)


def swap_full(bip: Bipartition) -> np.ndarray:
    """Swap of the two factors of a symmetric bipartition as a ``d x d`` matrix."""
    if not bip.is_symmetric:
        raise ValueError("the A<->B swap is only an operator on H for dA == dB")
    return swap_operator(bip.dA)


def schmidt_weights(o: np.ndarray, bip: Bipartition) -> np.ndarray:
    """Normalized operator-Schmidt weights (sum to 1) of ``o`` across ``A:B``."""
    s = np.linalg.svd(realign(o, bip), compute_uv=False) ** 2
    total = s.sum()
    if total <= 0:
        raise ValueError("operator entanglement of the zero operator is undefined")
    return s / total


def operator_entanglement(o: np.ndarray, bip: Bipartition) -> float:
    """Linear entropy of the normalized operator-Schmidt spectrum of any nonzero ``o``.

    For unitary ``o`` this coincides with :func:`op_entanglement`; it stays
    well defined when ``o`` is only approximately unitary.
    """
    w = schmidt_weights(as_matrix(o), bip)
    return float(1.0 - np.sum(w * w))


def _check(u, bip: Bipartition) -> np.ndarray:
    return require_unitary(u, bip.d)


def op_entanglement(u, bip: Bipartition) -> MetricValue:
    """Operator entanglement ``E(U)`` across ``A:B``.

    Computed as ``1 - ||R R^dag||_2^2 / d^2`` with ``R`` the realigned
    matrix; the ``B`` side (``||R^dag R||_2^2``) is evaluated as well and the
    two must agree.
    """
    u = _check(u, bip)
    r = realign(u, bip)
    ra = r @ dagger(r)
    rb = dagger(r) @ r
    d2 = float(bip.d) ** 2
    ea = 1.0 - np.vdot(ra, ra).real / d2
    eb = 1.0 - np.vdot(rb, rb).real / d2
    assert abs(ea - eb) <= 1e-12, (ea, eb)
    return MetricValue(float(ea), Kind.E, bip)


def op_entanglement_swapped(u, bip: Bipartition) -> MetricValue:
    """``E(U S)`` for a symmetric bipartition."""
    u = _check(u, bip)
    e = op_entanglement(u @ swap_full(bip), bip).value
    return MetricValue(e, Kind.E_SWAPPED, bip)


def op_entanglement_trace(u, bip: Bipartition, side: str = "A") -> float:
    """Doubled-space evaluation ``1 - Tr(S_XX' U(x)U S_XX' U^dag(x)U^dag) / d^2``.

    Builds ``d^2 x d^2`` matrices; meant for small ``d`` and tests.
    """
    u = _check(u, bip)
    s = subsystem_swap(bip, "AA'" if side.upper().startswith("A") else "BB'")
    uu = np.kron(u, u)
    val = np.trace(s @ uu @ s @ dagger(uu))
    return float(1.0 - val.real / bip.d**2)


def _twirled_swap_traces(u: np.ndarray, bip: Bipartition) -> tuple[float, float]:
    """``Tr(S_BB' W)`` and ``Tr(S_AA' W)`` for ``W = (U^dag)^(x2) S_BB' U^(x2)``.

    ``W = sum_ij Z_ij (x) Z_ji`` with ``Z_ij = U^dag (1_A (x) |i><j|) U``; both
    traces then reduce to single-copy partial traces of the ``Z_ij``.
    """
    dA, dB = bip.dA, bip.dB
    t = u.reshape(dA, dB, dA, dB)  # [alpha, i, a, b]
    # Tr_A Z_ij and Tr_B Z_ij
    tra = np.einsum("xiab,xjac->ijbc", t.conj(), t, optimize=True)
    trb = np.einsum("xiab,xjcb->ijac", t.conj(), t, optimize=True)
    t_bb = np.einsum("ijbc,jicb->", tra, tra, optimize=True)
    t_aa = np.einsum("ijac,jica->", trb, trb, optimize=True)
    return float(t_bb.real), float(t_aa.real)


def man_ab(u, bip: Bipartition) -> MetricValue:
    """Mutual averaged non-commutativity ``S(U(A):B)``; equals ``E(U)``."""
    u = _check(u, bip)
    t_bb, _ = _twirled_swap_traces(u, bip)
    return MetricValue(1.0 - t_bb / bip.d**2, Kind.S_AB, bip)


def man_aa(u, bip: Bipartition) -> MetricValue:
    """Mutual averaged non-commutativity ``S(U(A):A)``.

    Equals ``1 - 1/dA^2`` at ``U = 1`` and ``E(U S)`` for a symmetric cut.
    """
    u = _check(u, bip)
    _, t_aa = _twirled_swap_traces(u, bip)
    return MetricValue(1.0 - t_aa / (bip.d * bip.dA**2), Kind.S_AA, bip)


def man_trace(u, bip: Bipartition, second: str = "B") -> float:
    """Doubled-space ``1 - Tr(S  U^(x2)(S_AA'/dA)  S_YY'/dY) / d`` with ``Y`` = ``second``."""
    u = _check(u, bip)
    s_full = subsystem_swap(bip, "full")
    s_aa = subsystem_swap(bip, "AA'")
    uu = np.kron(u, u)
    evolved = uu @ (s_aa / bip.dA) @ dagger(uu)
    if second.upper().startswith("B"):
        other = subsystem_swap(bip, "BB'") / bip.dB
    else:
        other = s_aa / bip.dA
    return float(1.0 - np.trace(s_full @ evolved @ other).real / bip.d)


def ep_symmetric(e_u: float, e_us: float, d: int) -> float:
    """Operator space entangling power from ``E(U)``, ``E(US)`` at ``dA = dB``."""
    es = 1.0 - 1.0 / d
    x, y = e_u / es, e_us / es
    return 1.0 - (1.0 - x) ** 2 - (1.0 - y) ** 2 - (2.0 / d) * x * y


def ep_general(s_ab: float, s_aa: float, dA: int, dB: int) -> float:
    """Operator space entangling power from the two non-commutativities, ``dB >= dA``."""
    if dA == 1 or dB == 1:
        return 0.0
    s0 = 1.0 - 1.0 / dA**2
    x, y = s_ab / s0, s_aa / s0
    norm = (dB**2 / dA**2) * (dA**2 - 1) / (dB**2 - 1)
    bracket = 1.0 - (1.0 - x) ** 2 - (dA**2 / dB**2) * (1.0 - y) ** 2 - (2.0 / dB**2) * x * y
    return norm * bracket


def relabel(u: np.ndarray, bip: Bipartition) -> tuple[np.ndarray, Bipartition]:
    """Re-express ``u`` on ``B (x) A``."""
    p = permutation_matrix((bip.dA, bip.dB), (1, 0))
    return p @ u @ dagger(p), bip.swapped()


def op_space_entangling_power(u, bip: Bipartition) -> MetricValue:
    """Haar-averaged operator entanglement generated on product unitaries ``X_A (x) Y_B``.

    Evaluated in closed form from ``S(U(A):B)`` and ``S(U(A):A)``.  The
    closed form assumes ``dB >= dA``; otherwise the factors are relabeled.
    """
    u = _check(u, bip)
    work_u, work_bip = u, bip
    if bip.dA > bip.dB:
        log.info("relabeling bipartition (%d, %d) -> (%d, %d) so that dB >= dA",
                 bip.dA, bip.dB, bip.dB, bip.dA)
        work_u, work_bip = relabel(u, bip)
    t_bb, t_aa = _twirled_swap_traces(work_u, work_bip)
    d = work_bip.d
    s_ab = 1.0 - t_bb / d**2
    s_aa = 1.0 - t_aa / (d * work_bip.dA**2)
    return MetricValue(ep_general(s_ab, s_aa, work_bip.dA, work_bip.dB), Kind.EP, bip)


def mc_entangling_power(u, bip: Bipartition, nsamples: int = 2000, rng=None) -> MCEstimate:
    """Monte-Carlo estimate of the operator space entangling power.

    Averages the operator entanglement of ``U (X_A (x) Y_B) U^dag`` over Haar
    ``X_A``, ``Y_B``.
    """
    if nsamples < 100:
        raise ValueError("nsamples must be >= 100")
    u = _check(u, bip)
    rng = as_stream(rng)
    ud = dagger(u)
    samples = np.empty(nsamples)
    for k in range(nsamples):
        x = haar_unitary(bip.dA, rng)
        y = haar_unitary(bip.dB, rng)
        samples[k] = operator_entanglement(u @ np.kron(x, y) @ ud, bip)
    return _mc_summary(samples)


def entropy_identity_check(u, bip: Bipartition, nsamples: int = 2000, rng=None,
                           which: str = "AB") -> IdentityCheck:
    """Compare a non-commutativity with its average-entropy-production form.

    ``which="AB"``: ``S(U(A):B) = (dA+1)/dA * E_psi S_lin[Tr_B U(rho_psi)]``.
    ``which="AA"``: ``S(U(A):A) = (dA+1)/dA * (dB/dA * E_psi S_lin[Tr_A U(rho_psi)] + 1 - dB/dA)``.
    Here ``rho_psi = |psi><psi| (x) 1_B/dB`` with Haar ``psi`` on ``A``.
    """
    if nsamples < 100:
        raise ValueError("nsamples must be >= 100")
    u = _check(u, bip)
    rng = as_stream(rng)
    dA, dB = bip.dA, bip.dB
    dims = (dA, dB)
    keep = [0] if which.upper() == "AB" else [1]
    ud = dagger(u)
    eye_b = np.eye(dB) / dB
    samples = np.empty(nsamples)
    for k in range(nsamples):
        psi = haar_state(dA, rng)
        rho = np.kron(psi @ dagger(psi), eye_b)
        red = partial_trace(u @ rho @ ud, dims, keep)
        samples[k] = linear_entropy(red)
    est = _mc_summary(samples)
    pref = (dA + 1) / dA
    if which.upper() == "AB":
        lhs = man_ab(u, bip)
        return IdentityCheck(lhs, pref * est.estimate, pref * est.stderr)
    if which.upper() == "AA":
        lhs = man_aa(u, bip)
        r = dB / dA
        return IdentityCheck(lhs, pref * (r * est.estimate + 1 - r), pref * r * est.stderr)
    raise ValueError(f"which must be 'AB' or 'AA', got {which!r}")


def mc_state_entangling_power(u, bip: Bipartition, nsamples: int = 2000, rng=None) -> MCEstimate:
    """Average ``S_lin[Tr_A U(psi (x) phi)]`` over Haar product states."""
    u = _check(u, bip)
    rng = as_stream(rng)
    samples = np.empty(nsamples)
    for k in range(nsamples):
        psi = haar_state(bip.dA, rng)
        phi = haar_state(bip.dB, rng)
        out = (u @ np.kron(psi, phi)).reshape(bip.dA, bip.dB)
        rho_b = out.T @ out.conj()
        samples[k] = 1.0 - np.vdot(rho_b.conj().T, rho_b).real
    return _mc_summary(samples)


def state_entangling_power(u, bip: Bipartition, nsamples: int = 2000, rng=None) -> MetricValue:
    """State-space entangling power.

    Closed form ``d/(sqrt(d)+1)^2 (E(U) + E(US) - E(S))`` for a symmetric
    cut; a Monte-Carlo average over product states otherwise.
    """
    u = _check(u, bip)
    if bip.is_symmetric:
        d = bip.d
        e_u = op_entanglement(u, bip).value
        e_us = op_entanglement_swapped(u, bip).value
        val = d / (np.sqrt(d) + 1) ** 2 * (e_u + e_us - (1 - 1 / d))
        return MetricValue(float(val), Kind.EP_STATE, bip)
    return MetricValue(mc_state_entangling_power(u, bip, nsamples, rng).estimate, Kind.EP_STATE, bip)


def typical_values(bip: Bipartition) -> TypicalValues:
    """Upper bound of the entangling power and the Haar-typical non-commutativities."""
    dA, dB = min(bip.dA, bip.dB), max(bip.dA, bip.dB)
    d = dA * dB
    if d == 1:
        return TypicalValues(0.0, 0.0, 0.0)
    bound = (dA**2 - 1) * (dB**2 - 1) / (d**2 - 1)
    s_aa = (dB**2 / dA**2) * (dA**2 - 1) ** 2 / (d**2 - 1)
    return TypicalValues(bound, bound, s_aa)


def feasibility_coords(u) -> FeasibilityCoords:
    """Two-qubit coordinates ``I1 = 1 - 4/3 E(U)``, ``I2 = 1 - 4/3 E(US)``."""
    u = as_matrix(u)
    if u.shape != (4, 4):
        raise ValueError(f"feasibility coordinates need a 2-qubit unitary, got shape {u.shape}")
    bip = Bipartition(2, 2)
    e1 = op_entanglement(u, bip).value
    e2 = op_entanglement_swapped(u, bip).value
    return FeasibilityCoords(1 - 4 / 3 * e1, 1 - 4 / 3 * e2)


def twirl(x: np.ndarray, d: int) -> np.ndarray:
    """Haar twirl ``E_V V(x)V X V^dag(x)V^dag`` on ``C^d (x) C^d`` in closed form.

    Projection onto ``span{1, S}`` via the symmetric and antisymmetric
    projectors.
    """
    x = as_matrix(x)
    one = np.eye(d * d)
    s = swap_operator(d)
    out = np.zeros_like(x)
    for eta in (1, -1):
        if d + eta == 0:
            continue
        p = one + eta * s
        out += p * np.trace(p @ x) / (2 * d * (d + eta))
    return out


def mc_twirl(x: np.ndarray, d: int, nsamples: int, rng=None) -> np.ndarray:
    rng = as_stream(rng)
    x = as_matrix(x)
    acc = np.zeros_like(x)
    for _ in range(nsamples):
        v = haar_unitary(d, rng)
        vv = np.kron(v, v)
        acc += vv @ x @ dagger(vv)
    return acc / nsamples


def renyi2_from_linear(s_lin: float) -> float:
    """2-Renyi entropy from the linear entropy, ``S2 = -ln(1 - S_lin)``.

    Inverse relation: ``S_lin = 1 - exp(-S2)``.  Writing it as
    ``1 - exp(+S2)`` is a common sign slip; that form would be negative.
    """
    return float(-np.log1p(-s_lin))


def linear_from_renyi2(s2: float) -> float:
    return float(-np.expm1(-s2))


def summary(u, bip: Bipartition) -> dict:
    """All closed-form metrics for one unitary, as plain floats."""
    u = _check(u, bip)
    out = {
        "dA": bip.dA,
        "dB": bip.dB,
        "E": op_entanglement(u, bip).value,
        "S_AB": man_ab(u, bip).value,
        "S_AA": man_aa(u, bip).value,
        "Ep": op_space_entangling_power(u, bip).value,
    }
    tv = typical_values(bip)
    out["bounds"] = {"ep_bound": tv.ep_bound, "s_ab_star": tv.s_ab_star, "s_aa_star": tv.s_aa_star}
    if bip.is_symmetric:
        out["E_US"] = op_entanglement_swapped(u, bip).value
        out["ep"] = state_entangling_power(u, bip).value
    else:
        out["E_US"] = None
        out["ep"] = None
    return out


__all__ = [
    "Kind", "MetricValue", "MCEstimate", "IdentityCheck", "TypicalValues", "FeasibilityCoords",
    "linear_entropy", "schmidt_weights", "operator_entanglement", "op_entanglement",
    "op_entanglement_swapped", "op_entanglement_trace", "man_ab", "man_aa", "man_trace",
    "ep_symmetric", "ep_general", "op_space_entangling_power", "mc_entangling_power",
    "entropy_identity_check", "mc_state_entangling_power", "state_entangling_power",
    "typical_values", "feasibility_coords", "twirl", "mc_twirl", "renyi2_from_linear",
    "linear_from_renyi2", "swap_full", "summary",
]
