"""Dual-unitary brickwork circuits of qubits.

A two-qubit gate ``V`` is dual-unitary when both ``V`` and its space-time
reshuffle are unitary.  Every such gate is, up to single-site unitaries and
a phase,

    exp(-i (pi/4 XX + pi/4 YY + J ZZ)).

The half-chain local operator entanglement of a brickwork circuit of such
gates is computed here in two ways: exactly from the circuit unitary, and at
the first nontrivial time ``t*`` from powers of small transfer matrices.

Folding convention: ``|m><n| -> |m> (x) |n>`` in the computational basis, so
the adjoint action ``X -> V X V^dag`` becomes ``V (x) V*``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache, reduce

import numpy as np
from scipy.optimize import curve_fit

from .metrics import op_entanglement_swapped, operator_entanglement
from .tensor import SIGMA_X, SIGMA_Y, SIGMA_Z, Bipartition, as_matrix, dagger, expm_hermitian_phase

Q = 2
MAX_CIRCUIT_SITES = 12
# the Gram-matrix route needs O(4^L) complex entries in its largest temporary
MAX_GRAM_SITES = 8
MAX_EXACT_SITES = 10
DEFAULT_J_POINTS = 65


@dataclass(frozen=True)
class SU2Params:
    r: float = 0.5
    omega: float = 0.7
    theta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise ValueError(f"r must lie in [0, 1], got {self.r}")
        for name in ("omega", "theta"):
            val = getattr(self, name)
            if not 0.0 <= val <= 4 * np.pi:
                raise ValueError(f"{name} must lie in [0, 4 pi], got {val}")


def su2(p: SU2Params | None = None, *, r=None, omega=None, theta=None) -> np.ndarray:
    """Special unitary from ``(r, omega, theta)``.

    Either pass an :class:`SU2Params` or the three keywords.
    """
    if p is None:
        p = SU2Params(0.5 if r is None else r, 0.7 if omega is None else omega,
                      0.0 if theta is None else theta)
    s = np.sqrt(1.0 - p.r**2)
    return np.array([
        [p.r * np.exp(0.5j * p.omega), -s * np.exp(-0.5j * p.theta)],
        [s * np.exp(0.5j * p.theta), p.r * np.exp(-0.5j * p.omega)],
    ])


DEFAULT_V = su2(SU2Params())


@dataclass(frozen=True)
class DUGateSpec:
    J: float
    phi: float = 0.0
    u_plus: np.ndarray = field(default_factory=lambda: np.eye(2, dtype=complex))
    u_minus: np.ndarray = field(default_factory=lambda: np.eye(2, dtype=complex))
    v_plus: np.ndarray = field(default_factory=lambda: DEFAULT_V.copy())
    v_minus: np.ndarray = field(default_factory=lambda: DEFAULT_V.copy())
    q: int = Q

    def __post_init__(self):
        if self.q != Q:
            raise ValueError("the parametrized dual-unitary family is defined for q = 2 only")

    @classmethod
    def bare(cls, J: float) -> "DUGateSpec":
        """Interaction core only: all single-site unitaries set to the identity."""
        eye = np.eye(2, dtype=complex)
        return cls(J, 0.0, eye, eye, eye, eye)


def interaction_core(J: float) -> np.ndarray:
    h = np.pi / 4 * np.kron(SIGMA_X, SIGMA_X) + np.pi / 4 * np.kron(SIGMA_Y, SIGMA_Y) \
        + J * np.kron(SIGMA_Z, SIGMA_Z)
    return expm_hermitian_phase(h, -1.0)


def du_gate(spec: DUGateSpec | float) -> np.ndarray:
    """Two-qubit dual-unitary gate; a bare float is taken as ``J`` with default locals."""
    if not isinstance(spec, DUGateSpec):
        spec = DUGateSpec(float(spec))
    outer = np.kron(as_matrix(spec.u_plus), as_matrix(spec.u_minus))
    inner = np.kron(as_matrix(spec.v_plus), as_matrix(spec.v_minus))
    return np.exp(1j * spec.phi) * outer @ interaction_core(spec.J) @ inner


def reshuffle(v: np.ndarray, q: int = Q) -> np.ndarray:
    """Space-time dual ``V~[(o2, i2), (o1, i1)] = V[(o1, o2), (i1, i2)]``.

    Site 1 legs (output ``o1``, input ``i1``) become the input of ``V~``.
    """
    return as_matrix(v).reshape(q, q, q, q).transpose(1, 3, 0, 2).reshape(q * q, q * q)


def check_dual_unitarity(v, q: int = Q, atol: float = 1e-12) -> bool:
    v = np.asarray(v, dtype=complex)
    if v.shape != (q * q, q * q):
        raise ValueError(f"expected a {q*q}x{q*q} gate, got shape {v.shape}")
    eye = np.eye(q * q)
    w = reshuffle(v, q)
    return bool(np.max(np.abs(dagger(v) @ v - eye)) <= atol
                and np.max(np.abs(dagger(w) @ w - eye)) <= atol)


def _require_du(v, q: int) -> np.ndarray:
    v = as_matrix(v)
    if not check_dual_unitarity(v, q, atol=1e-10):
        raise ValueError("gate is not dual-unitary; the transfer-matrix identities do not apply")
    return v


def brickwork_unitary(v, L: int, t: int) -> np.ndarray:
    """``(U_o U_e)^t`` on ``L`` qubits, site 1 being the most significant factor."""
    v = as_matrix(v)
    q = int(round(np.sqrt(v.shape[0])))
    if L < 2 or L % 2:
        raise ValueError(f"L must be a positive even integer, got {L}")
    if t < 0 or int(t) != t:
        raise ValueError(f"t must be a nonnegative integer, got {t}")
    if L > MAX_CIRCUIT_SITES:
        raise ValueError(f"L={L} exceeds the dense circuit limit of {MAX_CIRCUIT_SITES} sites")
    u_even = reduce(np.kron, [v] * (L // 2))
    if L == 2:
        u_odd = np.eye(q * q, dtype=complex)
    else:
        u_odd = reduce(np.kron, [np.eye(q)] + [v] * (L // 2 - 1) + [np.eye(q)])
    return np.linalg.matrix_power(u_odd @ u_even, int(t))


def t_star(L: int) -> int:
    if L < 2 or L % 2:
        raise ValueError(f"L must be a positive even integer, got {L}")
    return L // 2 - L // 4


def _e_loc_gram(u: np.ndarray, L: int, q: int) -> float:
    d = q**L
    dA = dB = q ** (L // 2)
    n = d // q
    t = u.reshape(dA, dB, q, n)
    # z[i, j, a, x, b, y] = <a x|U^dag (1_A (x) |i><j|_B) U|b y>, x and y running over sites 2..L
    z = np.einsum("piax,pjby->ijaxby", t.conj(), t)
    b = z.transpose(0, 1, 2, 4, 3, 5).reshape(dB * dB * q * q, n * n)
    g = (b.conj() @ b.T).reshape(dB, dB, q, q, dB, dB, q, q)
    t00 = np.einsum("ijsskltt,jiuulkvv->", g, g)
    t11 = np.einsum("ijabklce,jibalkec->", g, g)
    t01 = np.einsum("ijssklcr,jiuulkrc->", g, g)
    return float(1.0 - (t00 + t11 - 2.0 / q * t01).real / (d * d * (q * q - 1)))


def e_loc_exact(v, L: int, t: int) -> float:
    """Half-chain operator entanglement of ``U_t (u (x) 1) U_t^dag``, averaged over Haar ``u``.

    Evaluated in closed form from the swap-twirled traces for ``L <= 8``; for
    ``L = 10`` the average is taken exactly over the single-qubit Clifford
    group, which is a unitary 3-design.
    """
    v = as_matrix(v)
    q = int(round(np.sqrt(v.shape[0])))
    if L > MAX_EXACT_SITES:
        raise ValueError(f"L={L} exceeds the exact E_loc limit of {MAX_EXACT_SITES}")
    u = brickwork_unitary(v, L, t)
    if L <= MAX_GRAM_SITES:
        return _e_loc_gram(u, L, q)
    return e_loc_design(v, L, t, _u=u)


@lru_cache(maxsize=None)
def clifford_group() -> tuple[np.ndarray, ...]:
    """The 24 single-qubit Clifford unitaries modulo phase."""
    had = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    phase = np.diag([1, 1j])

    def canon(m):
        flat = m.ravel()
        k = int(np.argmax(np.abs(flat) > 1e-9))
        return m * (abs(flat[k]) / flat[k])

    group = [np.eye(2, dtype=complex)]
    frontier = list(group)
    while frontier:
        new = []
        for g in frontier:
            for h in (had, phase):
                c = canon(h @ g)
                if not any(np.allclose(c, x) for x in group):
                    group.append(c)
                    new.append(c)
        frontier = new
    return tuple(group)


def e_loc_design(v, L: int, t: int, _u: np.ndarray | None = None) -> float:
    """``E_loc`` as an exact average over the single-qubit Clifford group."""
    v = as_matrix(v)
    u = brickwork_unitary(v, L, t) if _u is None else _u
    d = 2**L
    bip = Bipartition.symmetric(2 ** (L // 2))
    vals = [operator_entanglement(u @ np.kron(c, np.eye(d // 2)) @ dagger(u), bip)
            for c in clifford_group()]
    return float(np.mean(vals))


@dataclass(frozen=True)
class TransferSet:
    m_minus: np.ndarray
    m_plus: np.ndarray
    p: np.ndarray

    def check(self, v, q: int = Q, atol: float = 1e-12) -> dict[str, float]:
        """Deviations from the three norm identities of dual-unitary transfer matrices."""
        v = as_matrix(v)
        bip = Bipartition.symmetric(q)
        target = q * q * (1.0 - op_entanglement_swapped(v, bip).value)
        mm = np.vdot(self.m_minus, self.m_minus).real
        mp = np.vdot(self.m_plus, self.m_plus).real
        pp = np.vdot(self.p, self.p).real
        mpm = self.m_plus @ dagger(self.m_plus)
        return {
            "m_minus_norm": abs(mm - target),
            "m_plus_norm": abs(mp - target),
            "p_norm": abs(pp - q * q * np.vdot(mpm, mpm).real),
            "m_minus_spectral": abs(np.linalg.norm(self.m_minus, 2) - 1.0),
            "m_plus_spectral": abs(np.linalg.norm(self.m_plus, 2) - 1.0),
        }


def fold(v, q: int = Q) -> np.ndarray:
    """Folded gate ``W[o1, o2, i1, i2]`` of ``V (x) V*``; each leg has dimension ``q^2``."""
    t = as_matrix(v).reshape(q, q, q, q)
    return np.einsum("abcd,efgh->aebfcgdh", t, t.conj()).reshape(q * q, q * q, q * q, q * q)


def transfer_set(v, q: int = Q) -> TransferSet:
    """Light-cone transfer matrices ``M_-``, ``M_+`` and ``P`` of a dual-unitary gate.

    Closures use the normalized folded identity ``vec(1)/sqrt(q)``.
    """
    v = _require_du(v, q)
    w = fold(v, q)
    one = np.eye(q).reshape(q * q)
    m_minus = np.einsum("xoiy,x,y->oi", w, one, one) / q
    m_plus = np.einsum("oxyi,x,y->oi", w, one, one) / q
    p = np.einsum("xaik,ybjk,x,y->abij", w, w.conj(), one, one).reshape(q**4, q**4) / q
    return TransferSet(m_minus, m_plus, p)


def e_loc_tstar(v, L: int, q: int = Q) -> float:
    """``E_loc(t*)`` from powers of the transfer matrices."""
    if L < 2 or L % 2:
        raise ValueError(f"L must be a positive even integer, got {L}")
    ts = transfer_set(v, q)
    k = L // 2
    pk = np.linalg.matrix_power(ts.p, k)
    mk = np.linalg.matrix_power(ts.m_minus, k)
    norms = np.vdot(pk, pk).real - 2.0 * np.vdot(mk, mk).real
    return float(1.0 - 1.0 / (q * q - 1) - norms / (q * q * (q * q - 1)))


def ep_of_J(J):
    """Operator space entangling power of any gate in the family, as a function of ``J``."""
    J = np.asarray(J, dtype=float)
    out = np.cos(2 * J) ** 2 / 9.0 * (7.0 - 2.0 * np.cos(4 * J))
    return float(out) if out.ndim == 0 else out


def j_grid(points: int = DEFAULT_J_POINTS, upper: float = np.pi / 4) -> np.ndarray:
    if points < 2:
        raise ValueError("a J grid needs at least two points")
    return np.linspace(0.0, upper, points)


@dataclass(frozen=True)
class RelaxationFit:
    c: float
    lam: float
    residual: float
    origin: float

    def __call__(self, t):
        return relaxation_model(np.asarray(t, dtype=float), self.c, self.lam, self.origin)


def relaxation_model(t, c, lam, origin):
    return c * (1.0 - np.exp(-lam * (t - origin)))


def fit_relaxation(times, values, t_star: int, origin: float | None = None) -> RelaxationFit:
    """Least-squares fit of ``c (1 - exp(-lambda (t - origin)))``.

    ``origin`` defaults to ``t_star``.  Only points with ``t >= t_star``
    enter the fit.  ``residual`` is the root-mean-square misfit.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape:
        raise ValueError("times and values must have the same length")
    keep = times >= t_star
    times, values = times[keep], values[keep]
    if times.size < 4:
        raise ValueError(f"need at least 4 points with t >= t*={t_star}, got {times.size}")
    if np.max(np.abs(values)) <= 1e-14:
        raise ValueError("series is identically zero; the relaxation model is degenerate")
    t0 = float(t_star if origin is None else origin)
    c0 = float(values[-1]) if values[-1] != 0 else float(np.max(values))
    # log-linear estimate from 1 - E/c0 = exp(-lambda (t - t0))
    frac = 1.0 - values / c0
    ok = (frac > 1e-12) & (times > t0)
    if np.count_nonzero(ok) >= 2:
        slope = np.polyfit(times[ok] - t0, np.log(frac[ok]), 1)[0]
        lam0 = max(-slope, 1e-3)
    else:
        lam0 = 1.0

    def model(t, c, lam):
        return relaxation_model(t, c, lam, t0)

    try:
        (c, lam), _ = curve_fit(model, times, values, p0=[c0, lam0], maxfev=20000)
    except RuntimeError as exc:
        raise ValueError(f"relaxation fit did not converge: {exc}") from exc
    resid = float(np.sqrt(np.mean((model(times, c, lam) - values) ** 2)))
    return RelaxationFit(float(c), float(lam), resid, t0)


def scan_tstar(L_values, Js=None, spec_factory=None) -> list[tuple[float, float, float, int]]:
    """Rows ``(J, Ep_V, E_loc(t*), L)`` ordered by ``L`` then ``J``."""
    Js = j_grid() if Js is None else np.asarray(Js, dtype=float)
    make = spec_factory or DUGateSpec
    gates = [du_gate(make(float(J))) for J in Js]
    rows = []
    for L in L_values:
        for J, v in zip(Js, gates):
            rows.append((float(J), ep_of_J(J), e_loc_tstar(v, int(L)), int(L)))
    return rows


@dataclass
class RelaxationScan:
    Js: np.ndarray
    times: np.ndarray
    e_loc: np.ndarray  # [J, t]
    fits: list[RelaxationFit]

    @property
    def e_loc_tstar(self) -> np.ndarray:
        return self.e_loc[:, 0]

    def rows(self):
        for i, J in enumerate(self.Js):
            f = self.fits[i]
            for k, t in enumerate(self.times):
                yield (float(J), int(t), float(self.e_loc[i, k]), f.c, f.lam, f.residual)


def _relaxation_task(args):
    J, L, times = args
    v = du_gate(DUGateSpec(J))
    return [e_loc_exact(v, L, int(t)) for t in times]


def scan_relaxation(L: int = 6, Js=None, span: int = 12, jobs: int = 1,
                    origin: float | None = None) -> RelaxationScan:
    """Exact ``E_loc(t)`` for ``t = t*, ..., t* + span`` with a relaxation fit per ``J``."""
    Js = j_grid(13, 3 * np.pi / 16) if Js is None else np.asarray(Js, dtype=float)
    ts = t_star(L)
    times = np.arange(ts, ts + span + 1)
    tasks = [(float(J), L, times) for J in Js]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            series = list(ex.map(_relaxation_task, tasks))
    else:
        series = [_relaxation_task(task) for task in tasks]
    e = np.array(series)
    fits = [fit_relaxation(times, row, ts, origin) for row in e]
    return RelaxationScan(Js, times, e, fits)


def gauge_transform(v, u, w) -> np.ndarray:
    """``(w (x) u) V (u^dag (x) w^dag)``.

    Leaves ``E_loc(t)`` unchanged for ``t <= t*``.  With open ends the boundary
    sites are left with ``u^dag w`` between periods, so at later times the
    invariance holds only for ``u = w``.
    """
    return np.kron(w, u) @ as_matrix(v) @ np.kron(dagger(u), dagger(w))
