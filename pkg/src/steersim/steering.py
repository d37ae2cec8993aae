"""Dynamic interference steering: choosing the steering factor.

For one stream and one interference the PUE's SINR as a function of the
steering factor is the rational function

    phi(rho) = (a - rho^2 b) / (c - rho d + rho^2 e)

with ``a = p0e lam^2``, ``b = q ||g||^2 lam^2``, ``c = q |chi|^2 + sigma2``,
``d = 2 q |chi|^2`` and ``e = q |chi|^2``. Its stationary points solve
``(b d / 2) rho^2 - (b c + a e) rho + a d / 2 = 0``; only the smaller root
lies in the feasible range ``(0, rho_max]`` and it is the maximizer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from .channel import Drop
from .errors import DomainError, NumericalAssertionError
from .schemes import (
    BUDGET_RTOL,
    DEGENERATE_RTOL,
    Fallback,
    Scheme,
    SchemeResult,
    SteeringTable,
    _with_fallback,
    fits,
    mf,
    steer,
    steering_table,
)


@dataclass(frozen=True)
class RhoCoefficients:
    a: float
    b: float
    c: float
    d: float
    e: float

    @classmethod
    def from_terms(cls, p0e, q, lam2, g2, chi2, sigma2) -> "RhoCoefficients":
        e = q * chi2
        return cls(a=p0e * lam2, b=q * g2 * lam2, c=e + sigma2, d=2.0 * e, e=e)


@dataclass(frozen=True)
class RhoSolution:
    """Optimal steering factor of a single-interference, single-stream link.

    ``rho_plus`` and ``delta`` are the rejected root and the discriminant of
    the stationarity quadratic (``nan`` for degenerate links).
    """

    rho_star: float
    rho_max: float
    sinr_at_star: float
    clamped: bool
    degenerate: bool
    rho_plus: float = math.nan
    delta: float = math.nan

    def __post_init__(self):
        for name in ("rho_star", "rho_max", "sinr_at_star", "rho_plus", "delta"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for name in ("clamped", "degenerate"):
            object.__setattr__(self, name, bool(getattr(self, name)))


def sinr_dis(coeffs: RhoCoefficients, rho: float) -> float:
    k = coeffs
    return (k.a - rho * rho * k.b) / (k.c - rho * k.d + rho * rho * k.e)


def rho_max_value(p0e: float, q: float, g2: float) -> float:
    """Largest steering factor the PBS power can pay for, capped at 1."""
    cost = q * g2
    if cost <= p0e:
        return 1.0
    return math.sqrt(p0e / cost)


def rho_max(drop: Drop) -> float:
    t = _single(drop)
    if _g_degenerate(t, 0, 0):
        return 1.0
    return rho_max_value(t.budgets[0], t.q[0], t.g2[0, 0])


def _single(drop: Drop) -> SteeringTable:
    if drop.n_streams_pbs != 1 or drop.n_interferences != 1:
        raise DomainError("expected one desired stream and one interference")
    return steering_table(drop)


def _chi_degenerate(t: SteeringTable, m: int, n: int) -> bool:
    return t.q[n] == 0.0 or t.chi2[m, n] <= DEGENERATE_RTOL * t.y2[n]


def _g_degenerate(t: SteeringTable, m: int, n: int) -> bool:
    return t.q[n] == 0.0 or t.g2[m, n] <= DEGENERATE_RTOL * t.y2[n] / t.lam2[m]


def stationary_roots(k: RhoCoefficients) -> tuple[float, float, float]:
    """``(rho_minus, rho_plus, delta)`` of the stationarity quadratic.

    Both factors of ``delta = (bc + ae)^2 - ab d^2`` are formed directly;
    the second, ``bc + ae - sqrt(ab) d``, is rewritten as
    ``b (c - e) + e (sqrt(a) - sqrt(b))^2 + (2e - d) sqrt(ab)`` to avoid
    cancellation. ``rho_minus`` uses the product of the roots (``a / b``).
    """
    s = k.b * k.c + k.a * k.e
    sab = math.sqrt(k.a * k.b)
    hi = s + sab * k.d
    lo = k.b * (k.c - k.e) + k.e * (math.sqrt(k.a) - math.sqrt(k.b)) ** 2 + (2.0 * k.e - k.d) * sab
    delta = hi * lo
    if not delta > 0.0:
        raise NumericalAssertionError(f"discriminant not positive: {delta!r} for {k}")
    root = math.sqrt(delta)
    rho_minus = k.a * k.d / (s + root)
    rho_plus = (s + root) / (k.b * k.d) if k.b > 0 else math.inf
    return rho_minus, rho_plus, delta


def solve_rho(p0e, q, lam2, g2, chi2, sigma2, y2) -> RhoSolution:
    """Closed-form optimal steering factor for one (stream, interference) pair.

    ``p0e`` is the PBS power available to this pair and ``y2`` the squared
    norm of the unit-power interference channel (scale for degeneracy).
    """
    k = RhoCoefficients.from_terms(p0e, q, lam2, g2, chi2, sigma2)
    g_deg = q == 0.0 or g2 <= DEGENERATE_RTOL * y2 / lam2
    rmax = 1.0 if g_deg else rho_max_value(p0e, q, g2)
    if q == 0.0 or chi2 <= DEGENERATE_RTOL * y2:
        return RhoSolution(0.0, rmax, k.a / k.c, clamped=False, degenerate=True)
    rho_minus, rho_plus, delta = stationary_roots(k)
    clamped = rho_minus > rmax
    rho = rmax if clamped else rho_minus
    return RhoSolution(rho, rmax, sinr_dis(k, rho), clamped, g_deg, rho_plus, delta)


def _dis_candidate(drop: Drop, table: SteeringTable, rho: float) -> SchemeResult:
    if rho == 0.0:
        return mf(drop)
    return steer(drop, rho, table)[0]


def optimal_rho(drop: Drop) -> RhoSolution:
    """Optimal steering factor for a one-stream, one-interference drop.

    The closed-form root is compared against the end points ``rho_max`` and
    0 (plain matched filtering) through the same arithmetic that produces
    the reported SE; an end point only replaces the root when it is at least
    as good, which can happen only through rounding when they nearly coincide.
    """
    t = _single(drop)
    sol = solve_rho(t.budgets[0], t.q[0], t.lam2[0], t.g2[0, 0], t.chi2[0, 0],
                    drop.budget.sigma2, t.y2[0])
    best_rho = sol.rho_star
    best_se = _dis_candidate(drop, t, best_rho).se_bits
    for cand in (sol.rho_max, 0.0):
        if cand == best_rho:
            continue
        se = _dis_candidate(drop, t, cand).se_bits
        if se > best_se:
            best_rho, best_se = cand, se
    if best_rho != sol.rho_star:
        k = RhoCoefficients.from_terms(t.budgets[0], t.q[0], t.lam2[0], t.g2[0, 0],
                                       t.chi2[0, 0], drop.budget.sigma2)
        sol = replace(sol, rho_star=best_rho, sinr_at_star=sinr_dis(k, best_rho))
    return sol


def _as_dis(res: SchemeResult, rho, rhos) -> SchemeResult:
    return replace(res, scheme=Scheme.DIS, rho=float(rho), rhos=tuple(float(r) for r in rhos),
                   feasible=True, fallback_applied=None)


def split_budget(stream_budget: float, q: np.ndarray, g2: np.ndarray, split: str = "equal") -> np.ndarray:
    """Split one stream's PBS power across the interference terms.

    ``equal`` gives each term the same share; ``proportional`` weights each
    term by its orthogonal-steering cost ``q_n ||g_n||^2``.
    """
    N = len(q)
    if split == "equal":
        return np.full(N, stream_budget / N)
    if split == "proportional":
        w = np.asarray(q) * np.asarray(g2)
        if not np.sum(w) > 0:
            return np.full(N, stream_budget / N)
        return stream_budget * w / np.sum(w)
    raise DomainError(f"unknown budget split {split!r}")


def _per_pair_rhos(drop: Drop, t: SteeringTable, pair_budgets: np.ndarray) -> np.ndarray:
    M, N = t.chi2.shape
    R = np.zeros((M, N))
    for m in range(M):
        for n in range(N):
            R[m, n] = solve_rho(pair_budgets[m, n], t.q[n], t.lam2[m], t.g2[m, n], t.chi2[m, n],
                                drop.budget.sigma2, t.y2[n]).rho_star
    return R


def _steer_checked(drop: Drop, R: np.ndarray, t: SteeringTable) -> SchemeResult:
    res, ok = steer(drop, R, t)
    if not ok:
        raise NumericalAssertionError("steering factors exceed their power budgets")
    return _as_dis(res, np.mean(R), R.ravel())


def dis(drop: Drop, split: str = "equal") -> SchemeResult:
    """Dynamic interference steering.

    One stream and one interference use :func:`optimal_rho`. Otherwise each
    stream gets ``p0e / M`` and every (stream, interference) pair is
    optimized on its share of that power (see :func:`split_budget`).
    Always feasible, so no fallback is ever applied.
    """
    if drop.n_streams_pbs == 1 and drop.n_interferences == 1:
        sol = optimal_rho(drop)
        if sol.rho_star == 0.0:
            return _as_dis(mf(drop), 0.0, (0.0,))
        return _as_dis(steer(drop, sol.rho_star)[0], sol.rho_star, (sol.rho_star,))
    t = steering_table(drop)
    pair_budgets = np.stack([split_budget(t.budgets[m], t.q, t.g2[m], split)
                             for m in range(drop.n_streams_pbs)])
    return _steer_checked(drop, _per_pair_rhos(drop, t, pair_budgets), t)


def dis_or_fallback(drop: Drop, fallback=Fallback.ZF, split: str = "equal") -> SchemeResult:
    """DIS that yields to ``fallback`` whenever orthogonal steering is unaffordable.

    In that power-limited regime (``rho_max < 1`` for a single pair) the
    steering signal is switched off and the fallback receiver is used, the
    same rule the fixed-factor schemes follow. The reported ``rho`` is still
    the optimized factor.
    """
    res = dis(drop, split)
    if steer(drop, 1.0)[1]:
        return res
    return _with_fallback(drop, res, Scheme.DIS, fallback)


def dis_multi_interference(drop: Drop, budgets: Sequence[float] | None = None,
                           split: str = "equal") -> SchemeResult:
    """DIS against ``N`` interference terms with one desired stream.

    Each steering factor is optimized on its own power budget; the desired
    stream keeps whatever power the steering signals leave over.
    """
    if drop.n_streams_pbs != 1:
        raise DomainError("multi-interference DIS expects a single desired stream")
    t = steering_table(drop)
    p0e = drop.budget.p0e
    if budgets is None:
        b = split_budget(p0e, t.q, t.g2[0], split)
    else:
        b = np.asarray(budgets, dtype=float)
        if b.shape != (drop.n_interferences,) or np.any(b < 0):
            raise DomainError("need one nonnegative budget per interference")
        if b.sum() > p0e * (1.0 + BUDGET_RTOL):
            raise DomainError(f"budgets sum to {b.sum()} > p0e = {p0e}")
    return _steer_checked(drop, _per_pair_rhos(drop, t, b[None, :]), t)


def dis_multi_stream(drop: Drop, stream_powers: Sequence[float] | None = None) -> SchemeResult:
    """DIS for ``M`` desired streams and one interference.

    Stream ``m`` protects itself with its own steering signal paid from its
    power ``stream_powers[m]`` (equal split by default); the steering signal
    of one stream is invisible to the other streams' filters.
    """
    if drop.n_interferences != 1:
        raise DomainError("multi-stream DIS expects a single interference")
    M = drop.n_streams_pbs
    p0e = drop.budget.p0e
    if stream_powers is None:
        powers = np.full(M, p0e / M)
    else:
        powers = np.asarray(stream_powers, dtype=float)
        if powers.shape != (M,) or np.any(powers < 0):
            raise DomainError(f"need {M} nonnegative stream powers")
        if abs(powers.sum() - p0e) > 1e-9 * p0e:
            raise DomainError(f"stream powers sum to {powers.sum()}, expected p0e = {p0e}")
    t = steering_table(drop, budgets=powers)
    return _steer_checked(drop, _per_pair_rhos(drop, t, powers[:, None]), t)


# ---------------------------------------------------------------------------
# Joint optimization for two interference terms
# ---------------------------------------------------------------------------

class JointRho(NamedTuple):
    rho1: float
    rho2: float
    se: float


@dataclass(frozen=True)
class TwoInterferenceObjective:
    """``f(r1, r2) = log2(1 + phi)`` with
    ``phi = (a - b1 r1^2 - b2 r2^2) / (s2 + e1 (1 - r1)^2 + e2 (1 - r2)^2)``.
    """

    a: float
    b: np.ndarray
    e: np.ndarray
    s2: float

    @classmethod
    def from_drop(cls, drop: Drop) -> "TwoInterferenceObjective":
        if drop.n_streams_pbs != 1 or drop.n_interferences != 2:
            raise DomainError("joint optimization needs one stream and two interferences")
        t = steering_table(drop)
        lam2 = t.lam2[0]
        return cls(
            a=drop.budget.p0e * lam2,
            b=t.q * t.g2[0] * lam2,
            e=t.q * t.chi2[0],
            s2=drop.budget.sigma2,
        )

    def _parts(self, r):
        r = np.asarray(r, dtype=float)
        num = self.a - np.sum(self.b * r ** 2)
        den = self.s2 + np.sum(self.e * (1.0 - r) ** 2)
        num_d = -2.0 * self.b * r
        den_d = -2.0 * self.e * (1.0 - r)
        return num, den, num_d, den_d

    def phi(self, r) -> float:
        num, den, _, _ = self._parts(r)
        return num / den

    def value(self, r) -> float:
        return math.log2(1.0 + self.phi(r))

    def grad(self, r) -> np.ndarray:
        num, den, num_d, den_d = self._parts(r)
        phi_d = (num_d * den - num * den_d) / den ** 2
        return phi_d / ((1.0 + num / den) * math.log(2.0))

    def hessian(self, r) -> np.ndarray:
        num, den, num_d, den_d = self._parts(r)
        phi = num / den
        phi_d = (num_d * den - num * den_d) / den ** 2
        num_dd = np.diag(-2.0 * self.b)
        den_dd = np.diag(2.0 * self.e)
        x = num_d * den - num * den_d
        x_d = num_dd * den + np.outer(num_d, den_d) - np.outer(den_d, num_d) - num * den_dd
        phi_dd = x_d / den ** 2 - 2.0 * np.outer(x, den_d) / den ** 3
        return (phi_dd * (1.0 + phi) - np.outer(phi_d, phi_d)) / ((1.0 + phi) ** 2 * math.log(2.0))

    def feasible(self, r) -> bool:
        r = np.asarray(r, dtype=float)
        return bool(np.all(r >= 0) and np.all(r <= 1) and self.a - np.sum(self.b * r ** 2) >= 0)

    def best_response(self, n: int, r_other: float) -> float | None:
        """Maximizer over ``r_n`` with the other factor held at ``r_other``.

        The restricted problem has the single-interference form, so the small
        root of its stationarity quadratic is the answer. ``None`` when no
        power is left for the desired stream on this line.
        """
        o = 1 - n
        a_eff = self.a - self.b[o] * r_other ** 2
        if a_eff <= 0.0:
            return None
        if self.e[n] <= 0.0:
            return 0.0
        k = RhoCoefficients(a=a_eff, b=self.b[n], c=self.s2 + self.e[o] * (1.0 - r_other) ** 2 + self.e[n],
                            d=2.0 * self.e[n], e=self.e[n])
        rho = stationary_roots(k)[0]
        cap = 1.0 if self.b[n] <= a_eff else math.sqrt(a_eff / self.b[n])
        return min(rho, cap)


def _stationary_points(obj: TwoInterferenceObjective, n_scan: int = 64) -> list[np.ndarray]:
    """Interior solutions of ``grad f = 0``.

    Every interior stationary point satisfies both best-response equations
    (the other roots of each partial derivative lie beyond ``rho_max``), so
    they are the zeros of ``F(r2) = BR2(BR1(r2)) - r2``.
    """
    hi = 1.0 if obj.b[1] <= obj.a else math.sqrt(obj.a / obj.b[1])

    def F(r2):
        r1 = obj.best_response(0, r2)
        if r1 is None:
            return math.nan
        r2n = obj.best_response(1, r1)
        return math.nan if r2n is None else r2n - r2

    xs = np.linspace(0.0, hi, n_scan + 1)
    fs = [F(x) for x in xs]
    roots = []
    for x0, x1, f0, f1 in zip(xs[:-1], xs[1:], fs[:-1], fs[1:]):
        if not (math.isfinite(f0) and math.isfinite(f1)):
            continue
        if f0 == 0.0:
            roots.append(x0)
        elif f0 * f1 < 0.0:
            roots.append(brentq(F, x0, x1, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    if fs and math.isfinite(fs[-1]) and fs[-1] == 0.0:
        roots.append(xs[-1])
    points = []
    for r2 in roots:
        r1 = obj.best_response(0, r2)
        if r1 is not None and 0.0 < r1 < 1.0 and 0.0 < r2 < 1.0:
            points.append(np.array([r1, r2]))
    return points


def joint_rho_n2(drop: Drop) -> JointRho:
    """Jointly optimal steering factors for two interference terms.

    Stationary points of ``f(r1, r2)`` are located and kept when the
    second-derivative test marks them as maxima (``f12^2 - f11 f22 < 0`` and
    ``f11 < 0``); they compete with the best points on the boundary edges
    ``r_n in {0, 1}`` (each edge is a one-dimensional problem with a closed
    form) and the feasible corners. The winner is scored with the same
    arithmetic as :func:`dis_multi_interference`.
    """
    obj = TwoInterferenceObjective.from_drop(drop)
    t = steering_table(drop)

    candidates: list[np.ndarray] = []
    for p in _stationary_points(obj):
        H = obj.hessian(p)
        if H[0, 1] ** 2 - H[0, 0] * H[1, 1] < 0 and H[0, 0] < 0:
            candidates.append(p)
    for n in (0, 1):
        for edge in (0.0, 1.0):
            r_n = obj.best_response(1 - n, edge)
            if r_n is not None:
                p = np.empty(2)
                p[n], p[1 - n] = edge, r_n
                candidates.append(p)
    candidates += [np.array(c, dtype=float) for c in ((0, 0), (0, 1), (1, 0), (1, 1))]

    best = None
    for p in candidates:
        if not obj.feasible(p):
            continue
        res, ok = steer(drop, p[None, :], t)
        if ok and (best is None or res.se_bits > best.se):
            best = JointRho(float(p[0]), float(p[1]), res.se_bits)
    assert best is not None  # (0, 0) is always feasible
    return best


def dis_joint_n2(drop: Drop) -> SchemeResult:
    """DIS result using the jointly optimal factors of :func:`joint_rho_n2`."""
    j = joint_rho_n2(drop)
    R = np.array([[j.rho1, j.rho2]])
    return _steer_checked(drop, R, steering_table(drop))
