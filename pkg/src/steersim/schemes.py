"""Interference-management schemes evaluated on a single :class:`Drop`.

Every scheme returns a :class:`SchemeResult`. The PBS sends ``M`` streams
(``drop.n_streams_pbs``) on the leading eigen-modes of ``H0`` with equal
power ``p0e / M`` each and the PUE decodes stream ``m`` with ``u_m``; the
MBS causes ``N`` interference terms ``sqrt(q_n) H10 p1_n``.

Interference steering (IS) sends, for every (stream, interference) pair, a
copy of the interfering symbol along ``-H0^+ P_m H10 p1_n`` so that a
fraction ``rho`` of the in-phase component of that interference, relative
to stream ``m``, is cancelled at the PUE. ``rho = 1`` is orthogonal IS.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, replace

import numpy as np

from . import numkit
from .channel import Drop
from .errors import DomainError

# Relative tolerance on "overhead fits in the budget"; covers rounding of rho_max.
BUDGET_RTOL = 1e-12
# |chi|^2 and ||g||^2 below this fraction of their natural scale count as zero.
DEGENERATE_RTOL = 1e-15
# Directions closer than this (sine of the angle) are treated as parallel.
PARALLEL_TOL = 1e-12


class Scheme(str, enum.Enum):
    MF = "MF"
    ZF = "ZF"
    ZFBF = "ZFBF"
    IN = "IN"
    OIS = "OIS"
    IS_FIXED = "IS_FIXED"
    DIS = "DIS"


class Fallback(str, enum.Enum):
    MF = "MF"
    ZF = "ZF"

    @classmethod
    def parse(cls, value) -> "Fallback":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise DomainError(f"unknown fallback {value!r} (expected mf or zf)") from None


@dataclass(frozen=True)
class SchemeResult:
    """Outcome of one scheme on one drop.

    ``stream_desired`` and ``stream_residual`` hold the post-filter desired
    and interference powers per PBS stream; ``desired_power`` and
    ``residual_interference`` are their sums. The spectral efficiency is
    ``sum_m log2(1 + desired_m / (sigma2 + residual_m))``.

    ``power_overhead_e`` is the effective power the scheme needs at the PBS;
    when it does not fit (``feasible`` is False) the SE fields come from the
    scheme named in ``fallback_applied``. ``rho`` is the steering factor (the
    mean when several are used, all of them in ``rhos``).
    """

    scheme: Scheme
    feasible: bool
    rho: float | None
    power_overhead_e: float
    residual_interference: float
    desired_power: float
    se_bits: float
    sigma2: float
    stream_desired: tuple[float, ...]
    stream_residual: tuple[float, ...]
    fallback_applied: Fallback | None = None
    rhos: tuple[float, ...] = ()
    degenerate: bool = False

    def as_dict(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "feasible": self.feasible,
            "rho": self.rho,
            "rhos": list(self.rhos),
            "power_overhead_e": self.power_overhead_e,
            "residual_interference": self.residual_interference,
            "desired_power": self.desired_power,
            "se_bits": self.se_bits,
            "sigma2": self.sigma2,
            "stream_desired": list(self.stream_desired),
            "stream_residual": list(self.stream_residual),
            "fallback_applied": self.fallback_applied.value if self.fallback_applied else None,
            "degenerate": self.degenerate,
        }


def shannon_se(desired, residual, sigma2: float) -> float:
    return math.fsum(math.log2(1.0 + d / (sigma2 + r)) for d, r in zip(desired, residual))


def _result(scheme, desired, residual, sigma2, *, overhead=0.0, feasible=True,
            rho=None, rhos=(), degenerate=False) -> SchemeResult:
    desired = tuple(float(max(d, 0.0)) for d in desired)
    residual = tuple(float(r) for r in residual)
    return SchemeResult(
        scheme=Scheme(scheme),
        feasible=feasible,
        rho=rho,
        power_overhead_e=float(overhead),
        residual_interference=math.fsum(residual),
        desired_power=math.fsum(desired),
        se_bits=shannon_se(desired, residual, sigma2),
        sigma2=sigma2,
        stream_desired=desired,
        stream_residual=residual,
        rhos=tuple(float(r) for r in rhos),
        degenerate=degenerate,
    )


def _memo_on_drop(fn):
    """Cache a pure function of an (immutable) drop on the drop itself."""
    key = f"_memo_{fn.__name__}"

    @functools.wraps(fn)
    def wrapper(drop):
        hit = drop.__dict__.get(key)
        if hit is None:
            hit = drop.__dict__[key] = fn(drop)
        return hit

    return wrapper


def stream_powers(drop: Drop) -> np.ndarray:
    M = drop.n_streams_pbs
    return np.full(M, drop.budget.p0e / M)


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SteeringGeometry:
    """Decomposition of one interference term against one desired stream.

    ``i_vec = sqrt(q) H10 p1`` splits into ``i_in`` (along ``d_s``) and
    ``i_quad``; ``g = H0^+ P H10 p1`` and ``chi = f0^H P H10 p1``.
    """

    d_s: np.ndarray
    i_vec: np.ndarray
    i_in: np.ndarray
    i_quad: np.ndarray
    g: np.ndarray
    chi: complex
    f0: np.ndarray
    p0: np.ndarray
    lam: float
    power: float


def geometry(drop: Drop, stream: int = 0, interference: int = 0) -> SteeringGeometry:
    U, s, V = drop.h0_svd
    if s[0] == 0.0:
        raise DomainError("degenerate H0 (zero matrix)")
    p0, f0 = V[:, stream], U[:, stream]
    d_s = numkit.unit(drop.h0 @ p0)
    P = numkit.projector(d_s)
    y = drop.interference_vectors[:, interference]
    q = drop.mbs_stream_powers[interference]
    i_vec = math.sqrt(q) * y
    i_in = P @ i_vec
    Py = P @ y
    return SteeringGeometry(
        d_s=d_s,
        i_vec=i_vec,
        i_in=i_in,
        i_quad=i_vec - i_in,
        g=drop.h0_pinv @ Py,
        chi=numkit.inner(f0, Py),
        f0=f0,
        p0=p0,
        lam=float(s[stream]),
        power=float(q),
    )


@dataclass(frozen=True)
class SteeringTable:
    """Per (stream m, interference n) quantities: ``chi2 = |chi|^2``, ``g2 = ||g||^2``."""

    lam2: np.ndarray     # (M,)
    q: np.ndarray        # (N,)
    chi2: np.ndarray     # (M, N)
    g2: np.ndarray       # (M, N)
    y2: np.ndarray       # (N,)  ||H10 p1_n||^2
    budgets: np.ndarray  # (M,)


def steering_table(drop: Drop, budgets=None) -> SteeringTable:
    """Collect the steering quantities of every (stream, interference) pair.

    ``budgets`` overrides the per-stream PBS powers (default ``p0e / M``).
    """
    if budgets is None:
        cached = drop.__dict__.get("_steering_table")
        if cached is not None:
            return cached
    M, N = drop.n_streams_pbs, drop.n_interferences
    chi2 = np.empty((M, N))
    g2 = np.empty((M, N))
    for m in range(M):
        for n in range(N):
            geo = geometry(drop, m, n)
            chi2[m, n] = abs(geo.chi) ** 2
            g2[m, n] = float(np.real(np.vdot(geo.g, geo.g)))
    Y = drop.interference_vectors
    table = SteeringTable(
        lam2=drop.h0_svd.sigma[:M] ** 2,
        q=np.asarray(drop.mbs_stream_powers, dtype=float),
        chi2=chi2,
        g2=g2,
        y2=np.real(np.sum(Y.conj() * Y, axis=0)),
        budgets=stream_powers(drop) if budgets is None else np.asarray(budgets, dtype=float),
    )
    if budgets is None:
        # Drop is immutable, so per-drop memoization is safe.
        drop.__dict__["_steering_table"] = table
    return table


def steered_terms(budget: float, q: float, lam2: float, g2: float, chi2: float, rho: float):
    """(overhead, desired, residual) of one stream steering one interference.

    This is the single arithmetic path every steering result is built from,
    so equal inputs give bit-identical spectral efficiencies.
    """
    overhead = rho * rho * q * g2
    desired = (budget - overhead) * lam2
    residual = q * (1.0 - rho) ** 2 * chi2
    return overhead, desired, residual


def fits(overhead: float, budget: float) -> bool:
    return overhead <= budget * (1.0 + BUDGET_RTOL)


def steer(drop: Drop, rho_matrix, table: SteeringTable | None = None) -> tuple[SchemeResult, bool]:
    """Apply steering factors ``rho_matrix[m, n]`` without any fallback.

    Returns the raw IS result and whether every stream's overhead fits its
    budget (``p0e / M`` unless the table overrides it).
    """
    t = table or steering_table(drop)
    M, N = t.chi2.shape
    R = np.broadcast_to(np.asarray(rho_matrix, dtype=float), (M, N)).tolist()
    flat = [r for row in R for r in row]
    if min(flat) < 0.0 or max(flat) > 1.0:
        raise DomainError("steering factors must lie in [0, 1]")
    budgets, q, lam2 = t.budgets.tolist(), t.q.tolist(), t.lam2.tolist()
    g2, chi2 = t.g2.tolist(), t.chi2.tolist()
    desired, residual, overheads = [], [], []
    feasible = True
    for m in range(M):
        ov_m, res_m = [], []
        for n in range(N):
            ov, _, res = steered_terms(budgets[m], q[n], lam2[m], g2[m][n], chi2[m][n], R[m][n])
            ov_m.append(ov)
            res_m.append(res)
        ov_total = math.fsum(ov_m)
        feasible = feasible and fits(ov_total, budgets[m])
        overheads.append(ov_total)
        desired.append((budgets[m] - ov_total) * lam2[m])
        residual.append(math.fsum(res_m))
    res = _result(
        Scheme.IS_FIXED, desired, residual, drop.budget.sigma2,
        overhead=math.fsum(overheads), feasible=feasible,
        rho=math.fsum(flat) / len(flat), rhos=flat,
    )
    return res, feasible


def _with_fallback(drop: Drop, attempted: SchemeResult, scheme: Scheme, fallback) -> SchemeResult:
    fb = Fallback.parse(fallback)
    base = mf(drop) if fb is Fallback.MF else zf_rx(drop)
    return replace(
        base,
        scheme=scheme,
        feasible=False,
        fallback_applied=fb,
        power_overhead_e=attempted.power_overhead_e,
        rho=attempted.rho,
        rhos=attempted.rhos,
    )


# ---------------------------------------------------------------------------
# Schemes
# ---------------------------------------------------------------------------

@_memo_on_drop
def mf(drop: Drop) -> SchemeResult:
    """Matched filtering along the eigen-modes; interference left untouched."""
    U, s, _ = drop.h0_svd
    Y = drop.interference_vectors
    q = np.asarray(drop.mbs_stream_powers)
    b = stream_powers(drop)
    desired, residual = [], []
    for m in range(drop.n_streams_pbs):
        proj = np.abs(U[:, m].conj() @ Y) ** 2
        desired.append(b[m] * s[m] ** 2)
        residual.append(math.fsum(q * proj))
    return _result(Scheme.MF, desired, residual, drop.budget.sigma2)


def _active_interference(drop: Drop) -> np.ndarray:
    Y = drop.interference_vectors
    keep = [n for n, q in enumerate(drop.mbs_stream_powers) if q > 0 and np.linalg.norm(Y[:, n]) > 0]
    return Y[:, keep]


def _receive_powers(drop: Drop, filters, precoders, powers) -> tuple[list, list]:
    """Post-filter desired and (MBS + inter-stream) interference per stream."""
    Y = drop.interference_vectors
    q = np.asarray(drop.mbs_stream_powers)
    eff = drop.h0 @ precoders
    desired, residual = [], []
    for m, f in enumerate(filters.T):
        desired.append(powers[m] * abs(f.conj() @ eff[:, m]) ** 2)
        cross = [powers[k] * abs(f.conj() @ eff[:, k]) ** 2 for k in range(len(powers)) if k != m]
        residual.append(math.fsum(list(q * np.abs(f.conj() @ Y) ** 2) + cross))
    return desired, residual


@_memo_on_drop
def zf_rx(drop: Drop) -> SchemeResult:
    """Zero-forcing reception.

    Stream ``m`` is decoded with ``(I - Pi) H0 v_m`` (normalized), where
    ``Pi`` projects onto the interference directions and the other streams'
    effective channels. A stream whose direction lies inside that span is
    received with zero power and the result is flagged ``degenerate``.
    """
    _, _, V = drop.h0_svd
    M = drop.n_streams_pbs
    precoders = V[:, :M]
    eff = drop.h0 @ precoders
    Yi = _active_interference(drop)
    filters = np.zeros((drop.h0.shape[0], M), dtype=complex)
    degenerate = False
    for m in range(M):
        others = np.concatenate([Yi, np.delete(eff, m, axis=1)], axis=1)
        target = eff[:, m]
        f = target - numkit.span_projector(others) @ target if others.shape[1] else target
        if np.linalg.norm(f) <= PARALLEL_TOL * np.linalg.norm(target):
            degenerate = True
            continue
        filters[:, m] = f / np.linalg.norm(f)
    desired, residual = _receive_powers(drop, filters, precoders, stream_powers(drop))
    return _result(Scheme.ZF, desired, residual, drop.budget.sigma2, degenerate=degenerate)


def zfbf(drop: Drop, fallback=Fallback.ZF) -> SchemeResult:
    """Zero-forcing beamforming at the PBS.

    The precoders are restricted to ``{p : y_n^H H0 p = 0 for all n}`` so the
    desired signal arrives orthogonal to every interference direction; the
    best ``M`` such beams are the leading right singular vectors of
    ``H0 Q`` with ``Q`` the projector onto that subspace, and each stream is
    received with the matched filter ``H0 p / ||H0 p||``.
    """
    M = drop.n_streams_pbs
    Yi = _active_interference(drop)
    n_t0 = drop.h0.shape[1]
    Q = np.eye(n_t0) - numkit.span_projector(drop.h0.conj().T @ Yi) if Yi.shape[1] else np.eye(n_t0)
    U, s, V = numkit.svd(drop.h0 @ Q)
    if s.size < M or s[M - 1] <= PARALLEL_TOL * drop.h0_svd.sigma[0]:
        attempted = _result(Scheme.ZFBF, [0.0] * M, [0.0] * M, drop.budget.sigma2, feasible=False)
        return replace(_with_fallback(drop, attempted, Scheme.ZFBF, fallback), degenerate=True)
    precoders = V[:, :M]
    filters = U[:, :M]
    desired, residual = _receive_powers(drop, filters, precoders, stream_powers(drop))
    return _result(Scheme.ZFBF, desired, residual, drop.budget.sigma2)


def in_scheme(drop: Drop, fallback=Fallback.ZF) -> SchemeResult:
    """Interference neutralization: cancel every interference vector completely.

    The PBS transmits ``-sqrt(q_n) H0^+ y_n x_{1,n}``; the overhead is
    ``sum_n q_n ||H0^+ y_n||^2`` and the remaining power is shared equally by
    the desired streams. Residual interference is evaluated from the
    assembled received vectors.
    """
    U, s, _ = drop.h0_svd
    Y = drop.interference_vectors
    q = np.asarray(drop.mbs_stream_powers)
    X = drop.h0_pinv @ Y
    overhead = math.fsum(q * np.real(np.sum(X.conj() * X, axis=0)))
    M = drop.n_streams_pbs
    p0e = drop.budget.p0e
    leftover = np.sqrt(q) * (Y - drop.h0 @ X)
    desired = [(p0e - overhead) / M * s[m] ** 2 for m in range(M)]
    residual = [float(np.sum(np.abs(U[:, m].conj() @ leftover) ** 2)) for m in range(M)]
    attempted = _result(Scheme.IN, desired, residual, drop.budget.sigma2, overhead=overhead)
    if not fits(overhead, p0e):
        return _with_fallback(drop, attempted, Scheme.IN, fallback)
    return attempted


def is_fixed(drop: Drop, rho: float, fallback=Fallback.ZF) -> SchemeResult:
    """Interference steering with the same steering factor for every pair."""
    if not (0.0 < rho <= 1.0):
        raise DomainError(f"rho must lie in (0, 1], got {rho}")
    res, ok = steer(drop, rho)
    if not ok:
        return _with_fallback(drop, res, Scheme.IS_FIXED, fallback)
    return res


def ois(drop: Drop, fallback=Fallback.ZF) -> SchemeResult:
    """Orthogonal interference steering (``rho = 1``)."""
    res, ok = steer(drop, 1.0)
    res = replace(res, scheme=Scheme.OIS, rho=None, rhos=())
    if not ok:
        return replace(_with_fallback(drop, res, Scheme.OIS, fallback), rho=None, rhos=())
    return res
