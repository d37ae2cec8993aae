"""Monte-Carlo campaigns: parameter sweeps, aggregation and CSV output.

A :class:`SweepSpec` names value lists for the sweep axes and the schemes to
compare. Every combination of axis values is a point; each point is
evaluated on ``drops_per_point`` seeded drops shared by all schemes, and
aggregated into one :class:`SweepRow` per (point, scheme).

Drops are keyed by ``(master_seed, point_index, drop_index)``, where
``point_index`` enumerates the channel axes only (everything except
``rho``). Sweeping ``rho`` therefore reuses the same drops for every
steering factor, which keeps SE-versus-rho curves free of resampling noise.
"""
from __future__ import annotations

import csv
import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable, NamedTuple, Sequence

import numpy as np

from .channel import Antennas, budget_normalized, seeded_drop
from .errors import ConfigError, DomainError
from .schemes import Fallback, in_scheme, is_fixed, mf, ois, zf_rx, zfbf
from .steering import dis, dis_or_fallback

AXIS_ORDER = ("gamma_bar_db", "xi", "rho", "n_t0", "n_t1", "n_r0", "m_streams", "n_interferences")
CHANNEL_AXES = tuple(a for a in AXIS_ORDER if a != "rho")
AXIS_DEFAULTS: dict[str, Any] = {
    "gamma_bar_db": 5.0,
    "xi": 1.0,
    "n_t0": 2,
    "n_t1": 2,
    "n_r0": 2,
    "m_streams": 1,
    "n_interferences": 1,
}
INT_AXES = frozenset({"n_t0", "n_t1", "n_r0", "m_streams", "n_interferences"})

BASE_SCHEMES = ("MF", "ZF", "ZFBF", "IN", "OIS", "IS_FIXED", "DIS")
OVERHEAD_SCHEMES = frozenset({"IN", "OIS", "DIS", "IS_FIXED"})
BUDGET_SPLITS = ("equal", "proportional")
DIS_POLICIES = ("fallback", "clamp")

CSV_COLUMNS = AXIS_ORDER + (
    "scheme", "mean_se", "mean_rho_star", "prob_overhead_exceeds",
    "prob_infeasible", "n_drops", "stderr_se",
)
CURVE_COLUMNS = AXIS_ORDER + ("scheme", "p_bar", "prob_exceeds")
P_BAR_GRID = np.round(np.linspace(0.0, 2.0, 41), 12)

CHUNK_DROPS = 1000


# ---------------------------------------------------------------------------
# Spec and rows
# ---------------------------------------------------------------------------

def _parse_scheme_token(token) -> tuple[str, float | None]:
    """``"DIS"`` -> ("DIS", None); ``"IS_FIXED:0.3"`` -> ("IS_FIXED", 0.3)."""
    text = str(token).strip().upper()
    name, _, arg = text.partition(":")
    if name not in BASE_SCHEMES:
        raise ConfigError("schemes", f"unknown scheme {token!r}; expected one of {', '.join(BASE_SCHEMES)}")
    if not arg:
        return name, None
    if name != "IS_FIXED":
        raise ConfigError("schemes", f"only IS_FIXED takes a steering factor, got {token!r}")
    try:
        rho = float(arg)
    except ValueError:
        raise ConfigError("schemes", f"bad steering factor in {token!r}") from None
    if not 0.0 < rho <= 1.0:
        raise ConfigError("schemes", f"steering factor in {token!r} must lie in (0, 1]")
    return name, rho


@dataclass
class SweepSpec:
    """Declarative description of a Monte-Carlo campaign.

    Axes not listed in ``axes`` take their default value (``rho`` has none
    and is simply absent). ``fallback=None`` picks MF when a ``rho`` axis is
    present and ZF otherwise.
    """

    axes: dict[str, list] = field(default_factory=dict)
    schemes: list[str] = field(default_factory=lambda: ["DIS"])
    drops_per_point: int = 10_000
    master_seed: int = 0
    fallback: Fallback | str | None = None
    budget_split: str = "equal"
    output_path: str | None = None
    dis_policy: str = "fallback"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.axes, dict):
            raise ConfigError("axes", "must be a mapping of axis name to value list")
        clean = {}
        for name, values in self.axes.items():
            if name not in AXIS_ORDER:
                raise ConfigError(name, f"unknown axis; expected one of {', '.join(AXIS_ORDER)}")
            values = list(values) if isinstance(values, (list, tuple, np.ndarray)) else [values]
            if not values:
                raise ConfigError(name, "axis has no values")
            clean[name] = [_axis_value(name, v) for v in values]
        self.axes = clean

        if isinstance(self.schemes, str):
            self.schemes = [self.schemes]
        if not self.schemes:
            raise ConfigError("schemes", "at least one scheme is required")
        parsed = [_parse_scheme_token(s) for s in self.schemes]
        self.schemes = [name if arg is None else f"{name}:{arg:g}" for name, arg in parsed]
        if len(set(self.schemes)) != len(self.schemes):
            raise ConfigError("schemes", "duplicate scheme")
        if any(name == "IS_FIXED" and arg is None for name, arg in parsed) and "rho" not in self.axes:
            raise ConfigError("schemes", "IS_FIXED needs a rho axis or an explicit factor (IS_FIXED:0.5)")

        if isinstance(self.drops_per_point, bool) or not isinstance(self.drops_per_point, (int, np.integer)):
            raise ConfigError("drops_per_point", f"must be an integer, got {self.drops_per_point!r}")
        if not 1 <= self.drops_per_point < 2**32:
            raise ConfigError("drops_per_point", "must lie in [1, 2^32)")
        if isinstance(self.master_seed, bool) or not isinstance(self.master_seed, (int, np.integer)):
            raise ConfigError("master_seed", f"must be an integer, got {self.master_seed!r}")
        if not -(2**63) <= self.master_seed < 2**64:
            raise ConfigError("master_seed", "must fit in 64 bits")
        if self.fallback is not None:
            try:
                self.fallback = Fallback.parse(self.fallback)
            except DomainError as exc:
                raise ConfigError("fallback", str(exc)) from None
        if self.budget_split not in BUDGET_SPLITS:
            raise ConfigError("budget_split", f"expected one of {', '.join(BUDGET_SPLITS)}")
        if self.dis_policy not in DIS_POLICIES:
            raise ConfigError("dis_policy", f"expected one of {', '.join(DIS_POLICIES)}")

        for point in self.channel_points():
            _check_point(point)
        if self.n_channel_points() >= 2**32:
            raise ConfigError("axes", "too many points")

    @property
    def effective_fallback(self) -> Fallback:
        if self.fallback is not None:
            return Fallback.parse(self.fallback)
        return Fallback.MF if "rho" in self.axes else Fallback.ZF

    def axis_values(self, name: str) -> list:
        if name in self.axes:
            return self.axes[name]
        return [AXIS_DEFAULTS[name]] if name in AXIS_DEFAULTS else [None]

    def channel_points(self) -> list[dict]:
        """Points of the channel axes in canonical order; index = ``point_index``."""
        grids = [self.axis_values(a) for a in CHANNEL_AXES]
        return [dict(zip(CHANNEL_AXES, combo)) for combo in itertools.product(*grids)]

    def n_channel_points(self) -> int:
        return math.prod(len(self.axis_values(a)) for a in CHANNEL_AXES)

    def scheme_columns(self, rho: float | None) -> list[tuple[str, str, float | None]]:
        """``(label, base name, steering factor)`` of every scheme at a given ``rho``."""
        cols = []
        for label in self.schemes:
            name, arg = _parse_scheme_token(label)
            cols.append((label, name, rho if name == "IS_FIXED" and arg is None else arg))
        return cols


def _axis_value(name: str, v):
    if name in INT_AXES:
        if isinstance(v, bool) or not float(v).is_integer():
            raise ConfigError(name, f"expected an integer, got {v!r}")
        return int(v)
    try:
        x = float(v)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected a number, got {v!r}") from None
    if not math.isfinite(x):
        raise ConfigError(name, f"value must be finite, got {v!r}")
    if name == "xi" and not x > 0:
        raise ConfigError(name, f"xi must be positive, got {x}")
    if name == "rho" and not 0.0 < x <= 1.0:
        raise ConfigError(name, f"rho must lie in (0, 1], got {x}")
    return x


def _check_point(p: dict) -> None:
    try:
        Antennas(p["n_t0"], p["n_t1"], p["n_r0"])
    except DomainError as exc:
        bad = "n_r0" if p["n_r0"] < 2 or p["n_r0"] > p["n_t0"] else "n_t1" if p["n_t1"] < 2 else "n_t0"
        raise ConfigError(bad, str(exc)) from None
    if not 1 <= p["m_streams"] <= min(p["n_t0"], p["n_r0"]):
        raise ConfigError("m_streams", f"must lie in [1, min(n_t0, n_r0)] at {p}")
    if not 1 <= p["n_interferences"] <= p["n_t1"]:
        raise ConfigError("n_interferences", f"must lie in [1, n_t1] at {p}")


@dataclass(frozen=True)
class SweepRow:
    gamma_bar_db: float
    xi: float
    rho: float | None
    n_t0: int
    n_t1: int
    n_r0: int
    m_streams: int
    n_interferences: int
    scheme: str
    mean_se: float
    mean_rho_star: float | None
    prob_overhead_exceeds: float
    prob_infeasible: float
    n_drops: int
    stderr_se: float

    def axis_key(self) -> tuple:
        return tuple(-math.inf if v is None else v for v in (getattr(self, a) for a in AXIS_ORDER))


@dataclass(frozen=True)
class CurvePoint:
    """One point of a normalized-overhead exceedance curve ``Prob(P / p0e > p_bar)``."""

    gamma_bar_db: float
    xi: float
    rho: float | None
    n_t0: int
    n_t1: int
    n_r0: int
    m_streams: int
    n_interferences: int
    scheme: str
    p_bar: float
    prob_exceeds: float


class OverheadReport(NamedTuple):
    rows: list[SweepRow]
    curve: list[CurvePoint]


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def evaluate_scheme(drop, name: str, rho: float | None, fallback: Fallback,
                    split: str = "equal", dis_policy: str = "fallback"):
    """Run one scheme (by base name) on one drop.

    ``dis_policy="fallback"`` makes DIS switch to ``fallback`` in drops where
    orthogonal steering is unaffordable; ``"clamp"`` keeps the clamped factor.
    """
    if name == "MF":
        return mf(drop)
    if name == "ZF":
        return zf_rx(drop)
    if name == "ZFBF":
        return zfbf(drop, fallback)
    if name == "IN":
        return in_scheme(drop, fallback)
    if name == "OIS":
        return ois(drop, fallback)
    if name == "IS_FIXED":
        return is_fixed(drop, rho, fallback)
    if name == "DIS":
        return dis_or_fallback(drop, fallback, split) if dis_policy == "fallback" else dis(drop, split)
    raise DomainError(f"unknown scheme {name!r}")


def point_drop(spec: SweepSpec, point_index: int, drop_index: int, point: dict | None = None):
    """The drop a sweep evaluates at ``(point_index, drop_index)``."""
    point = point or spec.channel_points()[point_index]
    return seeded_drop(
        budget_normalized(point["gamma_bar_db"], point["xi"]),
        spec.master_seed, point_index, drop_index,
        Antennas(point["n_t0"], point["n_t1"], point["n_r0"]),
        n_streams_mbs=point["n_interferences"],
        n_streams_pbs=point["m_streams"],
    )


def _evaluate_chunk(spec: SweepSpec, point_index: int, start: int, stop: int) -> dict:
    """Per-drop outcomes for drops ``[start, stop)`` of one channel point.

    Keys are ``(rho, label)``; values are arrays of (se, rho, overhead / p0e,
    infeasible) with one entry per drop.
    """
    point = spec.channel_points()[point_index]
    fallback = spec.effective_fallback
    rhos = spec.axis_values("rho")
    n = stop - start
    out = {}
    for rho in rhos:
        for label, _, _ in spec.scheme_columns(rho):
            out[(rho, label)] = np.full((4, n), np.nan)
    for i, k in enumerate(range(start, stop)):
        drop = point_drop(spec, point_index, k, point)
        p0e = drop.budget.p0e
        shared = {}
        for rho in rhos:
            for label, name, r in spec.scheme_columns(rho):
                key = (name, r)
                if key not in shared:
                    res = evaluate_scheme(drop, name, r, fallback, spec.budget_split, spec.dis_policy)
                    shared[key] = (
                        res.se_bits,
                        res.rho if (name == "DIS" and res.rho is not None) else math.nan,
                        res.power_overhead_e / p0e,
                        0.0 if res.feasible else 1.0,
                    )
                out[(rho, label)][:, i] = shared[key]
    return out


def _work_items(spec: SweepSpec) -> list[tuple[int, int, int]]:
    items = []
    for p in range(spec.n_channel_points()):
        for start in range(0, spec.drops_per_point, CHUNK_DROPS):
            items.append((p, start, min(start + CHUNK_DROPS, spec.drops_per_point)))
    return items


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit value, else ``STEERSIM_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get("STEERSIM_THREADS")
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ConfigError("STEERSIM_THREADS", f"expected an integer, got {env!r}") from None
        else:
            threads = 1
    if threads < 1:
        raise ConfigError("threads", f"must be at least 1, got {threads}")
    return threads


def _collect(spec: SweepSpec, threads: int | None) -> dict[int, dict]:
    """Evaluate every drop; returns per channel point the concatenated outcomes."""
    items = _work_items(spec)
    threads = resolve_threads(threads)
    if threads == 1 or len(items) == 1:
        chunks = [_evaluate_chunk(spec, *it) for it in items]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            # map() yields in submission order, so the reduction below is ordered.
            chunks = list(pool.map(_evaluate_chunk, itertools.repeat(spec), *zip(*items)))
    per_point: dict[int, list[dict]] = {}
    for (p, _, _), chunk in zip(items, chunks):
        per_point.setdefault(p, []).append(chunk)
    merged = {}
    for p, parts in per_point.items():
        merged[p] = {key: np.concatenate([c[key] for c in parts], axis=1) for key in parts[0]}
    return merged


def _row(point: dict, rho, label: str, data: np.ndarray) -> SweepRow:
    se, rho_star, ratio, infeasible = data
    n = se.size
    rho_vals = rho_star[~np.isnan(rho_star)]
    return SweepRow(
        **{a: (rho if a == "rho" else point[a]) for a in AXIS_ORDER},
        scheme=label,
        mean_se=math.fsum(se.tolist()) / n,
        mean_rho_star=math.fsum(rho_vals.tolist()) / rho_vals.size if rho_vals.size else None,
        prob_overhead_exceeds=int(np.count_nonzero(ratio > 1.0)) / n,
        prob_infeasible=int(np.count_nonzero(infeasible)) / n,
        n_drops=n,
        stderr_se=float(np.std(se, ddof=1) / math.sqrt(n)) if n > 1 else math.nan,
    )


def _sorted_rows(rows: list) -> list:
    # Stable sort: scheme order within a point follows the spec.
    return sorted(rows, key=lambda r: tuple(-math.inf if getattr(r, a) is None else getattr(r, a)
                                            for a in AXIS_ORDER))


def run_sweep(spec: SweepSpec, threads: int | None = None) -> list[SweepRow]:
    """Evaluate the Cartesian product of the axes; one row per (point, scheme).

    The result depends only on ``spec``: rows are identical for any
    ``threads`` and come sorted by their axis values.
    """
    spec.validate()
    data = _collect(spec, threads)
    rows = []
    for p, point in enumerate(spec.channel_points()):
        for rho in spec.axis_values("rho"):
            for label, _, _ in spec.scheme_columns(rho):
                rows.append(_row(point, rho, label, data[p][(rho, label)]))
    return _sorted_rows(rows)


def prob_overhead(spec: SweepSpec, threads: int | None = None,
                  p_bar_grid: Sequence[float] = P_BAR_GRID) -> OverheadReport:
    """Overhead-exceedance statistics for power-spending schemes.

    ``rows`` carry ``Prob(P > p0e)`` in ``prob_overhead_exceeds``; ``curve``
    holds ``Prob(P / p0e > p_bar)`` for every ``p_bar`` in the grid.
    """
    spec.validate()
    bad = [s for s in spec.schemes if _parse_scheme_token(s)[0] not in OVERHEAD_SCHEMES]
    if bad:
        raise ConfigError("schemes", f"overhead statistics need IN, OIS, DIS or IS_FIXED, got {bad}")
    grid = np.asarray(p_bar_grid, dtype=float)
    data = _collect(spec, threads)
    rows, curve = [], []
    for p, point in enumerate(spec.channel_points()):
        for rho in spec.axis_values("rho"):
            for label, _, _ in spec.scheme_columns(rho):
                d = data[p][(rho, label)]
                rows.append(_row(point, rho, label, d))
                ratio = np.sort(d[2])
                # count of ratio > x == n - (number of entries <= x)
                counts = ratio.size - np.searchsorted(ratio, grid, side="right")
                axes = {a: (rho if a == "rho" else point[a]) for a in AXIS_ORDER}
                curve.extend(CurvePoint(**axes, scheme=label, p_bar=float(x), prob_exceeds=int(c) / ratio.size)
                             for x, c in zip(grid, counts))
    return OverheadReport(_sorted_rows(rows), _sorted_rows(curve))


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def _write_records(fh, records: Iterable, columns: Sequence[str]) -> None:
    w = csv.writer(fh, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(columns)
    for r in records:
        w.writerow([_fmt(getattr(r, c)) for c in columns])


def _write(records: Iterable, columns: Sequence[str], target) -> None:
    """``target`` is a path or an open text stream."""
    if hasattr(target, "write"):
        _write_records(target, records, columns)
        return
    path = Path(target)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            _write_records(fh, records, columns)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc.strerror or exc}") from exc


def write_csv(rows: Iterable[SweepRow], path) -> None:
    """Write sweep rows with the fixed header; 12 significant digits, CRLF line ends."""
    _write(rows, CSV_COLUMNS, path)


def write_curve_csv(curve: Iterable[CurvePoint], path) -> None:
    _write(curve, CURVE_COLUMNS, path)


# ---------------------------------------------------------------------------
# Config files
# ---------------------------------------------------------------------------

SPEC_KEYS = {f.name for f in fields(SweepSpec)} - {"axes"}


def _scalar(text: str):
    text = text.strip().strip('"').strip("'")
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _value(text: str):
    text = text.strip()
    if text.startswith("[") and text.endswith("]"):
        text = text[1:-1]
        return [_scalar(t) for t in text.split(",") if t.strip()]
    if "," in text:
        return [_scalar(t) for t in text.split(",") if t.strip()]
    return _scalar(text)


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines (``#`` comments, comma or ``[..]`` lists) or JSON."""
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            raw = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config", "JSON config must be an object")
        return raw
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError("config", f"line {lineno}: expected key = value")
        key = key.strip()
        if key in raw:
            raise ConfigError(key, f"line {lineno}: duplicate key")
        raw[key] = _value(value)
    return raw


def spec_from_mapping(raw: dict, **overrides) -> SweepSpec:
    """Build a spec from a flat (or ``{"axes": {...}}``) mapping plus overrides."""
    raw = dict(raw)
    axes = dict(raw.pop("axes", {}) or {})
    kwargs = {}
    for key, value in raw.items():
        if key in AXIS_ORDER:
            axes[key] = value if isinstance(value, list) else [value]
        elif key in SPEC_KEYS:
            kwargs[key] = value
        else:
            raise ConfigError(key, "unknown config key")
    if "schemes" in kwargs and not isinstance(kwargs["schemes"], list):
        kwargs["schemes"] = [kwargs["schemes"]]
    for key, value in overrides.items():
        if value is not None:
            kwargs[key] = value
    return SweepSpec(axes=axes, **kwargs)


def load_spec(path, **overrides) -> SweepSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror or exc}") from None
    return spec_from_mapping(parse_config(text), **overrides)
