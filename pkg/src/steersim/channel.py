"""Channel realizations, path loss and link budgets for the macro/pico downlink.

The pico base station (PBS) serves a pico user (PUE); the macro base
station (MBS) serves its own user (MUE) and, as a side effect, interferes
at the PUE. Powers are linear and share one unit (mW in deployment mode,
noise-normalized in the normalized mode).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import numkit
from .errors import DomainError

PICO_RADIUS_M = 300.0
MACRO_RADIUS_M = 3000.0
P0_DBM = 23.0
P1_DBM = 46.0


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


# ---------------------------------------------------------------------------
# Path loss
# ---------------------------------------------------------------------------

def path_loss_mbs(eta10_m: float) -> float:
    """Macro-to-PUE path loss in dB, ``128.1 + 37.6 log10(d / 1 km)``."""
    if not eta10_m > 0:
        raise DomainError(f"distance must be positive, got {eta10_m}")
    return 128.1 + 37.6 * math.log10(eta10_m / 1e3)


def path_loss_pbs(eta0_m: float) -> float:
    """Pico-to-PUE path loss in dB, ``38 + 30 log10(d)`` with d in meters."""
    if not eta0_m > 0:
        raise DomainError(f"distance must be positive, got {eta0_m}")
    return 38.0 + 30.0 * math.log10(eta0_m)


# ---------------------------------------------------------------------------
# Configuration types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Antennas:
    """Antenna counts: PBS Tx, MBS Tx, PUE Rx and MUE Rx (defaults to ``n_t1``)."""

    n_t0: int = 2
    n_t1: int = 2
    n_r0: int = 2
    n_r1: int | None = None

    def __post_init__(self):
        if self.n_r1 is None:
            object.__setattr__(self, "n_r1", self.n_t1)
        if not (self.n_t0 >= self.n_r0 >= 2):
            raise DomainError(f"need n_t0 >= n_r0 >= 2, got n_t0={self.n_t0}, n_r0={self.n_r0}")
        if self.n_t1 < 2:
            raise DomainError(f"need n_t1 >= 2, got {self.n_t1}")
        if not (1 <= self.n_r1 <= self.n_t1):
            raise DomainError(f"need 1 <= n_r1 <= n_t1, got n_r1={self.n_r1}")


@dataclass(frozen=True)
class Deployment:
    n_t0: int = 2
    n_t1: int = 2
    n_r0: int = 2
    p0_dbm: float = P0_DBM
    p1_dbm: float = P1_DBM
    eta0_m: float = 100.0
    eta10_m: float = 1000.0
    d_m: float = PICO_RADIUS_M
    big_d_m: float = MACRO_RADIUS_M
    n_r1: int | None = None

    def __post_init__(self):
        self.antennas  # validates counts
        if not (0 < self.eta0_m <= self.d_m):
            raise DomainError(f"PBS-PUE distance {self.eta0_m} m outside (0, {self.d_m}]")
        if not (0 < self.eta10_m <= self.big_d_m):
            raise DomainError(f"MBS-PUE distance {self.eta10_m} m outside (0, {self.big_d_m}]")

    @property
    def antennas(self) -> Antennas:
        return Antennas(self.n_t0, self.n_t1, self.n_r0, self.n_r1)


@dataclass(frozen=True)
class LinkBudget:
    """Effective (path-loss adjusted) powers seen at the PUE plus noise power."""

    p0e: float
    p1e: float
    sigma2: float

    def __post_init__(self):
        for name in ("p0e", "p1e", "sigma2"):
            v = getattr(self, name)
            # p0e = 0 is admitted: a silent PBS is a valid limiting case.
            if not (np.isfinite(v) and (v > 0 or (name == "p0e" and v == 0))):
                raise DomainError(f"{name} must be positive and finite, got {v}")

    @property
    def gamma_bar_db(self) -> float:
        """Interference-to-noise ratio ``10 log10(p1e / sigma2)``."""
        return linear_to_db(self.p1e / self.sigma2)

    @property
    def xi(self) -> float:
        """Effective desired-to-interference power ratio ``p0e / p1e``."""
        return self.p0e / self.p1e


def budget_from_deployment(dep: Deployment, sigma2_dbm: float) -> LinkBudget:
    """Link budget in mW from transmit powers, distances and noise power."""
    p0e_dbm = dep.p0_dbm - path_loss_pbs(dep.eta0_m)
    p1e_dbm = dep.p1_dbm - path_loss_mbs(dep.eta10_m)
    return LinkBudget(db_to_linear(p0e_dbm), db_to_linear(p1e_dbm), db_to_linear(sigma2_dbm))


def budget_normalized(gamma_bar_db: float, xi: float) -> LinkBudget:
    """Noise-normalized budget: ``sigma2 = 1``, ``p1e = 10^(gamma/10)``, ``p0e = xi p1e``."""
    if not xi > 0:
        raise DomainError(f"xi must be positive, got {xi}")
    p1e = db_to_linear(gamma_bar_db)
    return LinkBudget(p0e=xi * p1e, p1e=p1e, sigma2=1.0)


# ---------------------------------------------------------------------------
# Random channels
# ---------------------------------------------------------------------------

def drop_rng(master_seed: int, point_index: int = 0, drop_index: int = 0) -> np.random.Generator:
    """Counter-based stream keyed by ``(master_seed, point_index, drop_index)``.

    Any single drop of a campaign can be regenerated in isolation.
    """
    if not (0 <= point_index < 2**32 and 0 <= drop_index < 2**32):
        raise DomainError("point_index and drop_index must fit in 32 bits")
    key = np.array([int(master_seed) % 2**64, (point_index << 32) | drop_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def rayleigh(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. CN(0, 1) matrix (real and imaginary parts each of variance 1/2)."""
    if rows < 1 or cols < 1:
        raise DomainError(f"invalid channel shape ({rows}, {cols})")
    re = rng.standard_normal((rows, cols))
    im = rng.standard_normal((rows, cols))
    return (re + 1j * im) * math.sqrt(0.5)


@dataclass(frozen=True, eq=False)
class Drop:
    """One channel realization and the power budget it is evaluated under.

    ``mbs_precoders`` are the MBS beams (unit norm, orthonormal) and
    ``mbs_stream_powers`` the effective power on each; they sum to ``p1e``.
    ``n_streams_pbs`` is the number of desired streams the PBS sends.
    """

    h0: np.ndarray
    h1: np.ndarray
    h10: np.ndarray
    budget: LinkBudget
    mbs_precoders: tuple[np.ndarray, ...]
    mbs_stream_powers: tuple[float, ...]
    n_streams_pbs: int = 1
    seed: tuple[int, ...] | None = None

    def __post_init__(self):
        if len(self.mbs_precoders) != len(self.mbs_stream_powers) or not self.mbs_precoders:
            raise DomainError("need one stream power per MBS precoder (and at least one)")
        if any(p < 0 for p in self.mbs_stream_powers):
            raise DomainError("MBS stream powers must be nonnegative")
        if abs(sum(self.mbs_stream_powers) - self.budget.p1e) > 1e-9 * self.budget.p1e:
            raise DomainError("MBS stream powers must sum to p1e")
        if not (1 <= self.n_streams_pbs <= min(self.h0.shape)):
            raise DomainError(f"PBS streams must be in [1, {min(self.h0.shape)}]")
        if self.h10.shape[0] != self.h0.shape[0]:
            raise DomainError("h0 and h10 must share the PUE receive dimension")

    @property
    def n_interferences(self) -> int:
        return len(self.mbs_precoders)

    @cached_property
    def h0_svd(self) -> numkit.SvdResult:
        return numkit.svd(self.h0)

    @cached_property
    def h0_pinv(self) -> np.ndarray:
        return numkit.pinv(self.h0)

    @cached_property
    def interference_vectors(self) -> np.ndarray:
        """Columns ``H10 p1_n`` (unit-power interference channels at the PUE)."""
        return self.h10 @ np.stack(self.mbs_precoders, axis=1)

    def bitwise_equal(self, other: "Drop") -> bool:
        return (
            np.array_equal(self.h0, other.h0)
            and np.array_equal(self.h1, other.h1)
            and np.array_equal(self.h10, other.h10)
            and self.budget == other.budget
            and all(np.array_equal(a, b) for a, b in zip(self.mbs_precoders, other.mbs_precoders))
            and self.mbs_stream_powers == other.mbs_stream_powers
            and self.n_streams_pbs == other.n_streams_pbs
        )


def make_drop(
    budget: LinkBudget | Deployment,
    n_streams_mbs: int,
    rng: np.random.Generator,
    antennas: Antennas | None = None,
    *,
    n_streams_pbs: int = 1,
    stream_powers: Sequence[float] | None = None,
    sigma2_dbm: float | None = None,
    seed: tuple[int, ...] | None = None,
) -> Drop:
    """Draw ``H0``, ``H1``, ``H10`` (in that order) and build the MBS beams.

    ``budget`` may be a :class:`Deployment`, in which case ``sigma2_dbm`` is
    required and the antenna counts come from the deployment. MBS beams are
    the leading right singular vectors of ``H1``; the MBS power is split
    equally across them unless ``stream_powers`` (fractions or absolute
    values, normalized to ``p1e``) is given.
    """
    if isinstance(budget, Deployment):
        if sigma2_dbm is None:
            raise DomainError("sigma2_dbm is required with a Deployment")
        antennas = budget.antennas
        budget = budget_from_deployment(budget, sigma2_dbm)
    antennas = antennas or Antennas()
    if not (1 <= n_streams_mbs <= min(antennas.n_t1, antennas.n_r1)):
        raise DomainError(
            f"n_streams_mbs={n_streams_mbs} exceeds min(n_t1, n_r1)={min(antennas.n_t1, antennas.n_r1)}"
        )
    h0 = rayleigh(antennas.n_r0, antennas.n_t0, rng)
    h1 = rayleigh(antennas.n_r1, antennas.n_t1, rng)
    h10 = rayleigh(antennas.n_r0, antennas.n_t1, rng)
    V1 = numkit.svd(h1).V
    precoders = tuple(V1[:, k].copy() for k in range(n_streams_mbs))
    if stream_powers is None:
        powers = (budget.p1e / n_streams_mbs,) * n_streams_mbs
    else:
        w = np.asarray(stream_powers, dtype=float)
        if w.shape != (n_streams_mbs,) or np.any(w < 0) or w.sum() <= 0:
            raise DomainError("stream_powers must be n_streams_mbs nonnegative values")
        powers = tuple(float(x) for x in budget.p1e * w / w.sum())
    return Drop(h0, h1, h10, budget, precoders, powers, n_streams_pbs, seed)


def seeded_drop(
    budget: LinkBudget,
    master_seed: int,
    point_index: int = 0,
    drop_index: int = 0,
    antennas: Antennas | None = None,
    n_streams_mbs: int = 1,
    n_streams_pbs: int = 1,
) -> Drop:
    """Convenience wrapper: the drop with key ``(master_seed, point_index, drop_index)``."""
    rng = drop_rng(master_seed, point_index, drop_index)
    return make_drop(
        budget, n_streams_mbs, rng, antennas,
        n_streams_pbs=n_streams_pbs, seed=(master_seed, point_index, drop_index),
    )
