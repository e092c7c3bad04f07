"""Transfer-matrix evaluation of the annealed domain-wall partition sums.

Position convention: ``y`` counts the flipped (up) sites at the dissipative
end, so ``y = 0`` means no wall, ``1 <= y <= L-1`` is a wall between sites
``y`` and ``y+1`` (1-indexed), and ``y = L`` is the RIGHT slot (wall absorbed
at the clean boundary).  Site ``x`` is up iff ``x <= y``.

The DP runs from the top (final) time boundary towards the initial state, so
each timestep is processed as dissipation, even layer, odd layer, and any
pre-scrambling becomes a trailing window with dissipation switched off.

Two auxiliary slots pin the lattice alignment:

* ``nascent``: a wall created by dissipation skips the odd layer of its own
  timestep and appears at ``y = 1`` at the end of it.
* ``R`` (refractory): weight annihilated during the current timestep.  It
  rejoins ``y = 0`` at the next dissipation event with the no-wall weight
  ``(1-p)^2`` but cannot create a wall there.

With these rules the first-return weights and the no-wall weights equal the
closed forms exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Literal, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .rng import TAG_ANNEALED, block_stream, sample_key


def hop_weight(q):
    return q / (q * q + 1)


def creation_weight(p, q):
    return p * (2 - p) / q


@dataclass
class WalkLattice:
    """Weights ``z[y]`` for ``y = 0..L`` plus the refractory slot ``R``.

    ``semi_infinite`` lattices are sized so the wall can never reach the
    RIGHT slot, which therefore stays 0.
    """

    q: object
    L: int
    z: np.ndarray
    R: object = 0
    log_norm: float = 0.0
    semi_infinite: bool = False
    exact: bool = False
    steps: int = 0

    @classmethod
    def empty(cls, q, L: Optional[int], horizon: int = 0, exact: bool = False) -> "WalkLattice":
        """All weight on ``y = 0``.  ``L=None`` gives a semi-infinite chain good for ``horizon`` steps."""
        semi = L is None
        if semi:
            L = 2 * horizon + 4
        if L < 2 or L % 2:
            raise ValueError("L must be even and >= 2")
        if exact:
            q = Fraction(q)
            z = np.array([Fraction(0)] * (L + 1), dtype=object)
            z[0] = Fraction(1)
            R = Fraction(0)
        else:
            z = np.zeros(L + 1)
            z[0] = 1.0
            R = 0.0
        return cls(q, L, z, R, 0.0, semi, exact)

    def copy(self) -> "WalkLattice":
        return replace(self, z=self.z.copy())

    @property
    def right(self):
        return self.z[self.L]

    @property
    def closed(self):
        """Weight with no wall present (``y = 0`` plus refractory)."""
        return self.z[0] + self.R

    def total(self):
        return self.z.sum() + self.R

    def log_total(self) -> float:
        return self.log_norm + math.log(float(self.total()))

    def normalize(self) -> None:
        if self.exact:
            return
        s = self.total()
        if s <= 0:
            raise FloatingPointError("all weights vanished")
        self.z /= s
        self.R /= s
        self.log_norm += math.log(s)


def _layer(lat: WalkLattice, parity: int, K) -> None:
    """One brickwork layer: walls at ``y ≡ parity (mod 2)`` hop to ``y ± 1``."""
    z, L = lat.z, lat.L
    # walls cannot be further out than the light cone of the steps taken
    hi = min(L, 2 * lat.steps + 4)
    if parity:
        m = z[1:hi:2] * K
        z[1:hi:2] = 0
        z0 = z[0]
        z[0:hi - 1:2] += m
        z[0] = z0
        # y = 1 -> 0 is annihilation
        lat.R = lat.R + m[0]
        z[2:hi + 1:2] += m
    else:
        m = z[2:hi:2] * K
        z[2:hi:2] = 0
        z[1:hi - 1:2] += m
        z[3:hi + 1:2] += m


def step(lat: WalkLattice, dissipation_on: bool = True, p=None, strength=None) -> WalkLattice:
    """Advance the lattice by one timestep in place and return it.

    ``p`` is the dissipation strength; ``strength`` overrides it for this
    step only (used for random-time noise).
    """
    q = lat.q
    K = hop_weight(q)
    pp = p if strength is None else strength
    if lat.exact and pp is not None:
        pp = Fraction(pp)
    if dissipation_on:
        keep = (1 - pp) ** 2
        nascent = creation_weight(pp, q) * lat.z[0]
        lat.z[0] = keep * (lat.z[0] + lat.R)
    else:
        nascent = 0
        lat.z[0] = lat.z[0] + lat.R
    lat.R = lat.z[0] * 0
    _layer(lat, 0, K)
    _layer(lat, 1, K)
    lat.z[1] += nascent
    if lat.semi_infinite and lat.z[lat.L] != 0:
        raise RuntimeError("semi-infinite lattice too short for the requested horizon")
    lat.steps += 1
    lat.normalize()
    return lat


def survival_probability(lat: WalkLattice, x0: int) -> float:
    """Weight fraction with site ``x0`` flipped, i.e. wall at ``y >= x0`` or RIGHT."""
    if not 1 <= x0 <= lat.L:
        raise ValueError("x0 out of range")
    tot = lat.total()
    return float(lat.z[x0:].sum() / tot) if tot else 0.0


def annealed_mi(P, q) -> float:
    """Annealed mutual information (log base q) from the survival probability."""
    if not 0.0 <= P <= 1.0:
        raise ValueError(f"P must lie in [0, 1], got {P}")
    if q < 2:
        raise ValueError("q must be >= 2")
    if P == 0:
        return 2.0
    if P == 1:
        return 0.0
    return math.log((q * q - q * (q - 1) * P) / (1 + (q - 1) * P)) / math.log(q)


@dataclass(frozen=True)
class AnnealedConfig:
    q: float = 2
    L: Optional[int] = None
    T: int = 64
    p: float = 0.5
    prescramble_depth: int = 0
    right_boundary: Literal["absorbing", "semi_infinite"] = "semi_infinite"
    encoding: Literal["single_pair", "finite_rate"] = "single_pair"
    x0: int = 1
    C: float = 0.5
    noise: Literal["deterministic", "random_time"] = "deterministic"
    n_realizations: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.q < 2:
            raise ValueError("q must be >= 2")
        if self.T < 0 or self.prescramble_depth < 0:
            raise ValueError("T and prescramble_depth must be non-negative")
        if self.right_boundary not in ("absorbing", "semi_infinite"):
            raise ValueError(f"unknown right boundary {self.right_boundary!r}")
        if self.right_boundary == "absorbing" and self.L is None:
            raise ValueError("absorbing boundary needs a finite L")
        if self.L is not None and (self.L < 2 or self.L % 2):
            raise ValueError("L must be even and >= 2")
        if self.encoding == "single_pair":
            if self.x0 < 1 or (self.L is not None and self.x0 > self.L):
                raise ValueError("x0 out of range")
        elif self.encoding == "finite_rate":
            if self.L is None:
                raise ValueError("finite_rate encoding needs a finite L")
            if not 0 < self.C < 1 or abs(self.C * self.L - round(self.C * self.L)) > 1e-9:
                raise ValueError("C must lie in (0, 1) with C*L integral")
        else:
            raise ValueError(f"unknown encoding {self.encoding!r}")
        if self.noise not in ("deterministic", "random_time"):
            raise ValueError(f"unknown noise mode {self.noise!r}")

    @property
    def bell_sites(self) -> list[int]:
        if self.encoding == "single_pair":
            return [self.x0]
        n = int(round(self.C * self.L))
        return [int(math.floor(i / self.C)) + 1 for i in range(n)]


def run_lattice(cfg: AnnealedConfig, mask: Optional[np.ndarray] = None, exact: bool = False) -> WalkLattice:
    """T dissipative steps then ``prescramble_depth`` dissipation-free steps.

    ``mask`` (length T, bool) selects the steps where a strength-1 event fires
    in random-time mode.
    """
    horizon = cfg.T + cfg.prescramble_depth
    L = cfg.L if cfg.right_boundary == "absorbing" else None
    if L is None and cfg.L is not None:
        L = max(cfg.L, 2 * horizon + 4)
        L += L % 2
    lat = WalkLattice.empty(cfg.q, L, horizon, exact)
    if L is not None and cfg.right_boundary == "semi_infinite":
        lat.semi_infinite = True
    for t in range(cfg.T):
        if mask is None:
            step(lat, True, cfg.p)
        elif mask[t]:
            step(lat, True, cfg.p, strength=1.0)
        else:
            step(lat, False)
    for _ in range(cfg.prescramble_depth):
        step(lat, False)
    return lat


def noise_mask(cfg: AnnealedConfig, realization: int) -> np.ndarray:
    rng = block_stream(sample_key(cfg.seed, realization), TAG_ANNEALED, 0)
    return rng.random(cfg.T) < cfg.p


def _mi_from_lattice(cfg: AnnealedConfig, lat: WalkLattice) -> float:
    if cfg.encoding == "single_pair":
        return annealed_mi(min(1.0, max(0.0, survival_probability(lat, cfg.x0))), cfg.q)
    return _finite_rate_from_lattice(cfg, lat)


def _finite_rate_from_lattice(cfg: AnnealedConfig, lat: WalkLattice) -> float:
    q = float(cfg.q)
    lq = math.log(q)
    sites = np.asarray(cfg.bell_sites)
    L = lat.L
    y = np.arange(L + 1)
    # number of Bell sites that are flipped (site <= y) for each wall position
    n_up = np.searchsorted(np.sort(sites), y, side="right")
    n_dn = sites.size - n_up
    w = np.array([float(v) for v in lat.z])
    w[0] += float(lat.R)
    with np.errstate(divide="ignore"):
        lw = np.log(w)
    log_dn = logsumexp(lw + lq * (2 * n_dn + n_up))
    log_up = logsumexp(lw + lq * (2 * n_up + n_dn))
    n_r = sites.size
    val = n_r + (log_dn - log_up) / lq
    return float(min(2 * n_r, max(0.0, val)))


def annealed_samples(cfg: AnnealedConfig) -> np.ndarray:
    """Per-realization mutual information; a single entry for deterministic noise."""
    if cfg.noise == "deterministic":
        return np.array([_mi_from_lattice(cfg, run_lattice(cfg))])
    return np.array([_mi_from_lattice(cfg, run_lattice(cfg, noise_mask(cfg, r)))
                     for r in range(cfg.n_realizations)])


def annealed_run(cfg: AnnealedConfig) -> float:
    """Annealed mutual information for one configuration (log base q)."""
    return float(np.mean(annealed_samples(cfg)))


def annealed_mi_curve(cfg: AnnealedConfig, p_grid: Sequence[float]) -> list[tuple[float, float]]:
    return [(float(p), annealed_run(replace(cfg, p=float(p)))) for p in p_grid]


def finite_rate_mi(cfg: AnnealedConfig) -> float:
    if cfg.encoding != "finite_rate":
        raise ValueError("finite_rate_mi needs a finite_rate encoding")
    return annealed_run(cfg)


# closed-form pinning ---------------------------------------------------------

def first_return_weights(q, p, tmax: int, exact: bool = False) -> list:
    """``Z_f(t)`` for ``t = 1..tmax`` extracted from the DP.

    The wall is created at the first dissipation event only; ``Z_f(t)`` is the
    weight annihilated during timestep ``t``.
    """
    lat = WalkLattice.empty(q, None, tmax, exact)
    lat.normalize = lambda: None  # keep raw weights
    out = []
    for t in range(tmax):
        step(lat, True, p)
        if t == 0:
            lat.z[0] = lat.z[0] * 0
        out.append(lat.R)
        lat.R = lat.R * 0
    return out


def no_wall_weights(q, p, tmax: int, exact: bool = False) -> list:
    """``Z_a(t)`` for ``t = 1..tmax``: weight that never leaves ``y = 0``."""
    lat = WalkLattice.empty(q, None, tmax, exact)
    lat.normalize = lambda: None
    out = []
    for _ in range(tmax):
        step(lat, True, p)
        lat.z[1:] = lat.z[1:] * 0
        lat.R = lat.R * 0
        out.append(lat.z[0])
    return out


def closed_partition(q, p, T: int, exact: bool = False):
    """Weight of histories with no wall at either time boundary, ``Z(T)``."""
    lat = WalkLattice.empty(q, None, T, exact)
    if exact:
        lat.normalize = lambda: None
    for _ in range(T):
        step(lat, True, p)
    if exact:
        return lat.closed
    return lat.log_norm + math.log(float(lat.closed))


def log_partition_series(q, p, T: int) -> np.ndarray:
    """``log Z(t)`` (closed histories) for ``t = 1..T`` on a semi-infinite lattice."""
    lat = WalkLattice.empty(q, None, T)
    out = np.empty(T)
    for t in range(T):
        step(lat, True, p)
        out[t] = lat.log_norm + math.log(float(lat.closed))
    return out


def dp_free_energy(q, p, T: int) -> float:
    """``-log Z(T) / T`` from the DP (natural log)."""
    return -closed_partition(q, p, T) / T


def dp_free_energy_ratio(q, p, T: int) -> float:
    """``log Z(T-1) - log Z(T)``, the local free energy per timestep."""
    s = log_partition_series(q, p, T)
    return float(s[-2] - s[-1])


def renewal_partition(za: Sequence, zf: Sequence, T: int) -> list:
    """Closed partition sums built from alternating no-wall and free segments.

    ``za[t-1]``, ``zf[t-1]`` are the segment weights of length ``t``.
    Returns ``Z(1..T)``.
    """
    A = [0] * (T + 1)  # ending with a no-wall segment
    F = [0] * (T + 1)  # ending with a free segment
    for n in range(1, T + 1):
        a = za[n - 1]
        f = zf[n - 1]
        for t in range(1, n):
            a = a + F[n - t] * za[t - 1]
            f = f + A[n - t] * zf[t - 1]
        A[n], F[n] = a, f
    return [A[n] + F[n] for n in range(1, T + 1)]


def right_overtakes_time(q, p, L: int, tmax: int) -> Optional[int]:
    """First timestep where the RIGHT weight exceeds the pinned (no-wall) weight."""
    lat = WalkLattice.empty(q, L)
    for t in range(1, tmax + 1):
        step(lat, True, p)
        if lat.right > lat.closed:
            return t
    return None


def locate_depinning(q, T: int = 4096, p_grid: Optional[Sequence[float]] = None, deg: int = 3) -> float:
    """Depinning point from the DP free energy alone.

    In the pinned phase ``log w1 - f`` vanishes quadratically at the
    transition, so its square root has a simple zero there.  The local free
    energy ``log Z(T-1) - log Z(T)`` is fitted by a polynomial in p below the
    transition and the zero closest to the window is returned.
    """
    if p_grid is None:
        p_grid = np.linspace(0.33, 0.356, 8)
    wq = (q * q + 1) ** 2 / (4 * q * q)
    ps = np.asarray(p_grid, float)
    f = np.array([dp_free_energy_ratio(q, p, T) for p in ps])
    gap = math.log(wq) - f
    if np.any(gap <= 0):
        raise ValueError("window reaches into the depinned phase")
    roots = np.roots(np.polyfit(ps, np.sqrt(gap), deg))
    roots = roots[np.isreal(roots)].real
    roots = roots[roots > ps.max()]
    if roots.size == 0:
        raise ValueError("no zero beyond the fitted window")
    return float(roots.min())
