"""Finite-size scaling collapse, crossing points and the algebraic-decay
estimator for the critical point.

The collapse quality is the Houdayer-Hartmann objective: every rescaled
point is compared against a local linear master curve built from the
bracketing points of all *other* sizes, with errors propagated from both.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, Optional, Sequence

import numpy as np
from scipy import stats
from scipy.interpolate import PchipInterpolator


class FitError(ValueError):
    pass


@dataclass
class Dataset:
    """Flat table of (p, size, y, dy) points.

    ``size`` is whatever the scaling variable uses (T for the power-law
    model, L for the step model).
    """

    p: np.ndarray
    size: np.ndarray
    y: np.ndarray
    dy: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, float)
        self.size = np.asarray(self.size, float)
        self.y = np.asarray(self.y, float)
        self.dy = np.asarray(self.dy, float)
        n = self.p.size
        if not (self.size.size == self.y.size == self.dy.size == n):
            raise FitError("dataset columns differ in length")

    @classmethod
    def from_rows(cls, rows: Iterable[tuple]) -> "Dataset":
        rows = list(rows)
        if not rows:
            raise FitError("empty dataset")
        p, s, y, dy = zip(*rows)
        return cls(p, s, y, dy)

    @classmethod
    def from_csv(cls, path, size_col: str = "T", where: Optional[dict] = None) -> "Dataset":
        rows = []
        with open(path, newline="") as fh:
            for r in csv.DictReader(fh):
                if where and any(str(r.get(k)) != str(v) for k, v in where.items()):
                    continue
                rows.append((float(r["p"]), float(r[size_col]), float(r["mean_I"]), float(r["sem_I"])))
        return cls.from_rows(rows)

    @property
    def sizes(self) -> np.ndarray:
        return np.unique(self.size)

    def subset(self, mask) -> "Dataset":
        return Dataset(self.p[mask], self.size[mask], self.y[mask], self.dy[mask])

    def with_floor(self, rel: float = 0.0, abs_: float = 0.0) -> "Dataset":
        dy = np.maximum(self.dy, rel * np.abs(self.y) + abs_)
        return Dataset(self.p, self.size, self.y, dy)


def collapse_quality(x: np.ndarray, y: np.ndarray, dy: np.ndarray, group: np.ndarray) -> float:
    """Houdayer-Hartmann quality ``Q`` (mean normalized squared residual).

    Returns ``inf`` when no point has a bracketing pair in another group.
    """
    groups = [np.nonzero(group == g)[0] for g in np.unique(group)]
    sorted_groups = []
    for idx in groups:
        o = idx[np.argsort(x[idx])]
        sorted_groups.append((x[o], y[o], dy[o]))
    total = 0.0
    count = 0
    for gi, idx in enumerate(groups):
        xi, yi, di = x[idx], y[idx], dy[idx]
        # accumulate weighted least-squares sums over bracketing points
        S = np.zeros(idx.size)
        Sx = np.zeros(idx.size)
        Sy = np.zeros(idx.size)
        Sxx = np.zeros(idx.size)
        Sxy = np.zeros(idx.size)
        npts = np.zeros(idx.size, dtype=int)
        for gj, (xs, ys, ds) in enumerate(sorted_groups):
            if gj == gi or xs.size < 2:
                continue
            j = np.searchsorted(xs, xi)
            ok = (j > 0) & (j < xs.size)
            jj = j[ok]
            for k in (jj - 1, jj):
                w = 1.0 / ds[k] ** 2
                S[ok] += w
                Sx[ok] += w * xs[k]
                Sy[ok] += w * ys[k]
                Sxx[ok] += w * xs[k] ** 2
                Sxy[ok] += w * xs[k] * ys[k]
                npts[ok] += 1
        use = npts >= 2
        if not use.any():
            continue
        S, Sx, Sy, Sxx, Sxy = S[use], Sx[use], Sy[use], Sxx[use], Sxy[use]
        xu = xi[use]
        delta = S * Sxx - Sx * Sx
        good = delta > 0
        Y = np.where(good, (Sxx * Sy - Sx * Sxy + xu * (S * Sxy - Sx * Sy)) / np.where(good, delta, 1), Sy / S)
        dY2 = np.where(good, (Sxx - 2 * xu * Sx + xu * xu * S) / np.where(good, delta, 1), 1 / S)
        r = (yi[use] - Y) ** 2 / (di[use] ** 2 + dY2)
        total += r.sum()
        count += r.size
    return total / count if count else math.inf


@dataclass
class CollapseFit:
    model: Literal["power_law", "step"]
    params: dict
    Q: float
    errors: dict = field(default_factory=dict)
    n_points: int = 0

    def __getitem__(self, key):
        return self.params[key]


_BOUNDS = {
    "power_law": {"p_c": (0.0, 1.0), "beta_over_nu": (0.0, 1.5), "nu": (0.5, 5.0)},
    "step": {"p_d": (0.0, 1.0), "omega": (0.1, 2.0)},
}


def rescale(data: Dataset, model: str, params: dict) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if model == "power_law":
        s = data.size
        x = (data.p - params["p_c"]) * s ** (1.0 / params["nu"])
        f = s ** params["beta_over_nu"]
        return x, data.y * f, data.dy * f
    if model == "step":
        x = (data.p - params["p_d"]) * data.size ** params["omega"]
        return x, data.y, data.dy
    raise FitError(f"unknown model {model!r}")


def quality(data: Dataset, model: str, params: dict) -> float:
    x, y, dy = rescale(data, model, params)
    return collapse_quality(x, y, dy, data.size)


def _search(data: Dataset, model: str, box: dict, fixed: dict, n_grid: int, rounds: int) -> tuple[dict, float]:
    names = [k for k in box if k not in fixed]
    lo = np.array([box[k][0] for k in names], float)
    hi = np.array([box[k][1] for k in names], float)
    best, best_q = None, math.inf
    for _ in range(rounds):
        axes = [np.linspace(a, b, n_grid) for a, b in zip(lo, hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        for v in pts:
            prm = dict(fixed)
            prm.update(zip(names, v))
            qv = quality(data, model, prm)
            if qv < best_q:
                best, best_q = prm, qv
        if best is None:
            raise FitError("collapse quality undefined everywhere on the search box")
        span = (hi - lo) / (n_grid - 1)
        centre = np.array([best[k] for k in names])
        full_lo = np.array([_BOUNDS[model][k][0] for k in names])
        full_hi = np.array([_BOUNDS[model][k][1] for k in names])
        lo = np.maximum(centre - 1.5 * span, full_lo)
        hi = np.minimum(centre + 1.5 * span, full_hi)
    return best, best_q


def fit_collapse(data: Dataset, model: str = "power_law", box: Optional[dict] = None,
                 fixed: Optional[dict] = None, n_grid: int = 9, rounds: int = 5,
                 n_boot: int = 0, seed: int = 0) -> CollapseFit:
    """Minimize ``Q`` over the model parameters by grid refinement.

    ``fixed`` pins parameters; ``box`` overrides search ranges.  Bootstrap
    errors resample every point from a normal with its own standard error.
    """
    if model not in _BOUNDS:
        raise FitError(f"unknown model {model!r}")
    sizes = data.sizes
    if sizes.size < 3:
        raise FitError(f"collapse needs at least three sizes, got {sizes.size}")
    for s in sizes:
        if np.unique(data.p[data.size == s]).size < 5:
            raise FitError(f"size {s:g} has fewer than five p points")
    fixed = dict(fixed or {})
    full = dict(_BOUNDS[model])
    full.update(box or {})
    if np.any(data.dy <= 0):
        raise FitError("all points need positive errors; apply Dataset.with_floor")
    params, Q = _search(data, model, full, fixed, n_grid, rounds)
    errors = {}
    if n_boot:
        rng = np.random.default_rng(seed)
        free = [k for k in full if k not in fixed]
        width = {k: (full[k][1] - full[k][0]) / (n_grid - 1) for k in free}
        sub_box = {k: (max(full[k][0], params[k] - 2 * width[k]), min(full[k][1], params[k] + 2 * width[k]))
                   for k in free}
        draws = []
        for _ in range(n_boot):
            y = data.y + rng.standard_normal(data.y.size) * data.dy
            d = Dataset(data.p, data.size, y, data.dy)
            prm, _ = _search(d, model, sub_box, fixed, n_grid, max(2, rounds - 1))
            draws.append([prm[k] for k in free])
        draws = np.asarray(draws)
        errors = {k: float(draws[:, i].std(ddof=1)) for i, k in enumerate(free)}
    return CollapseFit(model, {k: float(v) for k, v in params.items()}, float(Q), errors, int(data.p.size))


def crossing_point(data: Dataset, p_range: Optional[tuple[float, float]] = None,
                   resolution: int = 4001) -> tuple[float, float, list[float]]:
    """Pairwise crossings of the ``y(p)`` curves of different sizes.

    Returns ``(median, spread, crossings)``; spread is max minus min.
    """
    sizes = data.sizes
    if sizes.size < 2:
        raise FitError("crossing needs at least two sizes")
    curves = {}
    for s in sizes:
        m = data.size == s
        p, y = data.p[m], data.y[m]
        o = np.argsort(p)
        p, y = p[o], y[o]
        if p.size < 2:
            raise FitError(f"size {s} has fewer than two p points")
        curves[s] = (p, PchipInterpolator(p, y, extrapolate=False))
    found = []
    diag = []
    for i, a in enumerate(sizes):
        for b in sizes[i + 1:]:
            pa, fa = curves[a]
            pb, fb = curves[b]
            lo = max(pa[0], pb[0])
            hi = min(pa[-1], pb[-1])
            if p_range:
                lo, hi = max(lo, p_range[0]), min(hi, p_range[1])
            if hi <= lo:
                diag.append((a, b, "no overlap"))
                continue
            g = np.linspace(lo, hi, resolution)
            d = fa(g) - fb(g)
            scale = max(np.max(np.abs(fa(g))), np.max(np.abs(fb(g))), 1e-300)
            nz = np.abs(d) > 1e-12 * scale
            sg = np.sign(d[nz])
            gg = g[nz]
            flips = np.nonzero(sg[:-1] != sg[1:])[0]
            if flips.size == 0:
                diag.append((a, b, "no sign change"))
                continue
            k = flips[0]
            x0, x1 = gg[k], gg[k + 1]
            d0, d1 = fa(x0) - fb(x0), fa(x1) - fb(x1)
            found.append(float(x0 - d0 * (x1 - x0) / (d1 - d0)))
    if not found:
        raise FitError(f"no crossing found: {diag}")
    arr = np.asarray(found)
    return float(np.median(arr)), float(arr.max() - arr.min()), found


@dataclass
class DecayEstimate:
    p_c: float
    beta_over_nu: float
    p_values: dict
    slopes: dict
    curvatures: dict = field(default_factory=dict)
    method: str = "curvature"


def _loglog_fits(p, T, y, dy, T_min):
    """Per-p weighted linear and quadratic fits of ``log y`` against ``log T``."""
    out = {}
    for pv in np.unique(p):
        m = (p == pv) & (T >= T_min) & (y > 0)
        if m.sum() < 4:
            continue
        lx = np.log(T[m])
        ly = np.log(y[m])
        w = 1 / (np.maximum(dy[m], 1e-12) / y[m]) ** 2
        A = np.stack([np.ones_like(lx), lx], axis=1)
        coef = np.linalg.solve(A.T @ (A * w[:, None]), A.T @ (w * ly))
        chi2 = float(np.sum(w * (ly - A @ coef) ** 2))
        curv = np.polyfit(lx, ly, 2, w=np.sqrt(w))[0]
        out[float(pv)] = (float(coef[1]), float(curv), float(stats.chi2.sf(chi2, int(m.sum()) - 2)))
    return out


def algebraic_decay_pc(p: Sequence[float], T: Sequence[float], y: Sequence[float], dy: Sequence[float],
                       alpha: float = 0.05, T_min: float = 0.0, method: str = "curvature") -> DecayEstimate:
    """Smallest p at which ``log I`` versus ``log T`` is a straight line.

    ``method="curvature"`` fits a parabola in ``log T`` for every p and
    returns the first zero of the curvature as p grows: below it the decay
    saturates (upward curvature), above it it accelerates.  The exponent is
    the linear log-log slope interpolated to that point.  This works on
    time series taken from the same trajectories, whose errors are strongly
    correlated across T.

    ``method="chi2"`` accepts the smallest p whose straight-line fit passes a
    chi-square goodness-of-fit test at level ``alpha`` with negative slope;
    it assumes independent errors at different T.
    """
    p = np.asarray(p, float)
    T = np.asarray(T, float)
    y = np.asarray(y, float)
    dy = np.asarray(dy, float)
    fits = _loglog_fits(p, T, y, dy, T_min)
    if len(fits) < 2:
        raise FitError("need at least two p values with four or more usable T points")
    ps = np.array(sorted(fits))
    slopes = {k: v[0] for k, v in fits.items()}
    curvs = {k: v[1] for k, v in fits.items()}
    pvals = {k: v[2] for k, v in fits.items()}
    if method == "chi2":
        passing = [pv for pv in ps if pvals[pv] >= alpha and slopes[pv] < 0]
        if not passing:
            raise FitError("no p value is consistent with algebraic decay")
        pc = float(passing[0])
        return DecayEstimate(pc, -slopes[pc], pvals, slopes, curvs, method)
    if method != "curvature":
        raise FitError(f"unknown method {method!r}")
    c = np.array([curvs[pv] for pv in ps])
    b = np.array([slopes[pv] for pv in ps])
    flips = np.nonzero((c[:-1] > 0) & (c[1:] <= 0))[0]
    if flips.size == 0:
        raise FitError("log-log curvature never changes sign from positive to negative")
    k = flips[0]
    pc = float(ps[k] - c[k] * (ps[k + 1] - ps[k]) / (c[k + 1] - c[k]))
    bnu = float(-np.interp(pc, ps, b))
    return DecayEstimate(pc, bnu, pvals, slopes, curvs, method)
