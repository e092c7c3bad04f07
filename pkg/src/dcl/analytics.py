"""Closed-form domain-wall quantities: Laplace transforms, critical point,
free energy, excursion exponents and the derived threshold estimates.

Logs are natural unless a function says otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb
from typing import Sequence

import numpy as np


class ModelError(ArithmeticError):
    pass


def catalan_walks(two_k: int) -> int:
    """Number of boundary-avoiding returning walks of length ``two_k``."""
    if two_k < 0 or two_k % 2:
        raise ValueError("length must be a non-negative even integer")
    k = two_k // 2
    return comb(2 * k, k) - comb(2 * k, k + 1)


def w1(q: float) -> float:
    return (q * q + 1) ** 2 / (4 * q * q)


def laplace_za(w: float, p: float) -> float:
    """Laplace transform of the no-wall weight ``(1-p)^(2t)``, ``t >= 1``."""
    a = w * (1 - p) ** 2
    if abs(1 - a) < 1e-15:
        raise ZeroDivisionError(f"z_a has a pole at w={w}, p={p}")
    return a / (1 - a)


def laplace_zf(w: float, p: float, q: float) -> float:
    """Laplace transform of the first-return weight."""
    wq = w1(q)
    if w > wq * (1 + 1e-15):
        raise ValueError(f"w={w} lies beyond the branch point w1={wq}")
    root = math.sqrt(max(0.0, 1 - w / wq))
    return p * (2 - p) / (2 * q) * w * (q * q + 1) / q * (1 - root)


def first_return_closed(t: int, p, q):
    """Closed-form ``Z_f(t)``; works with Fractions."""
    if t < 2:
        return 0 * p
    K = q / (q * q + 1) if not isinstance(q, int) else _frac(q, q * q + 1)
    return p * (2 - p) / q * K ** (2 * t - 3) * catalan_walks(2 * t - 4)


def _frac(a, b):
    from fractions import Fraction

    return Fraction(a, b)


def _bisect(f, lo: float, hi: float, tol: float = 1e-12, maxiter: int = 400) -> float:
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ModelError(f"no sign change on [{lo}, {hi}]")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class AnalyticModel:
    q: float = 2.0

    def __post_init__(self):
        if self.q < 2:
            raise ValueError("q must be >= 2")

    @property
    def w1(self) -> float:
        return w1(self.q)

    @property
    def p_min(self) -> float:
        """Below this p the no-wall pole sits inside the branch point."""
        return 1 - 1 / math.sqrt(self.w1)

    def criticality(self, p: float) -> float:
        """``z_f(w1) z_a(w1) - 1``; positive in the pinned phase."""
        return laplace_zf(self.w1, p, self.q) * laplace_za(self.w1, p) - 1

    def _criticality_u(self, u: float) -> float:
        """``criticality`` written in ``u = 1 - p`` to avoid cancellation near p = 1."""
        q, wq = self.q, self.w1
        a = wq * u * u
        zf = (1 - u * u) / (2 * q) * wq * (q * q + 1) / q
        return zf * a / (1 - a) - 1

    def critical_u(self, tol: float = 1e-12) -> float:
        """``1 - p_c`` by bisection in ``log(1 - p)``.

        Stops once the bracket on ``1 - p`` is below ``tol`` both in absolute
        and relative terms, so large q keeps full precision.
        """
        u_hi = (1 - self.p_min) * (1 - 1e-12)
        grid = np.exp(np.linspace(math.log(u_hi), math.log(1e-300), 80))
        vals = np.array([self._criticality_u(u) for u in grid])
        if np.any(np.diff(vals) > 0):
            raise ModelError("criticality product is not monotone in p")
        if not (vals[0] > 0 > vals[-1]):
            raise ModelError(f"no sign change of the criticality product for q={self.q}")
        lo, hi = math.log(grid[-1]), math.log(grid[0])  # negative at lo, positive at hi
        for _ in range(4000):
            mid = 0.5 * (lo + hi)
            if self._criticality_u(math.exp(mid)) > 0:
                hi = mid
            else:
                lo = mid
            width = math.exp(hi) - math.exp(lo)
            if width < tol and width < tol * math.exp(hi):
                break
        return math.exp(0.5 * (lo + hi))

    def critical_p(self, tol: float = 1e-12) -> float:
        return 1 - self.critical_u(tol)

    def _s2(self, p: float) -> float:
        """``s = sqrt(1 - w2/w1)`` for the pinned-phase root.

        Solving in ``s`` keeps full relative precision of ``w1 - w2`` close
        to the transition.
        """
        wq, q = self.w1, self.q
        a0 = wq * (1 - p) ** 2
        c = p * (2 - p) / (2 * q) * (q * q + 1) / q

        def g(s):
            w = wq * (1 - s * s)
            a = a0 * (1 - s * s)
            if a >= 1:
                return math.inf
            return a / (1 - a) * c * w * (1 - s) - 1

        if not g(0.0) > 0:
            raise ModelError(f"no pinned-phase root at p={p}")
        return _bisect(g, 0.0, 1.0, tol=1e-17)

    def w2(self, p: float) -> float:
        """Root of ``z_a z_f = 1`` on ``(0, w1)``; only exists for ``p < p_c``."""
        s = self._s2(p)
        return self.w1 * (1 - s * s)

    def free_energy(self, p: float) -> float:
        """Free energy per timestep, ``log w*``."""
        if not 0 < p < 1:
            raise ValueError("p must lie in (0, 1)")
        f1 = 2 * math.log((self.q ** 2 + 1) / (2 * self.q))
        # pinned whenever the no-wall pole reaches the branch point
        pole_inside = self.w1 * (1 - p) ** 2 >= 1 - 1e-15
        if not pole_inside and self.criticality(p) <= 0:
            return f1
        s = self._s2(p)
        return f1 + math.log1p(-s * s)

    def excursion_time(self, p: float) -> float:
        """``tau = d ln z_f / d ln w`` at ``w2``."""
        pc = self.critical_p()
        if p >= pc:
            raise ValueError("excursion length is defined in the pinned phase only")
        s = self._s2(p)
        return 1 + (1 - s * s) / (2 * s * (1 - s))

    def excursion_length(self, p: float) -> float:
        return math.sqrt(self.excursion_time(p))


def critical_p(q: float) -> float:
    return AnalyticModel(q).critical_p()


def free_energy(p: float, q: float) -> float:
    return AnalyticModel(q).free_energy(p)


def excursion_length(p: float, q: float) -> float:
    return AnalyticModel(q).excursion_length(p)


def thermalization_time(p: float, q: float, L: float) -> float:
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    return L * math.log(1 / q) / math.log(1 - p)


@dataclass(frozen=True)
class ThresholdEstimates:
    p_th1: float
    p_th2: float
    q: float
    C: float
    L: int
    T: int
    label: str = "scaling estimate"

    def predicted_mi(self, p: float) -> float:
        """Two-trajectory piecewise prediction (log base q)."""
        top = 2 * self.C * self.L
        if p <= self.p_th1:
            return top
        if p >= self.p_th2:
            return 0.0
        val = top - 2 * self.T * math.log((1 - self.p_th1) / (1 - p)) / math.log(self.q)
        return max(0.0, val)


def finite_rate_thresholds(q: float, C: float, L: int, T: int) -> ThresholdEstimates:
    if not 0 < C < 1:
        raise ValueError("C must lie in (0, 1)")
    p1 = 1 - q ** (-(1 - C) * L / (2 * T))
    p2 = 1 - q ** (-(1 + C) * L / (2 * T))
    return ThresholdEstimates(p1, p2, q, C, L, T)


def prescramble_prediction(P0: float, gamma: float, t: float, q: float) -> float:
    """Deficit ``2 - I`` after ``t`` clean steps, in nats, to first order in P."""
    if not 0 <= P0 <= 1:
        raise ValueError("P0 must lie in [0, 1]")
    if t < 0:
        raise ValueError("t must be non-negative")
    denom = P0 + (1 - P0) * math.exp(min(gamma * t, 700.0))
    return (q * q - 1) / q * (P0 / denom if denom else 0.0)


@dataclass
class PrescrambleFit:
    gamma: float
    P0: float
    a: float = math.nan
    residual: float = math.nan
    diagnostics: dict = field(default_factory=dict)


def fit_prescramble_decay(t: Sequence[float], P: Sequence[float]) -> PrescrambleFit:
    """Fit ``P/(1-P) = [P0/(1-P0)] exp(-gamma t)`` by least squares in log-odds."""
    t = np.asarray(t, float)
    P = np.asarray(P, float)
    ok = (P > 0) & (P < 1)
    if ok.sum() < 2:
        raise ModelError("need at least two points with 0 < P < 1")
    lo = np.log(P[ok] / (1 - P[ok]))
    slope, icpt = np.polyfit(t[ok], lo, 1)
    odds0 = math.exp(icpt)
    res = float(np.sqrt(np.mean((icpt + slope * t[ok] - lo) ** 2)))
    return PrescrambleFit(-slope, odds0 / (1 + odds0), residual=res,
                          diagnostics={"n_points": int(ok.sum())})


def fit_survival_power(T: Sequence[float], P0: Sequence[float]) -> float:
    """Exponent ``a`` in ``1 - P0 ~ T^(-a)``."""
    T = np.asarray(T, float)
    d = 1 - np.asarray(P0, float)
    ok = d > 0
    if ok.sum() < 2:
        raise ModelError("need at least two points with P0 < 1")
    slope, _ = np.polyfit(np.log(T[ok]), np.log(d[ok]), 1)
    return float(-slope)


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    slope, _ = np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)
    return float(slope)
