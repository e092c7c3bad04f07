"""Sweep recipes for the figure reproductions.

``desk`` scale caps L at 512 and samples at 1000; ``paper`` scale lists the
larger grids but is never the default.
"""
from __future__ import annotations

import numpy as np

from .sweep import SweepSpec

FIGURES = ("fig2", "fig4", "fig6", "fig8", "fig9", "fig10")


def _grid(lo, hi, n):
    return [round(float(v), 10) for v in np.linspace(lo, hi, n)]


def recipe(fig: str, scale: str = "desk", out: str = ".", seed: int = 0,
           samples: int | None = None) -> list[SweepSpec]:
    """Return the sweep specs behind one figure."""
    if scale not in ("desk", "paper"):
        raise ValueError(f"unknown scale {scale!r}")
    paper = scale == "paper"
    root = f"{out}/{fig}"
    if fig == "fig2":
        Ts = [2 ** e for e in range(6, 13 if not paper else 15)]
        return [SweepSpec("annealed", {"q": 2, "right_boundary": "semi_infinite", "x0": 1},
                          _grid(0.2, 0.6, 41), [[None, T] for T in Ts], 1, root, seed, fig)]
    if fig == "fig4":
        Ls = [128, 256, 512] + ([1024] if paper else [])
        n = samples or (1000 if not paper else 4000)
        return [SweepSpec("clifford", {"channel": "erasure", "checkpoints": "pow2"},
                          _grid(0.3, 0.7, 9), [[L, L // 2] for L in Ls], n, root, seed, fig)]
    if fig == "fig6":
        Ls = [64, 128, 256] + ([512] if paper else [])
        n = samples or 1000
        ann = SweepSpec("annealed", {"q": 2, "right_boundary": "absorbing", "x0": 1,
                                     "prescramble": "log", "prescramble_k": 4},
                        _grid(0.05, 0.95, 19), [[L, L] for L in Ls + [512, 1024]], 1,
                        root + "/annealed", seed, fig + "a")
        cl = SweepSpec("clifford", {"channel": "erasure", "prescramble": "log", "prescramble_k": 1},
                       _grid(0.2, 0.9, 15), [[L, L // 2] for L in Ls], n, root + "/clifford", seed, fig + "b")
        return [ann, cl]
    if fig == "fig8":
        Ls = [32, 64, 128] + ([256] if paper else [])
        n = samples or 1000
        ann = SweepSpec("annealed", {"q": 2, "right_boundary": "absorbing", "x0": 1,
                                     "prescramble": "linear", "prescramble_k": 1},
                        _grid(0.0, 0.3, 61), [[L, 4 * L] for L in Ls + [256, 512]], 1,
                        root + "/annealed", seed, fig + "-annealed")
        cl = SweepSpec("clifford", {"channel": "erasure", "prescramble": "linear", "prescramble_k": 1},
                       _grid(0.02, 0.3, 15), [[L, 4 * L] for L in Ls], n, root + "/clifford", seed, fig)
        return [ann, cl]
    if fig == "fig9":
        Ls = [32, 64, 128] + ([256] if paper else [])
        return [SweepSpec("annealed", {"q": 2, "right_boundary": "absorbing", "encoding": "finite_rate",
                                       "C": 0.5, "prescramble": "linear", "prescramble_k": 1},
                          _grid(0.0, 0.3, 61), [[L, 7 * L] for L in Ls], 1, root, seed, fig)]
    if fig == "fig10":
        Ls = [16, 32, 64] + ([128] if paper else [])
        n = samples or (200 if not paper else 1000)
        return [SweepSpec("clifford", {"channel": "erasure", "encoding": "finite_rate", "C": 0.5,
                                       "prescramble": "linear", "prescramble_k": 1},
                          _grid(0.0, 0.5, 11), [[L, 4 * L] for L in Ls], n, root, seed, fig)]
    raise ValueError(f"unknown figure {fig!r}; choose from {FIGURES}")
