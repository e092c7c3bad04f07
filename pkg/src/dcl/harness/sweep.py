"""Config-driven sweeps over (p, L, T) grids for both engines.

A sweep writes ``results.csv``, ``manifest.json`` and ``plot.gp`` into its
output directory.  CSV content depends only on the spec and seed.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..analytics import critical_p
from ..domainwall import AnnealedConfig, annealed_samples
from ..protocols import ConfigError, ProtocolConfig, mean_sem, run_trajectory
from ..rng import env_seed

CSV_COLUMNS = ["engine", "protocol", "channel", "schedule", "L", "T", "p", "p_U", "t_scr", "C",
               "n_samples", "mean_I", "sem_I", "seed"]

__version__ = "0.1.0"


class SpecError(ValueError):
    pass


def fmt(v) -> str:
    """17 significant digits for floats, plain text otherwise."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


@dataclass
class SweepSpec:
    engine: str
    base: dict
    p_grid: list
    sizes: list  # [[L, T], ...]; L may be null for semi-infinite annealed runs
    samples: int = 1
    out: str = "sweep_out"
    seed: int = 0
    name: str = "sweep"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        d = dict(d)
        if "sizes" not in d and "L_list" in d:
            aspect = d.pop("aspect", 0.5)
            d["sizes"] = [[L, max(1, int(round(aspect * L)))] for L in d.pop("L_list")]
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise SpecError(f"unknown sweep keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise SpecError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "SweepSpec":
        with open(path) as fh:
            try:
                return cls.from_dict(json.load(fh))
            except json.JSONDecodeError as exc:
                raise SpecError(f"malformed JSON: {exc}") from exc

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def validate(self) -> None:
        if self.engine not in ("clifford", "annealed"):
            raise SpecError(f"unknown engine {self.engine!r}")
        if not self.p_grid:
            raise SpecError("p_grid is empty")
        if not self.sizes:
            raise SpecError("size list is empty")
        if self.samples < 1:
            raise SpecError("samples must be >= 1")
        for L, T in self.sizes:
            if self.engine == "clifford" and L is None:
                raise SpecError("clifford sweeps need a finite L")
            if T is None or T < 0:
                raise SpecError("T must be a non-negative integer")
        # build one config per size to surface config errors before running
        for cfg in self.configs(self.p_grid[:1]):
            pass

    def configs(self, p_grid=None):
        p_grid = self.p_grid if p_grid is None else p_grid
        seed = env_seed(self.seed)
        for L, T in self.sizes:
            for p in p_grid:
                kw = dict(self.base)
                try:
                    if self.engine == "clifford":
                        kw = _clifford_kwargs(kw, L)
                        yield ProtocolConfig(L=int(L), T=int(T), p=float(p), seed=seed,
                                             n_samples=self.samples, **kw)
                    else:
                        kw = _annealed_kwargs(kw, L)
                        yield AnnealedConfig(L=None if L is None else int(L), T=int(T), p=float(p),
                                             seed=seed, n_realizations=self.samples, **kw)
                except (TypeError, ValueError) as exc:
                    raise SpecError(f"invalid config at L={L}, T={T}, p={p}: {exc}") from exc


def _clifford_kwargs(kw: dict, L: int) -> dict:
    kw = dict(kw)
    if "prescramble_multiple" in kw:
        kw["prescramble"] = "linear"
        kw["prescramble_k"] = kw.pop("prescramble_multiple")
    return kw


def _annealed_kwargs(kw: dict, L) -> dict:
    kw = dict(kw)
    mode = kw.pop("prescramble", None)
    k = kw.pop("prescramble_k", 1.0)
    if mode is not None and "prescramble_depth" not in kw:
        if L is None:
            raise ValueError("prescramble scaled with L needs a finite L")
        if mode == "log":
            kw["prescramble_depth"] = int(round(k * math.log2(L)))
        elif mode == "linear":
            kw["prescramble_depth"] = int(round(k * L))
        elif mode != "none":
            raise ValueError(f"unknown prescramble {mode!r}")
    return kw


def _clifford_task(args):
    cfg, samples = args
    return [run_trajectory(cfg, s).checkpoints for s in samples]


def _annealed_task(cfg):
    return mean_sem(annealed_samples(cfg))


def _rows_clifford(spec: SweepSpec, workers: int) -> list[dict]:
    cfgs = list(spec.configs())
    tasks = []
    chunk = max(1, spec.samples // max(1, workers))
    for ci, cfg in enumerate(cfgs):
        for s0 in range(0, cfg.n_samples, chunk):
            tasks.append((ci, (cfg, range(s0, min(cfg.n_samples, s0 + chunk)))))
    results = _map([t for _, t in tasks], _clifford_task, workers)
    per_cfg = [[] for _ in cfgs]
    for (ci, _), res in zip(tasks, results):
        per_cfg[ci].extend(res)
    rows = []
    for cfg, trajs in zip(cfgs, per_cfg):
        times = [t for t, _ in trajs[0]]
        for k, t in enumerate(times):
            m, e = mean_sem([tr[k][1] for tr in trajs])
            rows.append(dict(engine="clifford", protocol=cfg.encoding, channel=cfg.channel,
                             schedule=cfg.schedule if cfg.schedule == "random" else f"periodic{cfg.period}",
                             L=cfg.L, T=t, p=cfg.p, p_U=cfg.p_U, t_scr=cfg.t_scr,
                             C=cfg.C if cfg.encoding == "finite_rate" else None,
                             n_samples=cfg.n_samples, mean_I=m, sem_I=e, seed=cfg.seed))
    return rows


def _rows_annealed(spec: SweepSpec, workers: int) -> list[dict]:
    cfgs = list(spec.configs())
    vals = _map(cfgs, _annealed_task, workers)
    rows = []
    for cfg, (v, e) in zip(cfgs, vals):
        rows.append(dict(engine="annealed", protocol=cfg.encoding, channel="depolarizing",
                         schedule=cfg.noise, L="inf" if cfg.right_boundary == "semi_infinite" and cfg.L is None else cfg.L,
                         T=cfg.T, p=cfg.p, p_U=None, t_scr=cfg.prescramble_depth,
                         C=cfg.C if cfg.encoding == "finite_rate" else None,
                         n_samples=cfg.n_realizations if cfg.noise == "random_time" else 1,
                         mean_I=v, sem_I=e, seed=cfg.seed))
    return rows


def _map(items, fn, workers: int):
    if workers <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(workers) as ex:
        return list(ex.map(fn, items))


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([fmt(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


GNUPLOT = """# gnuplot script: mean_I versus p, one curve per (L, T)
set datafile separator ','
set key outside
set xlabel 'p'
set ylabel 'I_{{A,R}}'
{sizes}
plot {plots}
"""


def gnuplot_script(rows: list[dict], csv_name: str = "results.csv") -> str:
    keys = sorted({(str(r["L"]), int(r["T"])) for r in rows}, key=lambda k: (k[1], k[0]))
    plots = []
    for L, T in keys:
        cond = f'(strcol(5) eq "{L}" && $6 == {T})'
        plots.append(f"'{csv_name}' every ::1 using ($7):({cond} ? $12 : 1/0):13 with yerrorlines title 'L={L} T={T}'")
    return GNUPLOT.format(sizes=f"# {len(keys)} curves", plots=", \\\n     ".join(plots))


@dataclass
class SweepResult:
    out_dir: Path
    rows: list
    csv_path: Path
    manifest_path: Path
    plot_path: Path


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    out = Path(spec.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc
    t0 = time.time()
    rows = _rows_clifford(spec, workers) if spec.engine == "clifford" else _rows_annealed(spec, workers)
    text = rows_to_csv(rows)
    csv_path = out / "results.csv"
    csv_path.write_text(text)
    plot_path = out / "plot.gp"
    plot_path.write_text(gnuplot_script(rows))
    manifest = {
        "spec": spec.to_dict(),
        "seed": env_seed(spec.seed),
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "wall_clock_s": time.time() - t0,
        "csv_sha256": hashlib.sha256(text.encode()).hexdigest(),
        "n_rows": len(rows),
    }
    if spec.engine == "annealed":
        q = spec.base.get("q", 2)
        manifest["analytic_p_c"] = {"q": q, "p_c": critical_p(q)}
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return SweepResult(out, rows, csv_path, manifest_path, plot_path)
