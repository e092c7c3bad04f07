"""Clifford circuit protocols with boundary dissipation.

Sites are 1-indexed in configs (site 1 is the dissipative boundary) and
0-indexed on the tableau.  Qubits ``0..L-1`` are the chain, ``L..L+N_R-1``
the reference qubits.
"""
from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Literal, Optional

import numpy as np

from .clifford import N_CLIFFORD1, N_CLIFFORD2
from .rng import TAG_DISSIPATIVE, TAG_INIT, TAG_PRESCRAMBLE, block_stream, sample_key
from .stabilizer import PauliString, StabilizerState


class ConfigError(ValueError):
    pass


# the six single-qubit stabilizer states, as (x, z, sign)
_PRODUCT_STATES = [(1, 0, 1), (1, 0, -1), (0, 1, 1), (0, 1, -1), (1, 1, 1), (1, 1, -1)]


@dataclass(frozen=True)
class ProtocolConfig:
    L: int
    T: int
    p: float = 0.0
    schedule: Literal["random", "periodic"] = "random"
    period: int = 1
    channel: Literal["erasure", "cnot_ancilla"] = "erasure"
    p_U: Optional[float] = None
    prescramble: Literal["none", "log", "linear"] = "none"
    prescramble_k: float = 1.0
    encoding: Literal["single_pair", "finite_rate"] = "single_pair"
    x0: int = 1
    C: float = 0.5
    seed: int = 0
    n_samples: int = 1
    checkpoints: Literal["final", "pow2"] = "final"
    layer_order: Literal["odd_first", "even_first"] = "odd_first"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.L < 2 or self.L % 2:
            raise ConfigError(f"L must be even and >= 2, got {self.L}")
        if self.T < 1:
            raise ConfigError("T must be >= 1")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError("p must lie in [0, 1]")
        if self.schedule not in ("random", "periodic"):
            raise ConfigError(f"unknown schedule {self.schedule!r}")
        if self.schedule == "periodic" and self.period < 1:
            raise ConfigError("period must be >= 1")
        if self.channel not in ("erasure", "cnot_ancilla"):
            raise ConfigError(f"unknown channel {self.channel!r}")
        if self.p_U is not None and not 0.0 <= self.p_U <= 1.0:
            raise ConfigError("p_U must lie in [0, 1]")
        if self.prescramble not in ("none", "log", "linear"):
            raise ConfigError(f"unknown prescramble {self.prescramble!r}")
        if self.prescramble_k < 0:
            raise ConfigError("prescramble_k must be non-negative")
        if self.encoding == "single_pair":
            if not 1 <= self.x0 <= self.L:
                raise ConfigError("x0 must lie in [1, L]")
        elif self.encoding == "finite_rate":
            if not 0 < self.C < 1:
                raise ConfigError("C must lie in (0, 1)")
            if abs(self.C * self.L - round(self.C * self.L)) > 1e-9:
                raise ConfigError(f"C*L = {self.C * self.L} is not an integer")
        else:
            raise ConfigError(f"unknown encoding {self.encoding!r}")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
        if self.checkpoints not in ("final", "pow2"):
            raise ConfigError(f"unknown checkpoints {self.checkpoints!r}")
        if self.layer_order not in ("odd_first", "even_first"):
            raise ConfigError(f"unknown layer order {self.layer_order!r}")

    @property
    def n_refs(self) -> int:
        return 1 if self.encoding == "single_pair" else int(round(self.C * self.L))

    @property
    def bell_sites(self) -> list[int]:
        """1-indexed chain sites paired with reference qubits."""
        if self.encoding == "single_pair":
            return [self.x0]
        return [int(math.floor(i / self.C)) + 1 for i in range(self.n_refs)]

    @property
    def t_scr(self) -> int:
        if self.prescramble == "log":
            return int(round(self.prescramble_k * math.log2(self.L)))
        if self.prescramble == "linear":
            return int(round(self.prescramble_k * self.L))
        return 0

    def checkpoint_times(self) -> list[int]:
        if self.checkpoints == "final":
            return [self.T]
        ts = [1 << e for e in range(self.T.bit_length()) if (1 << e) <= self.T]
        if ts[-1] != self.T:
            ts.append(self.T)
        return ts

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class TrajectoryRecord:
    config_hash: str
    sample: int
    checkpoints: list[tuple[int, int]] = field(default_factory=list)
    stream: str = ""

    @property
    def final(self) -> int:
        return self.checkpoints[-1][1]


def build_initial_state(config: ProtocolConfig, rng: np.random.Generator) -> StabilizerState:
    """Bell pairs on ``config.bell_sites``; every other site a random stabilizer state."""
    L, nr = config.L, config.n_refs
    n = L + nr
    st = StabilizerState(n, tuple(range(L)), tuple(range(L, n)))
    bell = {s - 1: L + r for r, s in enumerate(config.bell_sites)}
    picks = rng.integers(6, size=L)
    for q in range(L):
        x = np.zeros(n, dtype=bool)
        z = np.zeros(n, dtype=bool)
        if q in bell:
            x[[q, bell[q]]] = True
            st._append(PauliString(x, z.copy(), 1))
            x[:] = False
            z[[q, bell[q]]] = True
            st._append(PauliString(x, z, 1))
        else:
            bx, bz, sg = _PRODUCT_STATES[picks[q]]
            x[q], z[q] = bx, bz
            st._append(PauliString(x, z, sg))
    return st


def _layers(config: ProtocolConfig) -> tuple[np.ndarray, np.ndarray]:
    odd = np.arange(0, config.L - 1, 2, dtype=np.int64)   # pairs (1,2), (3,4), ...
    even = np.arange(1, config.L - 1, 2, dtype=np.int64)  # pairs (2,3), (4,5), ...
    return (odd, even) if config.layer_order == "odd_first" else (even, odd)


def run_timestep(state: StabilizerState, config: ProtocolConfig, t: int,
                 rng: np.random.Generator, dissipate: bool = True,
                 log: list | None = None) -> StabilizerState:
    """Two brickwork layers, then (optionally) one boundary dissipation event.

    Draws are laid out by bond position so full and sparse scrambling, and
    every schedule, consume the block identically.
    """
    nb = config.L - 1
    gate_ids = rng.integers(N_CLIFFORD2, size=nb)
    u_sparse = rng.random(nb)
    u_diss = rng.random()
    rotation = int(rng.integers(N_CLIFFORD1))
    if config.p_U is None:
        active = np.ones(nb, dtype=bool)
    else:
        active = u_sparse < config.p_U
    for first in _layers(config):
        state.apply_layer(first, gate_ids[first], active[first])
        if log is not None:
            for f in first:
                if active[f]:
                    log.append(("gate", int(gate_ids[f]), int(f), int(f) + 1))
    if not dissipate:
        return state
    if config.schedule == "random":
        fire = u_diss < config.p
    else:
        fire = t % config.period == 0
    if fire:
        if config.channel == "erasure":
            state.erase_qubit(0)
            if log is not None:
                log.append(("erase", 0))
        else:
            state.dephase_via_ancilla(0, rotation=rotation)
            if log is not None:
                log.append(("dephase", 0, rotation))
    return state


def run_trajectory(config: ProtocolConfig, sample: int, log: list | None = None) -> TrajectoryRecord:
    key = sample_key(config.seed, sample)
    state = build_initial_state(config, block_stream(key, TAG_INIT, 0))
    if log is not None:
        log.append(("init", state.copy()))
    for t in range(config.t_scr):
        run_timestep(state, config, t, block_stream(key, TAG_PRESCRAMBLE, t), dissipate=False, log=log)
    marks = set(config.checkpoint_times())
    rec = TrajectoryRecord(config.config_hash(), sample, [], f"{int(key[0]):016x}{int(key[1]):016x}")
    for t in range(config.T):
        run_timestep(state, config, t, block_stream(key, TAG_DISSIPATIVE, t), log=log)
        if t + 1 in marks:
            rec.checkpoints.append((t + 1, state.coding_information()))
    return rec


def _run_chunk(args):
    config, samples = args
    return [run_trajectory(config, s) for s in samples]


def run_protocol(config: ProtocolConfig, workers: int | None = 1,
                 samples: range | None = None) -> list[TrajectoryRecord]:
    """Run ``config.n_samples`` independent trajectories, ordered by sample index."""
    samples = range(config.n_samples) if samples is None else samples
    if workers is None or workers <= 1 or len(samples) < 2:
        return [run_trajectory(config, s) for s in samples]
    chunks = [(config, list(samples[i::workers])) for i in range(workers)]
    with ProcessPoolExecutor(workers) as ex:
        parts = list(ex.map(_run_chunk, chunks))
    out = [r for part in parts for r in part]
    return sorted(out, key=lambda r: r.sample)


def mean_sem(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return float(v.mean()), 0.0
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))
