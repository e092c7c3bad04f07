"""Mixed stabilizer states with generator-sliced bit packing.

Qubit indices are 0-based.  Entropies are in bits.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K
from .clifford import CliffordGate2, one_qubit_group, two_qubit_group

_CHARS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_BITS = {v: k for k, v in _CHARS.items()}


@dataclass
class PauliString:
    x_bits: np.ndarray
    z_bits: np.ndarray
    sign: int = 1

    def __post_init__(self):
        self.x_bits = np.asarray(self.x_bits, dtype=bool)
        self.z_bits = np.asarray(self.z_bits, dtype=bool)
        if self.x_bits.shape != self.z_bits.shape:
            raise ValueError("x and z bit vectors differ in length")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @classmethod
    def from_str(cls, label: str) -> "PauliString":
        """Parse labels like ``"+XZI"`` or ``"-YY"``."""
        sign = 1
        if label[0] in "+-":
            sign = -1 if label[0] == "-" else 1
            label = label[1:]
        bits = [_BITS[c] for c in label.upper().replace("_", "I")]
        return cls([b[0] for b in bits], [b[1] for b in bits], sign)

    def __len__(self) -> int:
        return len(self.x_bits)

    def __str__(self) -> str:
        body = "".join(_CHARS[(int(x), int(z))] for x, z in zip(self.x_bits, self.z_bits))
        return ("+" if self.sign > 0 else "-") + body

    def support(self) -> set[int]:
        return set(np.nonzero(self.x_bits | self.z_bits)[0].tolist())

    def is_identity(self) -> bool:
        return not self.support()

    def commutes(self, other: "PauliString") -> bool:
        acc = np.sum(self.x_bits & other.z_bits) + np.sum(self.z_bits & other.x_bits)
        return acc % 2 == 0


def _region(n: int, region: Iterable[int]) -> np.ndarray:
    idx = np.asarray(sorted(region), dtype=np.int64)
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise ValueError(f"region index out of range for {n} qubits")
    if np.unique(idx).size != idx.size:
        raise ValueError("region has duplicate indices")
    return idx


def _gf2_rank(mat: np.ndarray) -> int:
    m = mat.copy().astype(np.uint8)
    rank = 0
    rows, cols = m.shape
    for c in range(cols):
        piv = np.nonzero(m[rank:, c])[0]
        if piv.size == 0:
            continue
        p = rank + piv[0]
        m[[rank, p]] = m[[p, rank]]
        hit = np.nonzero(m[:, c])[0]
        hit = hit[hit != rank]
        m[hit] ^= m[rank]
        rank += 1
        if rank == rows:
            break
    return rank


@dataclass
class StabilizerState:
    """Stabilizer group on ``n_qubits`` qubits given by ``k`` generators.

    ``system`` and ``references`` label which qubits play which role in
    mutual-information queries; they do not constrain the operations.
    """

    n_qubits: int
    system: tuple[int, ...] = ()
    references: tuple[int, ...] = ()
    k: int = 0
    X: np.ndarray = field(default=None, repr=False)
    Z: np.ndarray = field(default=None, repr=False)
    S: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        nw = max(1, (self.n_qubits + 63) // 64)
        if self.X is None:
            self.X = np.zeros((self.n_qubits, nw), dtype=np.uint64)
            self.Z = np.zeros((self.n_qubits, nw), dtype=np.uint64)
            self.S = np.zeros(nw, dtype=np.uint64)
        if not self.system and not self.references:
            self.system = tuple(range(self.n_qubits))

    # construction ---------------------------------------------------------
    @classmethod
    def from_generators(
        cls,
        gens: Sequence[PauliString | str],
        n_qubits: int | None = None,
        system: Sequence[int] = (),
        references: Sequence[int] = (),
        check: bool = True,
    ) -> "StabilizerState":
        gens = [PauliString.from_str(g) if isinstance(g, str) else g for g in gens]
        n = n_qubits if n_qubits is not None else len(gens[0])
        st = cls(n, tuple(system), tuple(references))
        for g in gens:
            if len(g) != n:
                raise ValueError("generator length does not match qubit count")
            st._append(g)
        if check:
            st.check_invariants()
        return st

    def _append(self, g: PauliString) -> None:
        r = self.k
        if r >= self.n_qubits:
            raise ValueError("more generators than qubits")
        w, b = r >> 6, np.uint64(r & 63)
        one = np.uint64(1) << b
        self.X[g.x_bits, w] |= one
        self.Z[g.z_bits, w] |= one
        if g.sign < 0:
            self.S[w] |= one
        self.k += 1

    def copy(self) -> "StabilizerState":
        return StabilizerState(
            self.n_qubits, self.system, self.references, self.k,
            self.X.copy(), self.Z.copy(), self.S.copy(),
        )

    # inspection -----------------------------------------------------------
    def _unpack(self, arr: np.ndarray) -> np.ndarray:
        bits = np.unpackbits(arr.view(np.uint8), axis=-1, bitorder="little")
        return bits[..., : self.k].astype(bool)

    def matrix(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(x, z, signs)`` with ``x, z`` of shape ``(k, n)``."""
        x = self._unpack(self.X).T
        z = self._unpack(self.Z).T
        s = self._unpack(self.S[None, :])[0]
        return x, z, s

    def generators(self) -> list[PauliString]:
        x, z, s = self.matrix()
        return [PauliString(x[r], z[r], -1 if s[r] else 1) for r in range(self.k)]

    def is_pure(self) -> bool:
        return self.k == self.n_qubits

    def check_invariants(self) -> None:
        """Raise if generators fail to commute or are dependent."""
        x, z, _ = self.matrix()
        xi, zi = x.astype(np.int64), z.astype(np.int64)
        comm = (xi @ zi.T + zi @ xi.T) % 2
        if comm.any():
            raise AssertionError("generators do not commute")
        if _gf2_rank(np.hstack([x, z])) != self.k:
            raise AssertionError("generators are not independent")
        live = np.unpackbits(self.S.view(np.uint8), bitorder="little")
        if live[self.k:].any():
            raise AssertionError("stale sign bits beyond k")

    # operations -----------------------------------------------------------
    def _check_site(self, *sites: int) -> None:
        for s in sites:
            if not 0 <= s < self.n_qubits:
                raise IndexError(f"site {s} out of range for {self.n_qubits} qubits")

    @property
    def _nw(self) -> int:
        return (self.k + 63) >> 6

    def apply_two_qubit_clifford(self, gate: CliffordGate2 | int, sites: tuple[int, int]) -> "StabilizerState":
        i, j = sites
        self._check_site(i, j)
        if i == j:
            raise ValueError("two-qubit gate needs distinct sites")
        gi = gate.index if isinstance(gate, CliffordGate2) else int(gate)
        grp = two_qubit_group()
        K.apply_gate2(self.X, self.Z, self.S, i, j, grp.rowmask[gi], int(grp.anf[gi]), self._nw)
        return self

    def apply_single_qubit_clifford(self, index: int, site: int) -> "StabilizerState":
        self._check_site(site)
        grp = one_qubit_group()
        K.apply_gate1(self.X, self.Z, self.S, site, grp.rowmask[index], int(grp.anf[index]), self._nw)
        return self

    def apply_layer(self, first: np.ndarray, gates: np.ndarray, active: np.ndarray) -> "StabilizerState":
        """Gates ``gates[g]`` on disjoint pairs ``(first[g], first[g] + 1)``."""
        grp = two_qubit_group()
        K.apply_layer(self.X, self.Z, self.S, first, gates, active, grp.rowmask, grp.anf, self._nw)
        return self

    def erase_qubit(self, site: int) -> "StabilizerState":
        self._check_site(site)
        self.k = int(K.erase(self.X, self.Z, self.S, site, self.k))
        return self

    def dephase(self, site: int) -> "StabilizerState":
        """Z-basis dephasing of ``site``."""
        self._check_site(site)
        self.k = int(K.dephase_z(self.X, self.Z, self.S, site, self.k))
        return self

    def dephase_via_ancilla(self, site: int, rng: np.random.Generator | None = None,
                            rotation: int | None = None) -> "StabilizerState":
        """Random single-qubit Clifford, then CNOT onto a traced-out |0> ancilla.

        The ancilla is never materialised: CNOT onto a fresh ancilla followed by
        its partial trace is Z-dephasing of the control.
        """
        if rotation is None:
            rotation = int(rng.integers(24))
        self.apply_single_qubit_clifford(rotation, site)
        return self.dephase(site)

    # entropies ------------------------------------------------------------
    def entropy(self, region: Iterable[int]) -> int:
        idx = _region(self.n_qubits, region)
        mask = np.ones(self.n_qubits, dtype=bool)
        mask[idx] = False
        comp = np.nonzero(mask)[0].astype(np.int64)
        return int(idx.size - self.k + K.rank_columns(self.X, self.Z, comp, self.k))

    def mutual_information(self, a: Iterable[int], r: Iterable[int]) -> int:
        a = set(a)
        r = set(r)
        if a & r:
            raise ValueError("regions overlap")
        return self.entropy(a) + self.entropy(r) - self.entropy(a | r)

    def coding_information(self) -> int:
        """I(system : references), using one rank per side when they partition."""
        sys_ = np.asarray(self.system, dtype=np.int64)
        ref = np.asarray(self.references, dtype=np.int64)
        if sys_.size + ref.size != self.n_qubits:
            return self.mutual_information(self.system, self.references)
        ra = K.rank_columns(self.X, self.Z, sys_, self.k)
        rr = K.rank_columns(self.X, self.Z, ref, self.k)
        return int(ra + rr - self.k)
