"""Clifford group tables for one and two qubits.

Pauli operators on a single qubit are encoded by two bits ``(x, z)`` with
``I=00, X=10, Z=01, Y=11`` and Hermitian ``Y = iXZ``.  A two-qubit Pauli on
an ordered pair ``(i, j)`` is the 4-bit code ``x_i<<3 | z_i<<2 | x_j<<1 | z_j``.

Every Clifford (modulo global phase) is stored as a conjugation table: the
image code of each input Pauli code and the sign picked up.  The groups are
built once by closing the standard generators (H, S, CNOT) under
composition, which gives exactly 24 and 11520 elements.  Uniform sampling is
then a single integer draw.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.diag([1, 1j])
_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def pauli_matrix(code: int, nq: int) -> np.ndarray:
    """Dense Hermitian Pauli matrix for an ``nq``-qubit code (qubit 0 = high bits)."""
    out = np.array([[1.0 + 0j]])
    for q in range(nq):
        shift = 2 * (nq - 1 - q)
        x = (code >> (shift + 1)) & 1
        z = (code >> shift) & 1
        m = _I2
        if x:
            m = m @ _X
        if z:
            m = m @ _Z
        if x and z:
            m = 1j * m
        out = np.kron(out, m)
    return out


def conjugation_table(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(img, sgn)`` with ``u P_v u^dag = (-1)^sgn[v] P_img[v]``."""
    dim = u.shape[0]
    nq = dim.bit_length() - 1
    ncodes = 4**nq
    paulis = [pauli_matrix(c, nq) for c in range(ncodes)]
    img = np.zeros(ncodes, dtype=np.uint8)
    sgn = np.zeros(ncodes, dtype=np.uint8)
    for v in range(ncodes):
        m = u @ paulis[v] @ u.conj().T
        for w in range(ncodes):
            ov = np.trace(paulis[w] @ m) / dim
            if abs(abs(ov) - 1) < 1e-9:
                if abs(ov.imag) > 1e-9:
                    raise ValueError("matrix is not a Clifford unitary")
                img[v] = w
                sgn[v] = 0 if ov.real > 0 else 1
                break
        else:
            raise ValueError("matrix is not a Clifford unitary")
    return img, sgn


def _symplectic_form(a: int, b: int, nq: int) -> int:
    """1 if the Pauli codes ``a`` and ``b`` anticommute."""
    acc = 0
    for q in range(nq):
        xa, za = (a >> (2 * q + 1)) & 1, (a >> (2 * q)) & 1
        xb, zb = (b >> (2 * q + 1)) & 1, (b >> (2 * q)) & 1
        acc ^= (xa & zb) ^ (za & xb)
    return acc


def _anf(truth: np.ndarray) -> int:
    """Algebraic normal form of a boolean function given as a truth table."""
    coef = [int(t) for t in truth]
    n = len(coef)
    step = 1
    while step < n:
        for m in range(n):
            if m & step:
                coef[m] ^= coef[m ^ step]
        step <<= 1
    return sum(1 << m for m, c in enumerate(coef) if c)


@dataclass(frozen=True)
class CliffordGroup:
    """All Cliffords on ``nq`` qubits, as conjugation tables.

    ``rowmask[g, b]`` lists (as an input bit mask) the input bits XORed into
    output bit ``b``; bits run most-significant first, i.e. ``x_i, z_i, x_j,
    z_j``.  ``anf[g]`` encodes the sign flip as a polynomial over GF(2) of the
    input bits.
    """

    nq: int
    img: np.ndarray
    sgn: np.ndarray
    rowmask: np.ndarray
    anf: np.ndarray
    words: tuple[tuple[int, ...], ...]
    generators: tuple[np.ndarray, ...]

    def __len__(self) -> int:
        return self.img.shape[0]

    def unitary(self, index: int) -> np.ndarray:
        """Dense unitary of element ``index`` (up to global phase)."""
        u = np.eye(2**self.nq, dtype=complex)
        for g in self.words[index]:
            u = self.generators[g] @ u
        return u

    def symplectic_class(self, index: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self.img[index])


def _close_group(gens: Sequence[np.ndarray], nq: int) -> CliffordGroup:
    tables = [conjugation_table(g) for g in gens]
    ncodes = 4**nq
    ident = (np.arange(ncodes, dtype=np.uint8), np.zeros(ncodes, dtype=np.uint8))
    seen = {ident[0].tobytes() + ident[1].tobytes(): 0}
    elems = [ident]
    words: list[tuple[int, ...]] = [()]
    head = 0
    while head < len(elems):
        img, sgn = elems[head]
        for gi, (gimg, gsgn) in enumerate(tables):
            nimg = gimg[img]
            nsgn = sgn ^ gsgn[img]
            key = nimg.tobytes() + nsgn.tobytes()
            if key not in seen:
                seen[key] = len(elems)
                elems.append((nimg, nsgn))
                words.append(words[head] + (gi,))
        head += 1

    img = np.stack([e[0] for e in elems])
    sgn = np.stack([e[1] for e in elems])
    nbits = 2 * nq
    rowmask = np.zeros((len(elems), nbits), dtype=np.uint8)
    for b in range(nbits):
        obit = nbits - 1 - b
        for k in range(nbits):
            ibit = nbits - 1 - k
            col = img[:, 1 << ibit]
            rowmask[:, b] |= (((col >> obit) & 1) << ibit).astype(np.uint8)
    anf = np.array([_anf(s) for s in sgn], dtype=np.uint16)
    return CliffordGroup(nq, img, sgn, rowmask, anf, tuple(words), tuple(gens))


@lru_cache(maxsize=None)
def one_qubit_group() -> CliffordGroup:
    return _close_group([_H, _S], 1)


@lru_cache(maxsize=None)
def two_qubit_group() -> CliffordGroup:
    gens = [
        np.kron(_H, _I2),
        np.kron(_I2, _H),
        np.kron(_S, _I2),
        np.kron(_I2, _S),
        _CNOT,
    ]
    return _close_group(gens, 2)


@dataclass(frozen=True)
class CliffordGate2:
    """A two-qubit Clifford, referenced by its index in :func:`two_qubit_group`."""

    index: int

    @classmethod
    def from_table(cls, img: Sequence[int], sgn: Sequence[int]) -> "CliffordGate2":
        """Look up a gate from its conjugation table, validating it first."""
        img = np.asarray(img, dtype=np.uint8)
        sgn = np.asarray(sgn, dtype=np.uint8)
        if img.shape != (16,) or sgn.shape != (16,):
            raise ValueError("two-qubit tables have 16 entries")
        if img[0] != 0 or sgn[0] != 0:
            raise ValueError("identity must map to +identity")
        for a in range(16):
            for b in range(16):
                if _symplectic_form(a, b, 2) != _symplectic_form(int(img[a]), int(img[b]), 2):
                    raise ValueError("table is not symplectic")
        grp = two_qubit_group()
        hit = np.nonzero((grp.img == img).all(axis=1) & (grp.sgn == sgn).all(axis=1))[0]
        if hit.size == 0:
            raise ValueError("sign data inconsistent with any Clifford")
        return cls(int(hit[0]))

    @classmethod
    def identity(cls) -> "CliffordGate2":
        return cls(0)

    @classmethod
    def cnot(cls) -> "CliffordGate2":
        img, sgn = conjugation_table(_CNOT)
        return cls.from_table(img, sgn)

    def unitary(self) -> np.ndarray:
        return two_qubit_group().unitary(self.index)

    def symplectic_class(self) -> tuple[int, ...]:
        return two_qubit_group().symplectic_class(self.index)


N_CLIFFORD1 = 24
N_CLIFFORD2 = 11520


def sample_uniform_clifford2(rng: np.random.Generator) -> CliffordGate2:
    """Draw one of the 11520 two-qubit Cliffords uniformly."""
    return CliffordGate2(int(rng.integers(N_CLIFFORD2)))
