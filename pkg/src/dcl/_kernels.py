"""Numba kernels on generator-sliced bit planes.

Layout: ``X[c, w]`` holds bit ``r`` of word ``w`` set iff generator
``64*w + r`` has an X component on qubit ``c``; same for ``Z``.  ``S[w]``
holds the sign bits.  One machine word therefore carries one qubit column
for 64 generators, and a gate touches ``4 * nwords`` words.
"""
from __future__ import annotations

import numba as nb
import numpy as np

ALL = np.uint64(0xFFFFFFFFFFFFFFFF)
ONE = np.uint64(1)


@nb.njit(cache=True, inline="always")
def _sel(mask, bit, word):
    return word if (mask >> bit) & 1 else np.uint64(0)


@nb.njit(cache=True)
def apply_gate2(X, Z, S, i, j, rm, anf, nw):
    """Conjugate all live generators by a two-qubit Clifford on (i, j)."""
    r0, r1, r2, r3 = rm[0], rm[1], rm[2], rm[3]
    for w in range(nw):
        a = X[i, w]
        b = Z[i, w]
        c = X[j, w]
        d = Z[j, w]
        f = np.uint64(0)
        for m in range(1, 16):
            if (anf >> m) & 1:
                t = ALL
                if m & 8:
                    t &= a
                if m & 4:
                    t &= b
                if m & 2:
                    t &= c
                if m & 1:
                    t &= d
                f ^= t
        S[w] ^= f
        X[i, w] = _sel(r0, 3, a) ^ _sel(r0, 2, b) ^ _sel(r0, 1, c) ^ _sel(r0, 0, d)
        Z[i, w] = _sel(r1, 3, a) ^ _sel(r1, 2, b) ^ _sel(r1, 1, c) ^ _sel(r1, 0, d)
        X[j, w] = _sel(r2, 3, a) ^ _sel(r2, 2, b) ^ _sel(r2, 1, c) ^ _sel(r2, 0, d)
        Z[j, w] = _sel(r3, 3, a) ^ _sel(r3, 2, b) ^ _sel(r3, 1, c) ^ _sel(r3, 0, d)


@nb.njit(cache=True)
def apply_layer(X, Z, S, first, gates, active, rowmask, anf, nw):
    """Apply gates on pairs ``(first[g], first[g]+1)`` where ``active[g]``."""
    for g in range(first.shape[0]):
        if active[g]:
            gi = gates[g]
            apply_gate2(X, Z, S, first[g], first[g] + 1, rowmask[gi], anf[gi], nw)


@nb.njit(cache=True)
def apply_gate1(X, Z, S, i, rm, anf, nw):
    r0, r1 = rm[0], rm[1]
    for w in range(nw):
        a = X[i, w]
        b = Z[i, w]
        f = np.uint64(0)
        if anf & 2:
            f ^= b
        if anf & 4:
            f ^= a
        if anf & 8:
            f ^= a & b
        S[w] ^= f
        X[i, w] = _sel(r0, 1, a) ^ _sel(r0, 0, b)
        Z[i, w] = _sel(r1, 1, a) ^ _sel(r1, 0, b)


@nb.njit(cache=True)
def rowsum(X, Z, S, src, tmask, nw):
    """Multiply every generator in ``tmask`` by generator ``src`` (phase exact)."""
    n = X.shape[0]
    sw = src >> 6
    sb = np.uint64(src & 63)
    lo = np.zeros(nw, dtype=np.uint64)
    hi = np.zeros(nw, dtype=np.uint64)
    for c in range(n):
        xs = (X[c, sw] >> sb) & ONE
        zs = (Z[c, sw] >> sb) & ONE
        if xs == 0 and zs == 0:
            continue
        for w in range(nw):
            m = tmask[w]
            if m == 0:
                continue
            x2 = X[c, w]
            z2 = Z[c, w]
            if xs == 1 and zs == 0:
                plus = z2 & x2
                minus = z2 & ~x2
            elif xs == 1:
                plus = z2 & ~x2
                minus = x2 & ~z2
            else:
                plus = x2 & ~z2
                minus = x2 & z2
            plus &= m
            minus &= m
            carry = lo[w] & plus
            lo[w] ^= plus
            hi[w] ^= carry
            carry = lo[w] & minus
            lo[w] ^= minus
            hi[w] ^= carry ^ minus
            if xs:
                X[c, w] = x2 ^ m
            if zs:
                Z[c, w] = z2 ^ m
    ssign = (S[sw] >> sb) & ONE
    for w in range(nw):
        m = tmask[w]
        flip = hi[w]
        if ssign:
            flip ^= ALL
        S[w] ^= flip & m


@nb.njit(cache=True)
def _move_row(X, Z, S, dst, src):
    """Overwrite generator ``dst`` with generator ``src`` and clear ``src``."""
    n = X.shape[0]
    dw, db = dst >> 6, np.uint64(dst & 63)
    sw, sb = src >> 6, np.uint64(src & 63)
    for c in range(n):
        xb = (X[c, sw] >> sb) & ONE
        zb = (Z[c, sw] >> sb) & ONE
        X[c, sw] &= ~(ONE << sb)
        Z[c, sw] &= ~(ONE << sb)
        X[c, dw] = (X[c, dw] & ~(ONE << db)) | (xb << db)
        Z[c, dw] = (Z[c, dw] & ~(ONE << db)) | (zb << db)
    sbit = (S[sw] >> sb) & ONE
    S[sw] &= ~(ONE << sb)
    S[dw] = (S[dw] & ~(ONE << db)) | (sbit << db)


@nb.njit(cache=True)
def _clear_row(X, Z, S, r):
    w, b = r >> 6, np.uint64(r & 63)
    for c in range(X.shape[0]):
        X[c, w] &= ~(ONE << b)
        Z[c, w] &= ~(ONE << b)
    S[w] &= ~(ONE << b)


@nb.njit(cache=True)
def _delete_row(X, Z, S, r, k):
    if r != k - 1:
        _move_row(X, Z, S, r, k - 1)
    else:
        _clear_row(X, Z, S, r)
    return k - 1


@nb.njit(cache=True)
def _lowest(col, nw):
    for w in range(nw):
        v = col[w]
        if v != 0:
            b = 0
            while not (v >> np.uint64(b)) & ONE:
                b += 1
            return 64 * w + b
    return -1


@nb.njit(cache=True)
def _isolate(X, Z, S, col_arr, site, exclude, nw):
    """Make at most one generator carry a set bit in ``col_arr[site]``.

    Returns that generator's index, or -1.  Generator ``exclude`` is ignored.
    """
    col = col_arr[site, :nw].copy()
    if exclude >= 0:
        col[exclude >> 6] &= ~(ONE << np.uint64(exclude & 63))
    piv = _lowest(col, nw)
    if piv < 0:
        return -1
    col[piv >> 6] &= ~(ONE << np.uint64(piv & 63))
    if _lowest(col, nw) >= 0:
        rowsum(X, Z, S, piv, col, nw)
    return piv


@nb.njit(cache=True)
def erase(X, Z, S, site, k):
    """Replace qubit ``site`` by the maximally mixed state; returns new k."""
    nw = (k + 63) >> 6
    p1 = _isolate(X, Z, S, X, site, -1, nw)
    p2 = _isolate(X, Z, S, Z, site, p1, nw)
    if p1 >= 0 and p2 >= 0:
        hi_, lo_ = max(p1, p2), min(p1, p2)
        k = _delete_row(X, Z, S, hi_, k)
        k = _delete_row(X, Z, S, lo_, k)
    elif p1 >= 0:
        k = _delete_row(X, Z, S, p1, k)
    elif p2 >= 0:
        k = _delete_row(X, Z, S, p2, k)
    return k


@nb.njit(cache=True)
def dephase_z(X, Z, S, site, k):
    """Z-basis dephasing of ``site``: drop the generator anticommuting with Z."""
    nw = (k + 63) >> 6
    p1 = _isolate(X, Z, S, X, site, -1, nw)
    if p1 >= 0:
        k = _delete_row(X, Z, S, p1, k)
    return k


@nb.njit(cache=True)
def rank_columns(X, Z, cols, k):
    """GF(2) rank of the generator matrix restricted to qubits ``cols``."""
    nw = (k + 63) >> 6
    if k == 0:
        return 0
    basis = np.zeros((k, nw), dtype=np.uint64)
    owner = -np.ones(k, dtype=np.int64)
    rank = 0
    v = np.zeros(nw, dtype=np.uint64)
    for t in range(2 * cols.shape[0]):
        c = cols[t >> 1]
        if t & 1:
            for w in range(nw):
                v[w] = Z[c, w]
        else:
            for w in range(nw):
                v[w] = X[c, w]
        while True:
            b = _lowest(v, nw)
            if b < 0:
                break
            o = owner[b]
            if o < 0:
                for w in range(nw):
                    basis[rank, w] = v[w]
                owner[b] = rank
                rank += 1
                break
            for w in range(nw):
                v[w] ^= basis[o, w]
        if rank == k:
            break
    return rank
