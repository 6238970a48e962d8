"""Strong typicality over finite alphabets at toy block lengths.

Sequences are stored as integer index arrays into an alphabet of symbol
values.  A sequence is delta-typical for a distribution p when every
symbol's empirical frequency is within delta of p and symbols of zero
probability never occur.  Sets are materialized exhaustively and kept in
lexicographic order so that downstream binning is reproducible.
"""

from __future__ import annotations

import math

import numpy as np

SEQUENCE_CAP = 1 << 22
_EPS = 1e-9


def entropy(probs) -> float:
    """Shannon entropy in bits."""
    p = np.asarray(probs, dtype=float)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz)))


def all_sequences(num_symbols: int, length: int, cap: int = SEQUENCE_CAP) -> np.ndarray:
    """Every index sequence of the given length, lexicographically ordered."""
    total = num_symbols ** length
    if total > cap:
        raise ValueError(f"{num_symbols}^{length} = {total} sequences exceed cap {cap}")
    dtype = np.int8 if num_symbols < 128 else np.int16
    grids = np.meshgrid(*([np.arange(num_symbols, dtype=dtype)] * length), indexing="ij")
    return np.stack(grids, axis=-1).reshape(total, length)


def counts_matrix(seqs: np.ndarray, num_symbols: int) -> np.ndarray:
    """Per-sequence symbol counts, shape (n_seqs, num_symbols)."""
    n, _ = seqs.shape
    out = np.zeros((n, num_symbols), dtype=np.int32)
    for a in range(num_symbols):
        out[:, a] = (seqs == a).sum(axis=1)
    return out


def typical_mask(counts: np.ndarray, probs, delta: float) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    length = counts.sum(axis=1, keepdims=True)
    freq = counts / length
    ok = np.all(np.abs(freq - p) <= delta + _EPS, axis=1)
    ok &= np.all((counts == 0) | (p > 0), axis=1)
    return ok


def typical_sequences(probs, length: int, delta: float,
                      cap: int = SEQUENCE_CAP) -> np.ndarray:
    """All delta-typical index sequences for ``probs``, lexicographic order."""
    p = np.asarray(probs, dtype=float)
    seqs = all_sequences(len(p), length, cap)
    mask = typical_mask(counts_matrix(seqs, len(p)), p, delta)
    return seqs[mask]


def is_typical(seq, probs, delta: float) -> bool:
    arr = np.asarray(seq, dtype=np.int64).reshape(1, -1)
    return bool(typical_mask(counts_matrix(arr, len(np.asarray(probs))), probs, delta)[0])


def pair_counts(seq_a, seq_b, num_a: int, num_b: int) -> np.ndarray:
    """Empirical joint counts of an aligned pair of index sequences."""
    a = np.asarray(seq_a, dtype=np.int64)
    b = np.asarray(seq_b, dtype=np.int64)
    if a.shape != b.shape:
        raise ValueError("sequences must be aligned")
    out = np.zeros((num_a, num_b), dtype=np.int64)
    np.add.at(out, (a, b), 1)
    return out


def jointly_typical(seq_a, seq_b, joint_probs, delta: float) -> bool:
    """Strong joint typicality of an aligned pair against a joint law."""
    jp = np.asarray(joint_probs, dtype=float)
    cnt = pair_counts(seq_a, seq_b, jp.shape[0], jp.shape[1])
    freq = cnt / len(np.asarray(seq_a))
    if np.any((cnt > 0) & (jp <= 0)):
        return False
    return bool(np.all(np.abs(freq - jp) <= delta + _EPS))


def typical_count_lower_bound(probs, length: int) -> float:
    """Crude floor (type-counting) on the typical-set size, in sequences."""
    h = entropy(probs)
    m = len(np.asarray(probs))
    return 2.0 ** (length * h) / (length + 1) ** m


def seq_tuple(row: np.ndarray) -> tuple:
    return tuple(int(v) for v in row)


def log2_comb(n: int, k: int) -> float:
    return (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)) / math.log(2)
