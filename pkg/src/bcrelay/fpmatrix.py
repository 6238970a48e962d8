"""Exact linear algebra over prime fields F_p.

All matrices are dense integer arrays with entries reduced mod p.  The
modulus is restricted to primes below 2**16 so that products of two
entries fit comfortably in int64 before reduction; no big-integer
arithmetic is ever needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_PRIME = 1 << 16


class NoSolution(Exception):
    """Raised by :func:`solve` when the linear system is inconsistent."""


def is_prime(n: int) -> bool:
    """Trial-division primality test; adequate for moduli below 2**16."""
    if n <= 1:
        return False
    for d in range(2, int(math.isqrt(n)) + 1):
        if n % d == 0:
            return False
    return True


@dataclass(frozen=True)
class FpMatrix:
    """A rows x cols matrix over F_p.

    ``entries`` is a read-only int64 array with every entry in [0, p).
    Instances are immutable and safe to share.
    """

    p: int
    entries: np.ndarray

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"modulus p={self.p} is not prime")
        if self.p >= MAX_PRIME:
            raise ValueError(f"modulus p={self.p} exceeds limit {MAX_PRIME}")
        arr = np.asarray(self.entries, dtype=np.int64)
        if arr.ndim != 2:
            raise ValueError("entries must be a 2-d array")
        arr = np.mod(arr, self.p)
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    def transpose(self) -> "FpMatrix":
        return FpMatrix(self.p, self.entries.T)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FpMatrix)
            and self.p == other.p
            and self.entries.shape == other.entries.shape
            and bool(np.array_equal(self.entries, other.entries))
        )

    def __hash__(self):
        return hash((self.p, self.entries.shape, self.entries.tobytes()))


def zeros(p: int, rows: int, cols: int) -> FpMatrix:
    return FpMatrix(p, np.zeros((rows, cols), dtype=np.int64))


def identity(p: int, n: int) -> FpMatrix:
    return FpMatrix(p, np.eye(n, dtype=np.int64))


def shift_matrix(p: int, q: int, n: int) -> FpMatrix:
    """The q x q shift gain with ``n`` ones on the lower shifted diagonal.

    Entry (q-n+i, i) is 1 for i < n, everything else 0; its rank is
    exactly ``n``.  ``n`` may range from 0 (zero matrix) to q (identity).
    """
    if not 0 <= n <= q:
        raise ValueError(f"shift count {n} outside [0, {q}]")
    m = np.zeros((q, q), dtype=np.int64)
    for i in range(n):
        m[q - n + i, i] = 1
    return FpMatrix(p, m)


def matmul(a: FpMatrix, b: FpMatrix) -> FpMatrix:
    if a.p != b.p:
        raise ValueError("mismatched moduli")
    if a.cols != b.rows:
        raise ValueError(f"dimension mismatch {a.cols} vs {b.rows}")
    return FpMatrix(a.p, (a.entries @ b.entries) % a.p)


def add(a: FpMatrix, b: FpMatrix) -> FpMatrix:
    if a.p != b.p or a.entries.shape != b.entries.shape:
        raise ValueError("shape or modulus mismatch")
    return FpMatrix(a.p, (a.entries + b.entries) % a.p)


def vstack(mats: list[FpMatrix]) -> FpMatrix:
    p = mats[0].p
    if any(m.p != p for m in mats):
        raise ValueError("mismatched moduli")
    return FpMatrix(p, np.vstack([m.entries for m in mats]))


def hstack(mats: list[FpMatrix]) -> FpMatrix:
    p = mats[0].p
    if any(m.p != p for m in mats):
        raise ValueError("mismatched moduli")
    return FpMatrix(p, np.hstack([m.entries for m in mats]))


def _row_reduce(mat: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """In-place Gauss-Jordan elimination mod p; returns (rref, pivot columns)."""
    m = mat.copy()
    rows, cols = m.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        nz = np.flatnonzero(m[r:, c])
        if nz.size == 0:
            continue
        piv = nz[0] + r
        if piv != r:
            m[[r, piv]] = m[[piv, r]]
        inv = pow(int(m[r, c]), -1, p)
        m[r] = (m[r] * inv) % p
        hit = np.flatnonzero(m[:, c])
        for i in hit:
            if i != r:
                m[i] = (m[i] - m[i, c] * m[r]) % p
        pivots.append(c)
        r += 1
    return m, pivots


def rref(m: FpMatrix) -> FpMatrix:
    """Reduced row-echelon form over F_p."""
    red, _ = _row_reduce(np.asarray(m.entries), m.p)
    return FpMatrix(m.p, red)


def rank(m: FpMatrix) -> int:
    """Rank over F_p, by Gauss-Jordan elimination with modular inverses."""
    if m.rows == 0 or m.cols == 0:
        return 0
    _, pivots = _row_reduce(np.asarray(m.entries), m.p)
    return len(pivots)


def solve(m: FpMatrix, y) -> np.ndarray:
    """Solve m @ x = y over F_p, returning one solution.

    For underdetermined systems the free variables are set to zero, so
    the answer is the first solution in elimination order.  Raises
    :class:`NoSolution` if the system is inconsistent.
    """
    yv = np.mod(np.asarray(y, dtype=np.int64).reshape(-1), m.p)
    if yv.shape[0] != m.rows:
        raise ValueError(f"rhs length {yv.shape[0]} != rows {m.rows}")
    aug = np.hstack([m.entries, yv[:, None]])
    red, pivots = _row_reduce(aug, m.p)
    if m.cols in pivots:
        raise NoSolution("inconsistent system")
    x = np.zeros(m.cols, dtype=np.int64)
    for r, c in enumerate(pivots):
        x[c] = red[r, m.cols]
    return x


def random_matrix(p: int, rows: int, cols: int, rng: np.random.Generator) -> FpMatrix:
    """Matrix with i.i.d. uniform entries over F_p."""
    return FpMatrix(p, rng.integers(0, p, size=(rows, cols), dtype=np.int64))


def random_permutation(p: int, q: int, rng: np.random.Generator) -> FpMatrix:
    """Uniform q x q permutation matrix (exactly one 1 per row and column)."""
    perm = rng.permutation(q)
    m = np.zeros((q, q), dtype=np.int64)
    m[np.arange(q), perm] = 1
    return FpMatrix(p, m)
