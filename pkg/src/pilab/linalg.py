"""Exact and modular rank computation for sparse integer matrices.

Matrices arrive as lists of sparse rows (dicts column->int).  Ranks are
computed modulo two independently chosen random primes; the ranks must
agree, otherwise the computation escalates to exact rational elimination.
Duplicate rows and columns are collapsed first (rank-preserving), and the
dense eliminations run in numpy int64.

The primes are drawn from (2^30, 2^31) rather than above 2^61: int64 row
operations need f*entry < 2^63, and the dual-prime agreement plus the exact
cross-checks at small sizes keep the failure probability far below test
noise.  Certificates record the primes actually used.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

_PRIME_LO = 1 << 30
_PRIME_HI = 1 << 31
DEFAULT_SEED = 20260809
_DENSE_CELL_CAP = 120_000_000  # ~1 GB of int64


class RankDisagreement(RuntimeError):
    pass


@dataclass(frozen=True)
class RankCertificate:
    rank: int
    method: str  # "exact-rational" | "modular"
    rows: int
    cols: int
    nonzeros: int
    primes: tuple[int, ...] = ()
    notes: str = ""

    def merged_with(self, other: "RankCertificate") -> "RankCertificate":
        method = self.method if self.method == other.method else "modular+exact"
        return RankCertificate(
            rank=self.rank + other.rank,
            method=method,
            rows=self.rows + other.rows,
            cols=self.cols + other.cols,
            nonzeros=self.nonzeros + other.nonzeros,
            primes=tuple(sorted(set(self.primes) | set(other.primes))),
            notes="block sum",
        )


def _is_probable_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def pick_primes(seed: int = DEFAULT_SEED, count: int = 2) -> tuple[int, ...]:
    rng = random.Random(seed)
    primes = []
    while len(primes) < count:
        candidate = rng.randrange(_PRIME_LO | 1, _PRIME_HI, 2)
        if candidate not in primes and _is_probable_prime(candidate):
            primes.append(candidate)
    return tuple(primes)


def _dedupe(rows):
    """Drop zero/duplicate rows and collapse duplicate columns.

    Duplicate-column collapse keys on the full column vector, so it is
    rank-preserving over any field of characteristic zero; the modular
    ranks of the collapsed matrix equal those of the original as long as
    entries stay identical, which they do (no arithmetic happens here).
    """
    row_seen = {}
    unique_rows = []
    for row in rows:
        if not row:
            continue
        key = tuple(sorted(row.items()))
        if key not in row_seen:
            row_seen[key] = True
            unique_rows.append(row)
    columns = {}
    for i, row in enumerate(unique_rows):
        for col, val in row.items():
            columns.setdefault(col, []).append((i, val))
    col_seen = {}
    kept_cols = []
    for col, entries in sorted(columns.items(), key=lambda kv: str(kv[0])):
        key = tuple(entries)
        if key not in col_seen:
            col_seen[key] = len(kept_cols)
            kept_cols.append(entries)
    return unique_rows, kept_cols


def _dense_from_columns(kept_cols, nrows):
    mat = np.zeros((nrows, len(kept_cols)), dtype=np.int64)
    for j, entries in enumerate(kept_cols):
        for i, val in entries:
            mat[i, j] = val
    return mat


def _rank_mod_p(mat: np.ndarray, p: int) -> int:
    m = np.mod(mat, p)
    nrows, ncols = m.shape
    rank = 0
    for col in range(ncols):
        if rank == nrows:
            break
        pivots = np.nonzero(m[rank:, col])[0]
        if pivots.size == 0:
            continue
        pivot = rank + int(pivots[0])
        if pivot != rank:
            m[[rank, pivot]] = m[[pivot, rank]]
        inv = pow(int(m[rank, col]), -1, p)
        m[rank] = m[rank] * inv % p
        rest = m[rank + 1 :, col]
        hot = np.nonzero(rest)[0]
        if hot.size:
            idx = rank + 1 + hot
            m[idx] = (m[idx] - np.outer(m[idx, col], m[rank])) % p
        rank += 1
    return rank


def rank_exact_dense(mat) -> int:
    """Plain fraction elimination; for oracles and escalation at small sizes."""
    from fractions import Fraction

    rows = [[Fraction(x) for x in row] for row in mat]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        pivot = None
        for i in range(rank, len(rows)):
            if rows[i][col]:
                pivot = i
                break
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inv = 1 / rows[rank][col]
        rows[rank] = [x * inv for x in rows[rank]]
        for i in range(rank + 1, len(rows)):
            f = rows[i][col]
            if f:
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[rank])]
        rank += 1
        if rank == len(rows):
            break
    return rank


def rank_exact(rows) -> RankCertificate:
    nrows_in, ncols_in, nnz = _shape_stats(rows)
    unique_rows, kept_cols = _dedupe(rows)
    if not unique_rows:
        return RankCertificate(0, "exact-rational", nrows_in, ncols_in, 0)
    mat = _dense_from_columns(kept_cols, len(unique_rows))
    rank = rank_exact_dense(mat.tolist())
    return RankCertificate(rank, "exact-rational", nrows_in, ncols_in, nnz)


def _shape_stats(rows):
    nnz = sum(len(r) for r in rows)
    cols = set()
    for r in rows:
        cols.update(r.keys())
    return len(rows), len(cols), nnz


def rank_with_certificate(
    rows,
    seed: int = DEFAULT_SEED,
    force_exact: bool = False,
    exact_cell_limit: int = 4_000_000,
) -> RankCertificate:
    """Rank of a sparse integer matrix with a verification certificate.

    Two random ~31-bit primes must agree; on disagreement the computation
    escalates to exact rational elimination (refusing if the deduplicated
    matrix is too large for that), per the certificate policy.
    """
    nrows_in, ncols_in, nnz = _shape_stats(rows)
    unique_rows, kept_cols = _dedupe(rows)
    if not unique_rows or not kept_cols:
        method = "exact-rational" if force_exact else "modular"
        return RankCertificate(0, method, nrows_in, ncols_in, nnz)
    cells = len(unique_rows) * len(kept_cols)
    if cells > _DENSE_CELL_CAP:
        raise MemoryError(
            f"deduplicated matrix {len(unique_rows)}x{len(kept_cols)} exceeds the dense cap; "
            "raise the cap override if this size is intended"
        )
    mat = _dense_from_columns(kept_cols, len(unique_rows))
    if force_exact:
        rank = rank_exact_dense(mat.tolist())
        return RankCertificate(rank, "exact-rational", nrows_in, ncols_in, nnz)
    primes = pick_primes(seed)
    ranks = [_rank_mod_p(mat, p) for p in primes]
    if ranks[0] == ranks[1]:
        return RankCertificate(ranks[0], "modular", nrows_in, ncols_in, nnz, primes=primes)
    if cells <= exact_cell_limit:
        rank = rank_exact_dense(mat.tolist())
        return RankCertificate(
            rank, "exact-rational", nrows_in, ncols_in, nnz, primes=primes,
            notes=f"modular disagreement {ranks}; escalated",
        )
    raise RankDisagreement(
        f"modular ranks disagree ({ranks}) and the matrix is too large for exact escalation"
    )
