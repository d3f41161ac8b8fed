"""Multilinear and multihomogeneous evaluation spaces and their ranks.

The n-th codimension is the rank of the evaluation pairing between
multilinear monomials (permutation + bracketing tree) and substitution
columns drawn from a certified-complete set of basis-atom tuples.  Key
facts the engine relies on (each re-verified against brute force in the
test suite at small degree):

* a product of basis atoms with no unit is nonzero only when the bracketing
  is a left comb whose leftmost factor is a z-atom and whose subsequent
  factors spell the unique admissible letter word from that atom;
* substitutions containing two or more z-atoms vanish on every monomial;
* with a unit adjoined, unit-valued leaves contract away, so a monomial is
  nonzero exactly when the non-unit leaves induce a left comb as above.

Substitution completeness is certified through the word-factor certificate:
the behaviour of z(i,j) under degree-n monomials depends only on j and the
factor w_i..w_{i+n}, so one column per certified (factor, j) class suffices.

For unital specs the column space is compressed: sending a set S of
variables to the unit turns a degree-n monomial into a degree-(n-|S|)
monomial, so every column factors through the column space of the smaller
non-unital problem; per S it is enough to keep one column per pivot of that
smaller space.  This is rank-preserving because column dependencies are
linear in the row argument.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np

from . import linalg
from .algebra import AlgebraSpec, BasisElement, ONE, A, B, z
from .linalg import RankCertificate
from .words import generate_prefix, complexity

DEFAULT_CAP_ALL = 8
DEFAULT_CAP_LEFTNORMED = 9
DEFAULT_CODIM_CAP_UNITAL = 7
DEFAULT_CODIM_CAP_NONUNITAL = 9


# ---------------------------------------------------------------------------
# bracketing trees and monomials

@lru_cache(maxsize=None)
def all_trees(n: int):
    """All binary bracketings over leaf slots 0..n-1, as nested tuples."""

    def build(lo: int, hi: int):
        if hi - lo == 1:
            return [lo]
        out = []
        for mid in range(lo + 1, hi):
            for left in build(lo, mid):
                for right in build(mid, hi):
                    out.append((left, right))
        return out

    return tuple(build(0, n))


def left_comb(n: int):
    node = 0
    for s in range(1, n):
        node = (node, s)
    return node


def catalan(n: int) -> int:
    return factorial(2 * n) // (factorial(n) * factorial(n + 1))


@dataclass(frozen=True)
class Monomial:
    """A multilinear monomial: leaf slot s holds variable x_{perm[s]}."""

    perm: tuple[int, ...]
    tree: object

    @property
    def arity(self) -> int:
        return len(self.perm)


def enumerate_multilinear(n: int, mode: str = "All", cap_override: int | None = None):
    """All multilinear monomials of degree n (or just the left-normed ones)."""
    if n < 1:
        raise ValueError("degree must be >= 1")
    if mode not in ("All", "LeftNormed"):
        raise ValueError("mode must be 'All' or 'LeftNormed'")
    cap = cap_override or (DEFAULT_CAP_ALL if mode == "All" else DEFAULT_CAP_LEFTNORMED)
    if n > cap:
        raise ValueError(f"degree {n} exceeds the {mode} enumeration cap {cap}")
    perms = itertools.permutations(range(1, n + 1))
    if mode == "LeftNormed":
        comb = left_comb(n)
        return [Monomial(p, comb) for p in perms]
    trees = all_trees(n)
    return [Monomial(p, t) for p in perms for t in trees]


@lru_cache(maxsize=None)
def comb_subsets(tree_key) -> dict:
    """Map leaf-slot bitmask -> comb-ordered slot tuple, for comb-inducing subsets.

    A subset of leaves induces a left comb when, after contracting away the
    other leaves, every right child is a leaf.  The returned order is the
    fold order (leftmost leaf first).
    """
    tree, n = tree_key

    def leaves(node):
        if isinstance(node, int):
            return (node,)
        return leaves(node[0]) + leaves(node[1])

    def induced(node, mask):
        # returns contracted subtree or None if empty
        if isinstance(node, int):
            return node if (mask >> node) & 1 else None
        left = induced(node[0], mask)
        right = induced(node[1], mask)
        if left is None:
            return right
        if right is None:
            return left
        return (left, right)

    def comb_order(node):
        # fold order if node is a left comb, else None
        rights = []
        while not isinstance(node, int):
            if not isinstance(node[1], int):
                return None
            rights.append(node[1])
            node = node[0]
        return (node, *reversed(rights))

    out = {}
    for mask in range(1 << n):
        sub = induced(tree, mask)
        if sub is None:
            out[mask] = ()
            continue
        order = comb_order(sub)
        if order is not None:
            out[mask] = order
    return out


# ---------------------------------------------------------------------------
# certified substitution classes

@dataclass(frozen=True)
class ZClass:
    """Equivalence class of starting z-atoms for degree-n evaluation.

    Behaviour of z(i, j) under any degree-n monomial depends only on j and
    on the letters w_i..w_{i+n}; ``level`` is the first level at which this
    factor occurs, so z(level, index) is a concrete representative.
    """

    class_id: int
    factor: tuple[int, ...]
    level: int
    index: int
    letters: str  # unique admissible continuation, length n-1
    steps: tuple[tuple[int, int], ...]  # (level offset, index) after each step

    def atom(self) -> BasisElement:
        return z(self.level, self.index)

    def output(self, consumed: int) -> str:
        off, idx = self.steps[consumed - 1] if consumed else (0, self.index)
        return f"zc{self.class_id}+{off}.{idx}"


class UncertifiedFactorsError(RuntimeError):
    pass


def certified_zclasses(n: int, spec: AlgebraSpec) -> list[ZClass]:
    """One class per certified length-(n+1) factor and legal start index."""
    count, factor_set = complexity(spec.word, n + 1)
    if not factor_set.certified:
        raise UncertifiedFactorsError(
            f"factor set of length {n + 1} could not be certified for {spec.word.describe()}"
        )
    # ground each factor at its first occurrence so classes have concrete levels
    budget = 4 * (n + 3)
    occurrence = {}
    while len(occurrence) < len(factor_set.factors):
        prefix = generate_prefix(spec.word, budget)
        occurrence = {}
        for i in range(len(prefix) - n):
            window = tuple(prefix[i : i + n + 1])
            occurrence.setdefault(window, i + 1)
        if len(occurrence) >= len(factor_set.factors):
            break
        budget *= 2
        if budget > 1 << 24:
            raise UncertifiedFactorsError("could not locate all certified factors in a prefix")
    classes = []
    for factor in sorted(factor_set.factors):
        k0 = spec.m + factor[0]
        for index in range(1, k0 + 1):
            letters, steps = _walk(factor, index, spec.m, n - 1)
            classes.append(
                ZClass(len(classes), factor, occurrence[factor], index, letters, steps)
            )
    return classes


def _walk(factor, index: int, m: int, nsteps: int):
    """The unique admissible letter word of nsteps letters from (factor, index)."""
    off, idx = 0, index
    letters = []
    steps = []
    for _ in range(nsteps):
        k = m + factor[off]
        if idx < k:
            letters.append("a")
            idx += 1
        else:
            letters.append("b")
            off += 1
            idx = 1
        steps.append((off, idx))
    return "".join(letters), tuple(steps)


@dataclass(frozen=True)
class SubstitutionColumn:
    values: tuple[BasisElement, ...]
    window: tuple[int, ...] | None  # factor grounding the z-atom, if any

    def __len__(self):
        return len(self.values)


def certified_substitutions(n: int, spec: AlgebraSpec) -> list[SubstitutionColumn]:
    """Every substitution class that can distinguish degree-n identities.

    Letter atoms over {a,b} (plus the unit when unital) with at most one
    z-atom; z-atoms enumerate the certified (factor, index) classes.  Tuples
    with two or more z-atoms provably evaluate to zero on every monomial
    and are pruned.
    """
    letters = (ONE, A, B) if spec.unital else (A, B)
    classes = certified_zclasses(n, spec)
    columns = [
        SubstitutionColumn(vals, None) for vals in itertools.product(letters, repeat=n)
    ]
    for pos in range(n):
        for cls in classes:
            for rest in itertools.product(letters, repeat=n - 1):
                values = rest[:pos] + (cls.atom(),) + rest[pos:]
                columns.append(SubstitutionColumn(values, cls.factor))
    return columns


# ---------------------------------------------------------------------------
# matrix builders

def _spec_key(spec: AlgebraSpec):
    return (spec.m, spec.word, spec.unital)


@lru_cache(maxsize=None)
def _leftnormed_matrix(n: int, m: int, word):
    """Full left-normed evaluation matrix at degree n over a non-unital spec.

    Returns (perms, col_keys, matrix) where matrix[perm_idx, col_idx] = 1
    iff the left-normed monomial for that permutation evaluates nonzero at
    the column.  Column key: (z variable, class id, letter-by-variable map).
    """
    spec = AlgebraSpec(m, word, unital=False)
    classes = certified_zclasses(n, spec)
    perms = list(itertools.permutations(range(1, n + 1)))
    col_index: dict = {}
    entries = []
    for row, perm in enumerate(perms):
        lead = perm[0]
        tail = perm[1:]
        order = sorted(tail)
        rank_of = {v: i for i, v in enumerate(order)}
        for cls in classes:
            letters = [""] * (n - 1)
            for t, var in enumerate(tail):
                letters[rank_of[var]] = cls.letters[t]
            key = (lead, cls.class_id, tuple(letters))
            col = col_index.setdefault(key, len(col_index))
            entries.append((row, col))
    mat = np.zeros((len(perms), len(col_index)), dtype=np.uint8)
    for row, col in entries:
        mat[row, col] = 1
    col_keys = [None] * len(col_index)
    for key, idx in col_index.items():
        col_keys[idx] = key
    return perms, col_keys, mat


@lru_cache(maxsize=None)
def _leftnormed_block(n: int, m: int, word):
    """Block of the left-normed matrix for a fixed leading variable.

    The full matrix is block-diagonal over the leading variable, and the
    blocks are identical up to relabelling the tail variables (the build
    below never references variable identities except through their sorted
    order), so the global rank is n times this block's rank.
    """
    spec = AlgebraSpec(m, word, unital=False)
    classes = certified_zclasses(n, spec)
    tail_vars = list(range(2, n + 1))
    col_index: dict = {}
    rows = []
    for tail in itertools.permutations(tail_vars):
        rank_of = {v: i for i, v in enumerate(sorted(tail))}
        cols = []
        for cls in classes:
            letters = [""] * (n - 1)
            for t, var in enumerate(tail):
                letters[rank_of[var]] = cls.letters[t]
            key = (cls.class_id, tuple(letters))
            cols.append(col_index.setdefault(key, len(col_index)))
        rows.append(cols)
    mat = np.zeros((len(rows), len(col_index)), dtype=np.uint8)
    for i, cols in enumerate(rows):
        for c in cols:
            mat[i, c] = 1
    return mat


def _rank_dense(mat: np.ndarray, seed: int, force_exact: bool = False) -> RankCertificate:
    rows_in, cols_in = mat.shape
    nnz = int(np.count_nonzero(mat))
    if nnz == 0:
        return RankCertificate(0, "exact-rational" if force_exact else "modular", rows_in, cols_in, 0)
    uniq = np.unique(mat, axis=0)
    uniq = np.unique(uniq.T, axis=0).T
    uniq = uniq[np.any(uniq, axis=1)][:, np.any(uniq, axis=0)]
    work = uniq.astype(np.int64)
    if force_exact:
        rank = linalg.rank_exact_dense(work.tolist())
        return RankCertificate(rank, "exact-rational", rows_in, cols_in, nnz)
    primes = linalg.pick_primes(seed)
    ranks = [linalg._rank_mod_p(work.copy(), p) for p in primes]
    if ranks[0] != ranks[1]:
        if work.size <= 4_000_000:
            rank = linalg.rank_exact_dense(work.tolist())
            return RankCertificate(
                rank, "exact-rational", rows_in, cols_in, nnz, primes=primes,
                notes=f"modular disagreement {ranks}; escalated",
            )
        raise linalg.RankDisagreement(f"modular ranks disagree: {ranks}")
    return RankCertificate(ranks[0], "modular", rows_in, cols_in, nnz, primes=primes)


# ---------------------------------------------------------------------------
# unital engine: reduced columns through the non-unital subproblems

@lru_cache(maxsize=None)
def _pivot_data(k: int, m: int, word, seed: int):
    """Pivot columns of the degree-k non-unital column space.

    Returns a dict perm -> tuple of 0/1 entries over the pivot columns.
    Monomials with other bracketings vanish on every non-unital column, so
    the left-normed matrix carries the whole column space.
    """
    if k == 0:
        return {(): (1,)}
    perms, _, mat = _leftnormed_matrix(k, m, word, seed)
    pivots = _pivot_columns(mat, linalg.pick_primes(seed))
    return {perm: tuple(int(x) for x in mat[i, pivots]) for i, perm in enumerate(perms)}


def _pivot_columns(mat: np.ndarray, primes) -> list[int]:
    """Column indices forming a basis of the column space (dual-prime checked)."""
    picks = []
    for p in primes:
        work = mat.astype(np.int64) % p
        nrows, ncols = work.shape
        rank = 0
        cols = []
        for col in range(ncols):
            if rank == nrows:
                break
            hot = np.nonzero(work[rank:, col])[0]
            if hot.size == 0:
                continue
            pivot = rank + int(hot[0])
            if pivot != rank:
                work[[rank, pivot]] = work[[pivot, rank]]
            inv = pow(int(work[rank, col]), -1, p)
            work[rank] = work[rank] * inv % p
            rest = np.nonzero(work[rank + 1 :, col])[0]
            if rest.size:
                idx = rank + 1 + rest
                work[idx] = (work[idx] - np.outer(work[idx, col], work[rank])) % p
            cols.append(col)
            rank += 1
        picks.append(cols)
    if picks[0] != picks[1]:
        raise linalg.RankDisagreement("pivot sets disagree between primes")
    return picks[0]


@lru_cache(maxsize=None)
def _unital_matrix(n: int, m: int, word, seed: int):
    """Row matrix for the unital problem over reduced columns.

    Rows are (tree, permutation) monomials; columns are (unit-set S, pivot)
    pairs; the entry is the degree-(n-|S|) left-normed matrix entry of the
    contracted monomial at that pivot column.
    """
    pivot = {k: _pivot_data(k, m, word, seed) for k in range(n + 1)}
    col_base: dict = {}
    ncols = 0
    full_mask = (1 << n) - 1

    trees = all_trees(n)
    perms = list(itertools.permutations(range(1, n + 1)))
    tree_masks = [comb_subsets((t, n)) for t in trees]

    row_meta = []  # (tree_idx, perm)
    blocks = []  # per row: list of (col_start, entries)
    for tree_idx, masks in enumerate(tree_masks):
        for perm in perms:
            row = []
            for mask, slots in masks.items():
                vars_ordered = tuple(perm[s] for s in slots)
                k = len(vars_ordered)
                order = sorted(vars_ordered)
                tau = tuple(order.index(v) + 1 for v in vars_ordered)
                var_mask = 0
                for v in vars_ordered:
                    var_mask |= 1 << (v - 1)
                s_key = full_mask ^ var_mask
                base = col_base.get((s_key, k))
                if base is None:
                    width = len(next(iter(pivot[k].values())))
                    base = ncols
                    col_base[(s_key, k)] = base
                    ncols += width
                row.append((base, pivot[k][tau]))
            row_meta.append((tree_idx, perm))
            blocks.append(row)
    mat = np.zeros((len(blocks), ncols), dtype=np.uint8)
    for i, row in enumerate(blocks):
        for base, entries in row:
            for j, val in enumerate(entries):
                if val:
                    mat[i, base + j] = 1
    return row_meta, mat


# ---------------------------------------------------------------------------
# public operations

def _check_codim_cap(n: int, spec: AlgebraSpec, cap_override: int | None):
    cap = cap_override or (
        DEFAULT_CODIM_CAP_UNITAL if spec.unital else DEFAULT_CODIM_CAP_NONUNITAL
    )
    if n > cap:
        raise ValueError(f"degree {n} exceeds the codimension cap {cap} for {spec.describe()}")
    default = DEFAULT_CODIM_CAP_UNITAL if spec.unital else DEFAULT_CODIM_CAP_NONUNITAL
    if n > default:
        est = _memory_estimate(n, spec)
        print(f"[pilab] cap override active: degree {n}, estimated matrix memory {est:.1f} MB")


def _memory_estimate(n: int, spec: AlgebraSpec) -> float:
    if spec.unital:
        rows = factorial(n) * catalan(n - 1)
        cols = sum(
            _comb(n, k) for k in range(n + 1)
        )  # coarse: one pivot block per unit-set size
        return rows * cols * 1e-6
    rows = factorial(n - 1)
    cols = 4 * (spec.m + 1) * (n + 1) * n
    return rows * cols * 1e-6


def _comb(n, k):
    return factorial(n) // (factorial(k) * factorial(n - k))


def codimension(
    n: int,
    spec: AlgebraSpec,
    seed: int = linalg.DEFAULT_SEED,
    cap_override: int | None = None,
    force_exact: bool = False,
):
    """The n-th codimension of the spec'd algebra with a rank certificate."""
    _check_codim_cap(n, spec, cap_override)
    if spec.unital:
        _, mat = _unital_matrix(n, spec.m, spec.word, seed)
        cert = _rank_dense(mat, seed, force_exact=force_exact)
        return cert.rank, cert
    if n <= 6 or force_exact:
        _, _, mat = _leftnormed_matrix(n, spec.m, spec.word, seed)
        cert = _rank_dense(mat, seed, force_exact=force_exact)
        return cert.rank, cert
    block = _leftnormed_block(n, spec.m, spec.word)
    cert = _rank_dense(block, seed)
    total = RankCertificate(
        rank=cert.rank * n,
        method=cert.method,
        rows=cert.rows * n,
        cols=cert.cols * n,
        nonzeros=cert.nonzeros * n,
        primes=cert.primes,
        notes=f"{n} identical leading-variable blocks",
    )
    return total.rank, total


def _blocks_of(mu):
    """Variable block labels 1..d for a composition, dropping zero parts."""
    mu = tuple(int(p) for p in mu if p)
    if any(p < 0 for p in mu):
        raise ValueError("composition parts must be non-negative")
    labels = []
    for b, part in enumerate(mu, start=1):
        labels.extend([b] * part)
    return mu, labels


def homogeneous_dim(
    mu,
    spec: AlgebraSpec,
    seed: int = linalg.DEFAULT_SEED,
    cap_override: int | None = None,
    force_exact: bool = False,
):
    """Dimension of the degree-mu multihomogeneous space modulo identities.

    Computed as the rank of the block-symmetrized multilinear rows (orbit
    sums under permuting variables within blocks) over the same certified
    columns.
    """
    mu, labels = _blocks_of(mu)
    n = len(labels)
    if n < 1:
        raise ValueError("composition must have positive size")
    _check_codim_cap(n, spec, cap_override)
    if spec.unital:
        return _homogeneous_unital(mu, labels, spec, seed, force_exact)
    return _homogeneous_nonunital(mu, labels, spec, seed, force_exact)


def _homogeneous_nonunital(mu, labels, spec, seed, force_exact):
    """Grouped left-normed rows, built combinatorially.

    For a block word u and z-class g the orbit-sum entry is the number of
    tail bijections compatible with both the block word and g's forced
    letters, i.e. a product of factorials; it lands in the single column
    whose per-block letter counts match.
    """
    n = len(labels)
    d = len(mu)
    classes = certified_zclasses(n, spec)
    block_vars: dict[int, list[int]] = {}
    for var, b in enumerate(labels, start=1):
        block_vars.setdefault(b, []).append(var)

    total = None
    for lead_block in range(1, d + 1):
        remaining = list(mu)
        remaining[lead_block - 1] -= 1
        if remaining[lead_block - 1] < 0:
            continue
        rows = {}
        col_index: dict = {}
        for tail_word in _words_with_content(remaining):
            u = (lead_block,) + tail_word
            row = rows.setdefault(u, {})
            for cls in classes:
                counts = {}
                for t, blk in enumerate(tail_word):
                    key = (blk, cls.letters[t])
                    counts[key] = counts.get(key, 0) + 1
                weight = 1
                for c in counts.values():
                    weight *= factorial(c)
                col_key = (cls.class_id, tuple(sorted(counts.items())))
                col = col_index.setdefault(col_key, len(col_index))
                row[col] = row.get(col, 0) + weight
        sparse = [row for row in rows.values() if row]
        if not sparse:
            continue
        cert = linalg.rank_with_certificate(sparse, seed=seed, force_exact=force_exact)
        total = cert if total is None else total.merged_with(cert)
    if total is None:
        total = RankCertificate(0, "modular", 0, 0, 0)
    return total.rank, total


def _words_with_content(content):
    """All words whose letter i appears content[i] times (blocks 1-based)."""
    letters = []
    for b, cnt in enumerate(content, start=1):
        letters.extend([b] * cnt)
    seen = set()
    for p in itertools.permutations(letters):
        if p not in seen:
            seen.add(p)
            yield p


def _homogeneous_unital(mu, labels, spec, seed, force_exact):
    n = len(labels)
    row_meta, mat = _unital_matrix(n, spec.m, spec.word, seed)
    label_of = {v: b for v, b in zip(range(1, n + 1), labels)}
    groups: dict = {}
    group_ids = np.zeros(len(row_meta), dtype=np.int64)
    for i, (tree_idx, perm) in enumerate(row_meta):
        beta = (tree_idx,) + tuple(label_of[v] for v in perm)
        group_ids[i] = groups.setdefault(beta, len(groups))
    summed = np.zeros((len(groups), mat.shape[1]), dtype=np.int64)
    np.add.at(summed, group_ids, mat.astype(np.int64))
    cert = _rank_dense(summed, seed, force_exact=force_exact)
    return cert.rank, cert


def w_nd_dim(n: int, d: int, spec: AlgebraSpec, seed: int = linalg.DEFAULT_SEED):
    """dim of the degree-n space on d variables modulo identities.

    Sum of homogeneous dimensions over all multidegrees; by symmetry only
    one composition per partition is computed.  Also returns the certified
    complexity-based bound d(m+1)n*Comp_w(n) for reporting.
    """
    from .reptheory import partitions_with_max_parts

    total = 0
    per_mu = {}
    for mu in partitions_with_max_parts(n, d):
        dim, _ = homogeneous_dim(mu, spec, seed=seed)
        arrangements = _arrangements(mu, d)
        per_mu[mu] = dim
        total += dim * arrangements
    comp, _ = complexity(spec.word, n)
    bound = d * (spec.m + 1) * n * comp
    return total, bound, per_mu


def _arrangements(mu, d: int) -> int:
    """Distinct d-vectors (with zeros) sorting to the partition mu."""
    padded = list(mu) + [0] * (d - len(mu))
    counts = {}
    for part in padded:
        counts[part] = counts.get(part, 0) + 1
    total = factorial(d)
    for c in counts.values():
        total //= factorial(c)
    return total


def export_matrix_coordinate(n: int, spec: AlgebraSpec, path, seed: int = linalg.DEFAULT_SEED):
    """Write the multilinear evaluation matrix as 'row col 1' lines."""
    if spec.unital:
        _, mat = _unital_matrix(n, spec.m, spec.word, seed)
    else:
        _, _, mat = _leftnormed_matrix(n, spec.m, spec.word, seed)
    with open(path, "w") as fh:
        fh.write(f"# {spec.describe()} degree {n}: {mat.shape[0]} x {mat.shape[1]}\n")
        for i, j in zip(*np.nonzero(mat)):
            fh.write(f"{i} {j} 1\n")
