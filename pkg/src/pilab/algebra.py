"""The word algebra A(m,w), its unital extension, and exact evaluation.

Basis: {a, b} together with level sets Z_i = {z(i,1), ..., z(i, k_i)} where
k_i = m + w_i.  The only nonzero products of basis atoms are

    z(i,j) * a = z(i,j+1)   for j < k_i
    z(i,k_i) * b = z(i+1,1)

plus the unit laws when an external unit is adjoined.  Every other product
of atoms is zero, which makes every evaluated monomial either zero or a
single atom with coefficient one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import words as words_mod
from .words import PeriodicWord, WordSpec, generate_prefix


@dataclass(frozen=True, order=True)
class BasisElement:
    kind: str  # "one" | "a" | "b" | "z"
    level: int = 0
    index: int = 0

    def __post_init__(self):
        if self.kind not in ("one", "a", "b", "z"):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.kind == "z" and (self.level < 1 or self.index < 1):
            raise ValueError("z atoms need level >= 1 and index >= 1")

    def name(self) -> str:
        if self.kind == "z":
            return f"z_{self.level}_{self.index}"
        return {"one": "1", "a": "a", "b": "b"}[self.kind]

    def __repr__(self):
        return self.name()


ONE = BasisElement("one")
A = BasisElement("a")
B = BasisElement("b")


def z(level: int, index: int) -> BasisElement:
    return BasisElement("z", level, index)


@dataclass(frozen=True)
class AlgebraSpec:
    m: int
    word: WordSpec
    unital: bool = False

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("m must be >= 2")

    def k(self, level: int) -> int:
        """Level width k_i = m + w_i."""
        return self.m + generate_prefix(self.word, level)[level - 1]

    def check_atom(self, x: BasisElement):
        if x.kind == "one" and not self.unital:
            raise ValueError("unit atom used in a non-unital spec")
        if x.kind == "z" and not (1 <= x.index <= self.k(x.level)):
            raise ValueError(
                f"z index {x.index} out of range 1..{self.k(x.level)} at level {x.level}"
            )

    def describe(self) -> str:
        tag = "unital" if self.unital else "nonunital"
        return f"A(m={self.m},{self.word.describe()},{tag})"


class AlgebraElement:
    """Finite sparse rational combination of basis atoms."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms: dict[BasisElement, Fraction] = {}
        if terms:
            for atom, coeff in dict(terms).items():
                coeff = Fraction(coeff)
                if coeff:
                    self.terms[atom] = coeff

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def atom(cls, x: BasisElement, coeff=1):
        return cls({x: Fraction(coeff)})

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other):
        out = dict(self.terms)
        for atom, coeff in other.terms.items():
            new = out.get(atom, Fraction(0)) + coeff
            if new:
                out[atom] = new
            else:
                out.pop(atom, None)
        result = AlgebraElement()
        result.terms = out
        return result

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        c = Fraction(c)
        if not c:
            return AlgebraElement()
        result = AlgebraElement()
        result.terms = {atom: coeff * c for atom, coeff in self.terms.items()}
        return result

    def single_atom(self):
        """The (atom, coeff) pair if this element has exactly one term."""
        if len(self.terms) != 1:
            raise ValueError(f"not a single-atom element: {self}")
        return next(iter(self.terms.items()))

    def __eq__(self, other):
        if isinstance(other, AlgebraElement):
            return self.terms == other.terms
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for atom in sorted(self.terms):
            coeff = self.terms[atom]
            parts.append(f"{coeff}*{atom.name()}" if coeff != 1 else atom.name())
        return " + ".join(parts)


ZERO = AlgebraElement()


def multiply_basis(x: BasisElement, y: BasisElement, spec: AlgebraSpec) -> AlgebraElement:
    """Product of two basis atoms, exactly per the defining table."""
    spec.check_atom(x)
    spec.check_atom(y)
    if x.kind == "one":
        return AlgebraElement.atom(y)
    if y.kind == "one":
        return AlgebraElement.atom(x)
    if x.kind == "z":
        ki = spec.k(x.level)
        if y.kind == "a" and x.index < ki:
            return AlgebraElement.atom(z(x.level, x.index + 1))
        if y.kind == "b" and x.index == ki:
            return AlgebraElement.atom(z(x.level + 1, 1))
    return AlgebraElement.zero()


def _multiply_elements(x: AlgebraElement, y: AlgebraElement, spec: AlgebraSpec) -> AlgebraElement:
    out = AlgebraElement()
    for ax, cx in x.terms.items():
        for ay, cy in y.terms.items():
            out = out + multiply_basis(ax, ay, spec).scale(cx * cy)
    return out


def left_normed_product(start: BasisElement, letters, spec: AlgebraSpec) -> AlgebraElement:
    """Fold start through a sequence of letters: ((start*l1)*l2)*..."""
    acc = AlgebraElement.atom(start)
    for letter in letters:
        if acc.is_zero():
            return acc
        atom, coeff = acc.single_atom()
        acc = multiply_basis(atom, letter, spec).scale(coeff)
    return acc


def evaluate_monomial(mono, values, spec: AlgebraSpec) -> AlgebraElement:
    """Evaluate a bracketed multilinear monomial on basis atoms.

    ``mono`` carries a permutation and a bracketing tree (see polyspace);
    leaf slot s holds variable x_{perm[s]} which receives values[perm[s]-1].
    The result is zero or a single atom with coefficient one.
    """
    values = list(values)
    if len(values) != mono.arity:
        raise ValueError("value count does not match monomial arity")
    for v in values:
        spec.check_atom(v)

    def walk(node):
        if isinstance(node, int):
            return AlgebraElement.atom(values[mono.perm[node] - 1])
        left = walk(node[0])
        if left.is_zero():
            return left
        right = walk(node[1])
        if right.is_zero():
            return right
        return _multiply_elements(left, right, spec)

    result = walk(mono.tree)
    assert len(result.terms) <= 1, "monomial evaluation produced multiple terms"
    for coeff in result.terms.values():
        assert coeff == 1, "monomial evaluation produced a non-unit coefficient"
    return result


@dataclass
class StructureConstantAlgebra:
    """Finite-dimensional algebra given by a monomial multiplication table."""

    atoms: list[str]
    table: dict  # (name, name) -> name for the nonzero products
    note: str = ""
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {name: i for i, name in enumerate(self.atoms)}

    @property
    def dimension(self) -> int:
        return len(self.atoms)

    def multiply(self, x: str, y: str):
        return self.table.get((x, y))

    def to_json_dict(self) -> dict:
        return {f"{x}*{y}": out for (x, y), out in sorted(self.table.items())}


CYCLIC_QUOTIENT_NOTE = (
    "experimental cyclic quotient: levels are identified mod the period; "
    "identity equivalence with the infinite-level algebra is only checked "
    "empirically up to a finite degree"
)


def cyclic_quotient(spec: AlgebraSpec) -> StructureConstantAlgebra:
    """Wrap the level chain of a periodic-word algebra into a cycle.

    Levels i and i+T are identified (T the period); the top z of level T
    times b wraps to level 1.  Shipped as an experiment: see the note field.
    """
    if not isinstance(spec.word, PeriodicWord):
        raise ValueError("cyclic quotient needs a periodic word")
    T = spec.word.period
    atoms = ["a", "b"]
    table = {}
    for i in range(1, T + 1):
        ki = spec.k(i)
        for j in range(1, ki + 1):
            atoms.append(f"z_{i}_{j}")
        for j in range(1, ki):
            table[(f"z_{i}_{j}", "a")] = f"z_{i}_{j + 1}"
        nxt = i + 1 if i < T else 1
        table[(f"z_{i}_{ki}", "b")] = f"z_{nxt}_1"
    return StructureConstantAlgebra(atoms, table, note=CYCLIC_QUOTIENT_NOTE)
