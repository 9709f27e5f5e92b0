"""Matrix multiplication through the group algebra of a TPP triple.

``A`` (rows S, cols T) becomes ``sum A[s,t] s^-1 t``, ``B`` (rows T, cols U)
becomes ``sum B[t,u] t^-1 u``. In the product, the coefficient of
``s^-1 u`` is exactly ``(AB)[s,u]``; the TPP is what rules out stray terms.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from .errors import NotATppTriple
from .groups import GroupTable
from .tpp import TppTriple, is_tpp_quotient

Matrix = list[list[int]]


@dataclass(frozen=True)
class IndexedMatrix:
    """Integer matrix whose rows and columns are labelled by group elements."""

    rows: tuple[int, ...]
    cols: tuple[int, ...]
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if len(self.entries) != len(self.rows) or any(len(r) != len(self.cols) for r in self.entries):
            raise ValueError(f"matrix shape does not match {len(self.rows)}x{len(self.cols)} labels")
        for r in self.entries:
            for v in r:
                if not isinstance(v, int) or isinstance(v, bool):
                    raise ValueError(f"matrix entries must be integers, got {v!r}")

    @classmethod
    def build(cls, rows: Sequence[int], cols: Sequence[int], entries: Sequence[Sequence[int]]) -> IndexedMatrix:
        return cls(tuple(rows), tuple(cols), tuple(tuple(r) for r in entries))

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), len(self.cols))

    def to_lists(self) -> Matrix:
        return [list(r) for r in self.entries]


def convolve(g: GroupTable, a: Sequence[int], b: Sequence[int]) -> list[int]:
    """Product of two group-algebra vectors indexed by element: ``c[xy] += a[x] b[y]``."""
    n = g.order
    if len(a) != n or len(b) != n:
        raise ValueError("group-algebra vectors must have one coefficient per element")
    out = [0] * n
    mul = g.mul
    for x, ax in enumerate(a):
        if ax:
            row = mul[x]
            for y, by in enumerate(b):
                if by:
                    out[row[y]] += ax * by
    return out


def naive_multiply(a: Sequence[Sequence[int]], b: Sequence[Sequence[int]]) -> Matrix:
    inner = len(b)
    if any(len(r) != inner for r in a):
        raise ValueError("inner dimensions differ")
    cols = len(b[0]) if inner else 0
    return [[sum(r[k] * b[k][j] for k in range(inner)) for j in range(cols)] for r in a]


def group_algebra_multiply(g: GroupTable, tr: TppTriple, a: IndexedMatrix | Matrix, b: IndexedMatrix | Matrix) -> IndexedMatrix:
    """``A B`` computed in ``Z[G]``; refuses triples without the TPP."""
    if not is_tpp_quotient(g, tr):
        raise NotATppTriple(f"{tr} does not satisfy the TPP; product recovery is not guaranteed")
    return embed_and_multiply(g, tr, a, b)


def embed_and_multiply(g: GroupTable, tr: TppTriple, a: IndexedMatrix | Matrix, b: IndexedMatrix | Matrix) -> IndexedMatrix:
    """The embedding without the TPP guard: for other triples the read-out
    picks up cross terms."""
    S, T, U = (x.indices() for x in tr.slots)
    if not isinstance(a, IndexedMatrix):
        a = IndexedMatrix.build(S, T, a)
    if not isinstance(b, IndexedMatrix):
        b = IndexedMatrix.build(T, U, b)
    if a.rows != S or a.cols != T or b.rows != T or b.cols != U:
        raise ValueError(f"matrices must be {len(S)}x{len(T)} and {len(T)}x{len(U)} on the triple's elements")
    mul, inv = g.mul, g.inv
    va = [0] * g.order
    vb = [0] * g.order
    for i, s in enumerate(S):
        for j, t in enumerate(T):
            va[mul[inv[s]][t]] += a.entries[i][j]
    for i, t in enumerate(T):
        for j, u in enumerate(U):
            vb[mul[inv[t]][u]] += b.entries[i][j]
    c = convolve(g, va, vb)
    out = [[c[mul[inv[s]][u]] for u in U] for s in S]
    return IndexedMatrix.build(S, U, out)


@dataclass(frozen=True)
class TrialReport:
    trials: int
    mismatches: int

    @property
    def ok(self) -> bool:
        return self.mismatches == 0


def random_matrix(rng: random.Random, rows: int, cols: int, low: int = -9, high: int = 9) -> Matrix:
    return [[rng.randint(low, high) for _ in range(cols)] for _ in range(rows)]


def validate_triple(g: GroupTable, tr: TppTriple, trials: int = 100, seed: int = 0) -> TrialReport:
    """Compare against the naive product on random matrices with entries in [-9, 9]."""
    rng = random.Random(seed)
    a_dim, b_dim, c_dim = tr.type
    mismatches = 0
    for _ in range(trials):
        a = random_matrix(rng, a_dim, b_dim)
        b = random_matrix(rng, b_dim, c_dim)
        if group_algebra_multiply(g, tr, a, b).to_lists() != naive_multiply(a, b):
            mismatches += 1
    return TrialReport(trials, mismatches)
