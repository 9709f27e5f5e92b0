"""Triple product property predicates, invariance transforms and the
elementary size bounds."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import permutations
from typing import Sequence

from .elements import ElementSet, iter_bits
from .errors import EmptySet, NotASubgroup, NotATppTriple
from .groups import GroupTable, SubgroupRecord, is_closed_mask


@dataclass(frozen=True)
class TppTriple:
    """Three non-empty element sets of one group, in slot order (S, T, U).

    Construction does not check the TPP itself; use :func:`is_tpp_quotient`.
    """

    s: ElementSet
    t: ElementSet
    u: ElementSet

    def __post_init__(self) -> None:
        if not self.s.capacity == self.t.capacity == self.u.capacity:
            raise ValueError("triple sets belong to groups of different orders")
        for name, x in zip("STU", self.slots):
            if x.is_empty():
                raise EmptySet(f"slot {name} of a triple must be non-empty")

    @classmethod
    def from_indices(cls, g: GroupTable, s: Sequence[int], t: Sequence[int], u: Sequence[int]) -> TppTriple:
        return cls(g.element_set(s), g.element_set(t), g.element_set(u))

    @property
    def slots(self) -> tuple[ElementSet, ElementSet, ElementSet]:
        return (self.s, self.t, self.u)

    @property
    def type(self) -> tuple[int, int, int]:
        return (len(self.s), len(self.t), len(self.u))

    @property
    def size(self) -> int:
        a, b, c = self.type
        return a * b * c

    @property
    def basic(self) -> bool:
        return self.s.bits & self.t.bits & self.u.bits == 1

    def to_json_dict(self, group: str | None = None) -> dict:
        payload: dict = {}
        if group is not None:
            payload["group"] = group
        payload.update(S=list(self.s.indices()), T=list(self.t.indices()), U=list(self.u.indices()))
        return payload

    def __str__(self) -> str:
        return f"(S={self.s}, T={self.t}, U={self.u})"


def triple_from_json_dict(g: GroupTable, payload: dict) -> TppTriple:
    try:
        slots = [payload[k] for k in ("S", "T", "U")]
    except KeyError as exc:
        raise ValueError(f"triple file is missing slot {exc.args[0]}") from None
    for name, idx in zip("STU", slots):
        if not isinstance(idx, list) or not all(isinstance(i, int) for i in idx):
            raise ValueError(f"slot {name} must be a list of element indices")
    return TppTriple.from_indices(g, *slots)


def load_triple(g: GroupTable, path) -> TppTriple:
    with open(path, encoding="utf-8") as fh:
        return triple_from_json_dict(g, json.load(fh))


# ---------------------------------------------------------------------------
# Quotient sets and the two TPP tests


def quotient_mask(g: GroupTable, x: int, y: int | None = None) -> int:
    """Bitmask of ``X Y^-1``."""
    div = g.div
    ys = list(iter_bits(x if y is None else y))
    out = 0
    for a in iter_bits(x):
        row = div[a]
        for b in ys:
            out |= 1 << row[b]
    return out


def quotient_set(g: GroupTable, x: ElementSet, y: ElementSet | None = None) -> ElementSet:
    """``Q(X, Y) = {a b^-1 : a in X, b in Y}``; ``Q(X)`` when ``y`` is omitted."""
    if x.is_empty() or (y is not None and y.is_empty()):
        raise EmptySet("quotient sets need non-empty arguments")
    return ElementSet(g.order, quotient_mask(g, x.bits, None if y is None else y.bits))


def is_tpp_definitional(g: GroupTable, tr: TppTriple) -> bool:
    """Check ``s' s^-1 t' t^-1 u' u^-1 = 1  =>  s = s', t = t', u = u'`` directly.

    Enumerates every 6-tuple solving the equation: for each (s, s', t, t')
    the matching (u, u') pairs are looked up by the value of ``u' u^-1``.
    Cost is O(|S|^2 |T|^2 + number of solutions); this is the slow oracle.
    """
    mul, inv = g.mul, g.inv
    S, T, U = (x.indices() for x in tr.slots)
    u_pairs: dict[int, list[tuple[int, int]]] = {}
    for u in U:
        for u2 in U:
            u_pairs.setdefault(mul[u2][inv[u]], []).append((u, u2))
    for s in S:
        s_inv = inv[s]
        for s2 in S:
            a = mul[s2][s_inv]
            for t in T:
                t_inv = inv[t]
                for t2 in T:
                    w = mul[mul[a][t2]][t_inv]
                    # need u' u^-1 = w^-1
                    for u, u2 in u_pairs.get(inv[w], ()):
                        if not (s == s2 and t == t2 and u == u2):
                            return False
    return True


def _quotient_criterion(g: GroupTable, s: int, t: int, u: int) -> bool:
    qt = quotient_mask(g, t)
    qu = quotient_mask(g, u)
    if qt & qu != 1:
        return False
    qs = quotient_mask(g, s)
    return qs & g.product_mask(qt, qu) == 1


def is_tpp_quotient(g: GroupTable, tr: TppTriple) -> bool:
    """TPP via ``Q(S) ∩ Q(T)Q(U) = Q(T) ∩ Q(U) = {1}``."""
    return _quotient_criterion(g, tr.s.bits, tr.t.bits, tr.u.bits)


def _require_subgroup(g: GroupTable, h: SubgroupRecord | ElementSet, name: str) -> int:
    bits = h.bits
    if not is_closed_mask(g, bits):
        raise NotASubgroup(f"slot {name} is not a subgroup")
    return bits


def is_subgroup_tpp(g: GroupTable, s: SubgroupRecord, t: SubgroupRecord, u: SubgroupRecord) -> bool:
    """Subgroup form of the TPP: ``S ∩ TU = T ∩ U = {1}``."""
    sb, tb, ub = (_require_subgroup(g, x, n) for x, n in zip((s, t, u), "STU"))
    if tb & ub != 1:
        return False
    return sb & g.product_mask(tb, ub) == 1


def pair_products_injective(g: GroupTable, x: ElementSet, y: ElementSet) -> bool:
    """True iff ``(a, b) -> a^-1 b`` is injective on ``X x Y``."""
    mul, inv = g.mul, g.inv
    seen = set()
    for a in x:
        row = mul[inv[a]]
        for b in y:
            seen.add(row[b])
    return len(seen) == len(x) * len(y)


# ---------------------------------------------------------------------------
# Invariance transforms


def apply_permutation(tr: TppTriple, pi: Sequence[int]) -> TppTriple:
    """Reorder slots: slot ``i`` of the result is slot ``pi[i]`` of ``tr``."""
    if sorted(pi) != [0, 1, 2]:
        raise ValueError(f"{tuple(pi)} is not a permutation of three slots")
    slots = tr.slots
    return TppTriple(slots[pi[0]], slots[pi[1]], slots[pi[2]])


def apply_translation(g: GroupTable, tr: TppTriple, a: int, b: int, c: int, d: int) -> TppTriple:
    """``(dSa, dTb, dUc)``."""

    def move(x: ElementSet, right: int) -> ElementSet:
        return g.left_translate(d, g.right_translate(x, right))

    return TppTriple(move(tr.s, a), move(tr.t, b), move(tr.u, c))


def normalize_to_basic(g: GroupTable, tr: TppTriple) -> TppTriple:
    """Right-translate each slot by the inverse of its minimal-index member."""
    if not is_tpp_quotient(g, tr):
        raise NotATppTriple(f"{tr} does not satisfy the TPP")
    inv = g.inv
    out = TppTriple(*(g.right_translate(x, inv[x.min()]) for x in tr.slots))
    assert out.basic
    return out


@dataclass(frozen=True)
class Restriction:
    """Result of intersecting a triple with a subgroup.

    ``triple`` is None when some intersection is empty; ``empty_slots``
    names those slots.
    """

    sets: tuple[ElementSet, ElementSet, ElementSet]
    empty_slots: tuple[str, ...]

    @property
    def triple(self) -> TppTriple | None:
        return None if self.empty_slots else TppTriple(*self.sets)


def restrict_to_subgroup(tr: TppTriple, h: SubgroupRecord | ElementSet) -> Restriction:
    hs = h.elements if isinstance(h, SubgroupRecord) else h
    sets = tuple(x & hs for x in tr.slots)
    empty = tuple(name for name, x in zip("STU", sets) if x.is_empty())
    return Restriction(sets, empty)


# ---------------------------------------------------------------------------
# Size bounds


def neumann_pair_bound_ok(sizes: Sequence[int], group_order: int) -> bool:
    """``x (y + z - 1) <= |G|`` for every ordering of the three parameters."""
    a, b, c = sizes
    if min(a, b, c) < 1:
        raise ValueError(f"triple parameters must be >= 1, got {tuple(sizes)}")
    return all(x * (y + z - 1) <= group_order for x, y, z in set(permutations((a, b, c))))


def neumann_capacity_bound(group_order: int) -> int:
    """``floor(((1 + sqrt(1 + 8n)) / 4) ** 3)`` in exact integer arithmetic.

    With ``D = 1 + 8n``, ``(1 + sqrt(D))^3 = (1 + 3D) + (3 + D) sqrt(D)``, and
    flooring the irrational part before dividing by 64 cannot change the
    result because 64 times an integer is itself an integer.
    """
    if group_order < 1:
        raise ValueError("group order must be >= 1")
    d = 1 + 8 * group_order
    return (1 + 3 * d + math.isqrt((3 + d) ** 2 * d)) // 64
