"""Finite groups as explicit Cayley tables.

Element 0 is always the identity. Groups are built from a small set of
recipes (cyclic, dihedral, semidirect, direct product) or ingested from a
JSON Cayley table.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .elements import ElementSet, iter_bits, mask_of
from .errors import CapExceeded, InvalidAction, NotASubgroup, NotNormal, TableInvalid

DEFAULT_MAX_ORDER = 256
DATA_DIR = Path(__file__).resolve().parent / "data"


def max_order_cap() -> int:
    """Order cap for group construction and subgroup enumeration.

    ``TPPFORGE_MAX_ORDER`` overrides the default of 256.
    """
    raw = os.environ.get("TPPFORGE_MAX_ORDER")
    if raw is None or raw.strip() == "":
        return DEFAULT_MAX_ORDER
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"TPPFORGE_MAX_ORDER must be an integer, got {raw!r}") from None
    if cap < 1:
        raise ValueError(f"TPPFORGE_MAX_ORDER must be positive, got {cap}")
    return cap


# ---------------------------------------------------------------------------
# Specs


@dataclass(frozen=True)
class GroupSpec:
    """A recipe for a group.

    ``kind`` is one of ``cyclic``, ``dihedral``, ``semidirect``,
    ``direct_product`` or ``external_table``; ``params`` holds the integers,
    sub-specs or source path the recipe needs.
    """

    kind: str
    params: tuple

    @classmethod
    def cyclic(cls, n: int) -> GroupSpec:
        return cls("cyclic", (n,))

    @classmethod
    def dihedral(cls, n: int) -> GroupSpec:
        return cls("dihedral", (n,))

    @classmethod
    def semidirect(cls, n: int, m: int, k: int) -> GroupSpec:
        return cls("semidirect", (n, m, k))

    @classmethod
    def direct_product(cls, left: GroupSpec, right: GroupSpec) -> GroupSpec:
        return cls("direct_product", (left, right))

    @classmethod
    def external_table(cls, source: str | os.PathLike) -> GroupSpec:
        return cls("external_table", (str(source),))

    def __str__(self) -> str:
        if self.kind == "cyclic":
            return f"cyclic:{self.params[0]}"
        if self.kind == "dihedral":
            return f"dihedral:{self.params[0]}"
        if self.kind == "semidirect":
            return "sd:{},{},{}".format(*self.params)
        if self.kind == "direct_product":
            return f"prod:{self.params[0]}*{self.params[1]}"
        if self.kind == "external_table":
            return f"file:{self.params[0]}"
        raise ValueError(f"unknown group recipe {self.kind!r}")

    def validate(self) -> None:
        """Raise if the recipe parameters are out of range."""
        if self.kind in ("cyclic", "dihedral"):
            (n,) = self.params
            if not isinstance(n, int) or n < 1:
                raise ValueError(f"{self.kind} order parameter must be a positive integer, got {n!r}")
        elif self.kind == "semidirect":
            n, m, k = self.params
            if n < 1 or m < 1:
                raise ValueError(f"semidirect factors must have order >= 1, got n={n}, m={m}")
            if math.gcd(k, n) != 1:
                raise InvalidAction(f"sd:{n},{m},{k}: gcd({k}, {n}) != 1, so x -> x^{k} is not an automorphism of C{n}")
            if pow(k, m, n) != 1 % n:
                raise InvalidAction(f"sd:{n},{m},{k}: {k}^{m} is not 1 mod {n}, so C{m} cannot act this way")
        elif self.kind == "direct_product":
            for sub in self.params:
                sub.validate()
        elif self.kind != "external_table":
            raise ValueError(f"unknown group recipe {self.kind!r}")


# ---------------------------------------------------------------------------
# Tables


@dataclass(frozen=True)
class GroupTable:
    order: int
    mul: tuple[tuple[int, ...], ...]
    inv: tuple[int, ...]
    labels: tuple[str, ...]
    spec_id: str | None = None

    @classmethod
    def from_rows(
        cls,
        mul: Sequence[Sequence[int]],
        labels: Sequence[str] | None = None,
        spec_id: str | None = None,
        *,
        check: bool = True,
    ) -> GroupTable:
        """Build a table from raw rows, deriving inverses.

        With ``check`` the full axiom check runs and :class:`TableInvalid`
        names the first violated axiom.
        """
        n = len(mul)
        rows = tuple(tuple(int(v) for v in row) for row in mul)
        problem = _shape_problem(rows)
        if problem:
            raise TableInvalid(problem)
        inv = [-1] * n
        for x in range(n):
            for y in range(n):
                if rows[x][y] == 0:
                    inv[x] = y
                    break
        if -1 in inv:
            raise TableInvalid(f"inverse axiom: element {inv.index(-1)} has no right inverse")
        if labels is None:
            labels = [str(i) for i in range(n)]
        if len(labels) != n:
            raise TableInvalid(f"expected {n} labels, got {len(labels)}")
        table = cls(n, rows, tuple(inv), tuple(str(s) for s in labels), spec_id)
        if check:
            problem = axiom_violation(table)
            if problem:
                raise TableInvalid(problem)
        return table

    # -- element helpers ----------------------------------------------------

    @property
    def identity(self) -> int:
        return 0

    def elements(self) -> range:
        return range(self.order)

    def product(self, *xs: int) -> int:
        acc = 0
        for x in xs:
            acc = self.mul[acc][x]
        return acc

    def element_set(self, indices: Iterable[int]) -> ElementSet:
        return ElementSet.from_indices(self.order, indices)

    def full_set(self) -> ElementSet:
        return ElementSet.full(self.order)

    def identity_set(self) -> ElementSet:
        return ElementSet(self.order, 1)

    @cached_property
    def full_mask(self) -> int:
        return (1 << self.order) - 1

    @cached_property
    def div(self) -> tuple[tuple[int, ...], ...]:
        """``div[x][y] = x * y^-1``."""
        mul, inv = self.mul, self.inv
        return tuple(tuple(mul[x][inv[y]] for y in range(self.order)) for x in range(self.order))

    @cached_property
    def is_abelian(self) -> bool:
        mul = self.mul
        return all(mul[a][b] == mul[b][a] for a in range(self.order) for b in range(a + 1, self.order))

    @cached_property
    def generators(self) -> tuple[int, ...]:
        """A small generating set, chosen greedily in index order."""
        gens: list[int] = []
        reached = 1
        for x in range(1, self.order):
            if not reached >> x & 1:
                gens.append(x)
                reached = _closure_mask(self, reached, gens)
        return tuple(gens)

    def element_order(self, x: int) -> int:
        k, y = 1, x
        while y != 0:
            y = self.mul[y][x]
            k += 1
        return k

    # -- set helpers (bitmask level) ------------------------------------------

    def product_mask(self, a: int, b: int) -> int:
        """Bitmask of the set product ``AB``."""
        mul = self.mul
        out = 0
        bs = list(iter_bits(b))
        for x in iter_bits(a):
            row = mul[x]
            for y in bs:
                out |= 1 << row[y]
        return out

    def inverse_mask(self, a: int) -> int:
        inv = self.inv
        out = 0
        for x in iter_bits(a):
            out |= 1 << inv[x]
        return out

    def left_translate_mask(self, g: int, a: int) -> int:
        row = self.mul[g]
        out = 0
        for x in iter_bits(a):
            out |= 1 << row[x]
        return out

    def right_translate_mask(self, a: int, g: int) -> int:
        mul = self.mul
        out = 0
        for x in iter_bits(a):
            out |= 1 << mul[x][g]
        return out

    def conjugate_mask(self, g: int, a: int) -> int:
        """Bitmask of ``g A g^-1``."""
        mul, gi = self.mul, self.inv[g]
        row = mul[g]
        out = 0
        for x in iter_bits(a):
            out |= 1 << mul[row[x]][gi]
        return out

    # -- sets ---------------------------------------------------------------

    def set_product(self, a: ElementSet, b: ElementSet) -> ElementSet:
        return ElementSet(self.order, self.product_mask(a.bits, b.bits))

    def inverse_set(self, a: ElementSet) -> ElementSet:
        return ElementSet(self.order, self.inverse_mask(a.bits))

    def left_translate(self, g: int, a: ElementSet) -> ElementSet:
        return ElementSet(self.order, self.left_translate_mask(g, a.bits))

    def right_translate(self, a: ElementSet, g: int) -> ElementSet:
        return ElementSet(self.order, self.right_translate_mask(a.bits, g))

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        payload: dict = {"order": self.order, "mul": [list(r) for r in self.mul], "labels": list(self.labels)}
        if self.spec_id is not None:
            payload["spec_id"] = self.spec_id
        return payload

    def describe(self) -> str:
        return self.spec_id or f"<group of order {self.order}>"


def _shape_problem(rows: tuple[tuple[int, ...], ...]) -> str | None:
    n = len(rows)
    if n == 0:
        return "table is empty (order must be >= 1)"
    for x, row in enumerate(rows):
        if len(row) != n:
            return f"row {x} has length {len(row)}, expected {n}"
        for v in row:
            if not 0 <= v < n:
                return f"row {x} contains out-of-range element index {v}"
    return None


def axiom_violation(table: GroupTable) -> str | None:
    """Return a message naming the first violated group axiom, or None."""
    n = table.order
    mul = table.mul
    if len(mul) != n or len(table.inv) != n:
        return f"dimension: table claims order {n} but has {len(mul)} rows and {len(table.inv)} inverses"
    problem = _shape_problem(mul)
    if problem:
        return problem
    for x in range(n):
        if mul[0][x] != x or mul[x][0] != x:
            return f"identity axiom: index 0 is not a two-sided identity (fails at element {x})"
    for x in range(n):
        y = table.inv[x]
        if not 0 <= y < n or mul[x][y] != 0 or mul[y][x] != 0:
            return f"inverse axiom: inv[{x}] = {y} is not a two-sided inverse"
    full = list(range(n))
    for x in range(n):
        if sorted(mul[x]) != full:
            return f"latin square: row {x} is not a permutation"
        if sorted(mul[y][x] for y in range(n)) != full:
            return f"latin square: column {x} is not a permutation"
    m = np.asarray(mul, dtype=np.int32)
    for a in range(n):
        # (a b) c versus a (b c) for all b, c
        left = m[m[a]]
        right = m[a][m]
        if not np.array_equal(left, right):
            b, c = np.argwhere(left != right)[0]
            return f"associativity: ({a}*{b})*{c} != {a}*({b}*{c})"
    return None


def verify_group_axioms(table: GroupTable) -> bool:
    """True iff identity, inverse, Latin-square and associativity all hold."""
    try:
        return axiom_violation(table) is None
    except (TypeError, IndexError, ValueError):
        return False


# ---------------------------------------------------------------------------
# Recipes


def build_group(spec: GroupSpec, *, check: bool = False, base_dir: Path | None = None) -> GroupTable:
    """Construct the Cayley table for ``spec``.

    Recipe-built tables are associative by construction; pass ``check=True``
    to run the exhaustive axiom check anyway. External tables are always
    checked.
    """
    spec.validate()
    if spec.kind == "external_table":
        return load_table(resolve_table_path(spec.params[0], base_dir))
    mul, labels = _recipe_rows(spec, base_dir)
    n = len(mul)
    if n > max_order_cap():
        raise CapExceeded(f"{spec} has order {n}, above the cap of {max_order_cap()}")
    return GroupTable.from_rows(mul, labels, spec_id=str(spec), check=check)


def _recipe_rows(spec: GroupSpec, base_dir: Path | None) -> tuple[list[list[int]], list[str]]:
    if spec.kind == "cyclic":
        (n,) = spec.params
        _check_cap(n, spec)
        mul = [[(i + j) % n for j in range(n)] for i in range(n)]
        labels = ["e"] + ["a" if i == 1 else f"a^{i}" for i in range(1, n)]
        return mul, labels
    if spec.kind == "dihedral":
        (n,) = spec.params
        _check_cap(2 * n, spec)
        # index j*n + i <-> r^i s^j: rotations first, then reflections
        mul = [[0] * (2 * n) for _ in range(2 * n)]
        for j in range(2):
            for i in range(n):
                for l in range(2):
                    for k in range(n):
                        rot = (i + (k if j == 0 else -k)) % n
                        mul[j * n + i][l * n + k] = ((j + l) % 2) * n + rot
        labels = []
        for j in range(2):
            for i in range(n):
                r = "" if i == 0 else ("r" if i == 1 else f"r^{i}")
                labels.append((r + ("s" if j else "")) or "e")
        return mul, labels
    if spec.kind == "semidirect":
        n, m, k = spec.params
        _check_cap(n * m, spec)
        powers = [pow(k, j, n) if n > 1 else 0 for j in range(m)]
        size = n * m
        mul = [[0] * size for _ in range(size)]
        for i in range(n):
            for j in range(m):
                row = mul[i * m + j]
                kj = powers[j]
                for i2 in range(n):
                    for j2 in range(m):
                        row[i2 * m + j2] = ((i + i2 * kj) % n) * m + (j + j2) % m
        labels = []
        for i in range(n):
            for j in range(m):
                parts = [p for p, e in (("x", i), ("y", j)) if e]
                exps = [e for e in (i, j) if e]
                labels.append("".join(p if e == 1 else f"{p}^{e}" for p, e in zip(parts, exps)) or "e")
        return mul, labels
    if spec.kind == "direct_product":
        left = build_group(spec.params[0], base_dir=base_dir)
        right = build_group(spec.params[1], base_dir=base_dir)
        a, b = left.order, right.order
        _check_cap(a * b, spec)
        mul = [[0] * (a * b) for _ in range(a * b)]
        for x1 in range(a):
            for y1 in range(b):
                row = mul[x1 * b + y1]
                lrow, rrow = left.mul[x1], right.mul[y1]
                for x2 in range(a):
                    base = lrow[x2] * b
                    for y2 in range(b):
                        row[x2 * b + y2] = base + rrow[y2]
        labels = [f"({p},{q})" for p in left.labels for q in right.labels]
        return mul, labels
    raise ValueError(f"unknown group recipe {spec.kind!r}")


def _check_cap(n: int, spec: GroupSpec) -> None:
    cap = max_order_cap()
    if n > cap:
        raise CapExceeded(f"{spec} has order {n}, above the cap of {cap}")


# ---------------------------------------------------------------------------
# External tables


def resolve_table_path(source: str, base_dir: Path | None = None) -> Path:
    """Find a table file: as given, then relative to ``base_dir``, then among
    the tables bundled with the package."""
    path = Path(source)
    candidates = [path]
    if not path.is_absolute():
        if base_dir is not None:
            candidates.append(Path(base_dir) / path)
        candidates.append(DATA_DIR / path)
        if path.suffix == "":
            candidates.append(DATA_DIR / f"{source}.json")
    for candidate in candidates:
        if candidate.is_file():
            return candidate
    raise FileNotFoundError(f"no Cayley table file found for {source!r}")


def table_from_json_dict(payload: dict, default_id: str | None = None) -> GroupTable:
    if not isinstance(payload, dict) or "mul" not in payload:
        raise TableInvalid("table file must be a JSON object with a 'mul' field")
    mul = payload["mul"]
    if not isinstance(mul, list) or not all(isinstance(r, list) for r in mul):
        raise TableInvalid("'mul' must be a list of rows")
    order = payload.get("order", len(mul))
    if order != len(mul):
        raise TableInvalid(f"dimension: 'order' is {order} but 'mul' has {len(mul)} rows")
    if order > max_order_cap():
        raise CapExceeded(f"table has order {order}, above the cap of {max_order_cap()}")
    return GroupTable.from_rows(mul, payload.get("labels"), payload.get("spec_id", default_id), check=True)


def load_table(path: str | os.PathLike) -> GroupTable:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TableInvalid(f"{path}: not valid JSON ({exc})") from None
    return table_from_json_dict(payload, default_id=f"file:{path.name}")


def dump_table(table: GroupTable, path: str | os.PathLike) -> None:
    Path(path).write_text(json.dumps(table.to_json_dict()) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Subgroups


@dataclass(frozen=True)
class SubgroupRecord:
    elements: ElementSet
    order: int
    is_normal: bool
    is_abelian: bool
    index: int
    generators: tuple[int, ...] = field(default=(), compare=False)

    @property
    def bits(self) -> int:
        return self.elements.bits

    def sort_key(self) -> tuple:
        return (self.order, self.elements.indices())


def _closure_mask(g: GroupTable, start: int, gens: Sequence[int]) -> int:
    """Subgroup generated by ``gens``; ``start`` must already lie inside it."""
    mul = g.mul
    reached = start | 1 | mask_of(gens)
    queue = list(iter_bits(reached))
    while queue:
        x = queue.pop()
        row = mul[x]
        for s in gens:
            y = row[s]
            if not reached >> y & 1:
                reached |= 1 << y
                queue.append(y)
    return reached


def is_closed_mask(g: GroupTable, mask: int) -> bool:
    if not mask & 1:
        return False
    elems = list(iter_bits(mask))
    mul = g.mul
    return all(mask >> mul[a][b] & 1 for a in elems for b in elems)


def _is_normal_mask(g: GroupTable, mask: int) -> bool:
    return all(g.conjugate_mask(x, mask) == mask for x in g.generators)


def _is_abelian_mask(g: GroupTable, gens: Sequence[int]) -> bool:
    mul = g.mul
    return all(mul[a][b] == mul[b][a] for a in gens for b in gens)


def _minimal_gens(g: GroupTable, mask: int) -> tuple[int, ...]:
    gens: list[int] = []
    reached = 1
    for x in iter_bits(mask & ~1):
        if not reached >> x & 1:
            gens.append(x)
            reached = _closure_mask(g, reached, gens)
    return tuple(gens)


def subgroup_record(g: GroupTable, elements: ElementSet | Iterable[int]) -> SubgroupRecord:
    """Validate ``elements`` as a subgroup and compute its flags."""
    if not isinstance(elements, ElementSet):
        elements = g.element_set(elements)
    if elements.capacity != g.order:
        raise NotASubgroup(f"element set has capacity {elements.capacity}, group has order {g.order}")
    if not is_closed_mask(g, elements.bits):
        raise NotASubgroup(f"{elements} is not closed under multiplication or lacks the identity")
    return _record(g, elements.bits)


def _record(g: GroupTable, mask: int, gens: Sequence[int] | None = None) -> SubgroupRecord:
    if gens is None:
        gens = _minimal_gens(g, mask)
    order = mask.bit_count()
    assert g.order % order == 0, "Lagrange violated: subgroup order must divide |G|"
    return SubgroupRecord(
        elements=ElementSet(g.order, mask),
        order=order,
        is_normal=_is_normal_mask(g, mask),
        is_abelian=_is_abelian_mask(g, gens),
        index=g.order // order,
        generators=tuple(gens),
    )


def enumerate_subgroups(g: GroupTable, cap: int | None = None) -> list[SubgroupRecord]:
    """Every subgroup of ``g`` exactly once, sorted by (order, elements).

    Starts from the cyclic subgroups and repeatedly adjoins one extra
    generator to each known subgroup until no new subgroup appears.
    """
    cap = max_order_cap() if cap is None else cap
    if g.order > cap:
        raise CapExceeded(f"group of order {g.order} exceeds the subgroup-enumeration cap {cap}")
    found: dict[int, tuple[int, ...]] = {}
    cyclic_masks: dict[int, int] = {}
    for x in range(g.order):
        mask = _closure_mask(g, 1, [x] if x else [])
        cyclic_masks.setdefault(mask, x)
        if mask not in found:
            found[mask] = (x,) if x else ()
    # adjoining a cyclic subgroup's generator is enough: each x is in one
    extra = list(cyclic_masks.items())
    frontier = list(found)
    while frontier:
        fresh = []
        for mask in frontier:
            gens = found[mask]
            for cmask, x in extra:
                if cmask & ~mask == 0:
                    continue
                new = _closure_mask(g, mask, gens + (x,))
                if new not in found:
                    found[new] = gens + (x,)
                    fresh.append(new)
        frontier = fresh
    records = [_record(g, mask) for mask in found]
    records.sort(key=SubgroupRecord.sort_key)
    return records


def _is_prime(n: int) -> bool:
    return n >= 2 and all(n % d for d in range(2, math.isqrt(n) + 1))


def find_abelian_normal_prime_index(
    g: GroupTable, subgroups: Sequence[SubgroupRecord] | None = None
) -> list[tuple[SubgroupRecord, int]]:
    """All abelian normal subgroups of prime index, paired with that index."""
    if subgroups is None:
        subgroups = enumerate_subgroups(g)
    return [(h, h.index) for h in subgroups if h.is_abelian and h.is_normal and _is_prime(h.index)]


def is_cyclic_subgroup(g: GroupTable, h: SubgroupRecord) -> bool:
    return any(g.element_order(x) == h.order for x in h.elements)


# ---------------------------------------------------------------------------
# Cosets


@dataclass(frozen=True)
class CosetTable:
    """Left cosets ``xH``; coset 0 is ``H`` and representatives are minimal indices."""

    subgroup: SubgroupRecord
    reps: tuple[int, ...]
    coset_of: tuple[int, ...]
    cosets: tuple[ElementSet, ...]

    @property
    def index(self) -> int:
        return len(self.reps)

    def quotient_table(self, g: GroupTable) -> GroupTable:
        """Multiplication table of ``G/H`` on coset indices (H must be normal)."""
        if not self.subgroup.is_normal:
            raise NotNormal("quotient table needs a normal subgroup")
        k = self.index
        rows = [[self.coset_of[g.mul[self.reps[i]][self.reps[j]]] for j in range(k)] for i in range(k)]
        return GroupTable.from_rows(rows, spec_id=f"{g.describe()}/H{self.subgroup.order}", check=False)


def coset_table(g: GroupTable, h: SubgroupRecord | ElementSet) -> CosetTable:
    if isinstance(h, ElementSet):
        h = subgroup_record(g, h)
    elif not is_closed_mask(g, h.bits):
        raise NotASubgroup(f"{h.elements} is not closed under multiplication or lacks the identity")
    coset_of = [-1] * g.order
    reps: list[int] = []
    cosets: list[ElementSet] = []
    for x in range(g.order):
        if coset_of[x] >= 0:
            continue
        mask = g.left_translate_mask(x, h.bits)
        for y in iter_bits(mask):
            coset_of[y] = len(reps)
        reps.append(x)
        cosets.append(ElementSet(g.order, mask))
    return CosetTable(h, tuple(reps), tuple(coset_of), tuple(cosets))
