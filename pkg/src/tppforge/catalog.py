"""Group-spec parsing, the bundled Cayley tables and the default catalog.

Spec grammar (whitespace between tokens is ignored)::

    spec := "cyclic:" INT
          | "dihedral:" INT              (order 2n)
          | "sd:" INT "," INT "," INT    (C_n ⋊ C_m via x -> x^k)
          | "prod:" spec "*" spec
          | "file:" PATH                 (PATH runs to the next "*", ")" or end)
          | "(" spec ")"
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Sequence

from .errors import ParseError, TppForgeError
from .groups import (
    DATA_DIR,
    GroupSpec,
    GroupTable,
    build_group,
    dump_table,
    enumerate_subgroups,
    find_abelian_normal_prime_index,
    is_cyclic_subgroup,
)

log = logging.getLogger(__name__)

DEFAULT_CATALOG = DATA_DIR / "catalog.txt"


# ---------------------------------------------------------------------------
# Parsing


class _SpecParser:
    KEYWORDS = ("cyclic", "dihedral", "sd", "prod", "file")

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str, *expected: str) -> ParseError:
        return ParseError(message, self.text, self.pos, expected)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def expect(self, token: str) -> None:
        self.skip_ws()
        if not self.text.startswith(token, self.pos):
            raise self.error("unexpected input", repr(token))
        self.pos += len(token)

    def integer(self) -> int:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            raise self.error("expected an integer", "INT")
        return int(self.text[start:self.pos])

    def spec(self) -> GroupSpec:
        self.skip_ws()
        if self.text.startswith("(", self.pos):
            self.pos += 1
            inner = self.spec()
            self.expect(")")
            return inner
        for kw in self.KEYWORDS:
            if self.text.startswith(kw, self.pos):
                after = self.pos + len(kw)
                rest = self.text[after:].lstrip()
                if rest.startswith(":"):
                    self.pos = after
                    self.expect(":")
                    return getattr(self, f"_{kw}")()
        raise self.error("unknown group recipe", *(f"{kw}:" for kw in self.KEYWORDS), "(")

    def _cyclic(self) -> GroupSpec:
        return GroupSpec.cyclic(self.integer())

    def _dihedral(self) -> GroupSpec:
        return GroupSpec.dihedral(self.integer())

    def _sd(self) -> GroupSpec:
        n = self.integer()
        self.expect(",")
        m = self.integer()
        self.expect(",")
        k = self.integer()
        return GroupSpec.semidirect(n, m, k)

    def _prod(self) -> GroupSpec:
        left = self.spec()
        self.expect("*")
        right = self.spec()
        return GroupSpec.direct_product(left, right)

    def _file(self) -> GroupSpec:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in "*)":
            self.pos += 1
        path = self.text[start:self.pos].strip()
        if not path:
            raise self.error("empty file path", "PATH")
        return GroupSpec.external_table(path)


def parse_group_spec(text: str) -> GroupSpec:
    """Parse a group spec string; errors carry the position and expected tokens."""
    parser = _SpecParser(text)
    spec = parser.spec()
    parser.skip_ws()
    if parser.pos != len(text):
        raise parser.error("trailing input after group spec", "end of spec")
    for sub in _walk(spec):
        if sub.kind in ("cyclic", "dihedral") and sub.params[0] < 1:
            raise ParseError(f"{sub.kind} needs a positive parameter", text, 0)
        if sub.kind == "semidirect" and min(sub.params[:2]) < 1:
            raise ParseError("sd factors need positive orders", text, 0)
    return spec


def _walk(spec: GroupSpec):
    yield spec
    if spec.kind == "direct_product":
        for sub in spec.params:
            yield from _walk(sub)


def group_from_text(text: str, base_dir: Path | None = None) -> GroupTable:
    return build_group(parse_group_spec(text), base_dir=base_dir)


# ---------------------------------------------------------------------------
# Table constructors for the bundled groups (not expressible as recipes)


def dicyclic_table(n: int) -> GroupTable:
    """Dicyclic group of order 4n: ``a^i x^j`` with ``a^2n = 1``, ``x^2 = a^n``,
    ``x a x^-1 = a^-1``; index ``j*2n + i``."""
    m = 2 * n
    size = 2 * m
    rows = [[0] * size for _ in range(size)]
    for j, i, j2, i2 in product(range(2), range(m), range(2), range(m)):
        # a^i x^j a^i2 x^j2 = a^(i + (-1)^j i2) x^j x^j2
        e = (i + (i2 if j == 0 else -i2)) % m
        if j and j2:
            e = (e + n) % m
        rows[j * m + i][j2 * m + i2] = ((j + j2) % 2) * m + e
    labels = [(f"a^{i}" if i else "") + ("x" if j else "") or "e" for j in range(2) for i in range(m)]
    return GroupTable.from_rows(rows, labels, spec_id=f"Dic{n}", check=True)


def wreath_with_c2(base: GroupTable, spec_id: str | None = None) -> GroupTable:
    """``base ≀ C2``: pairs ``(x, y)`` of base elements with a coordinate swap.

    Index is ``s*k^2 + x*k + y`` for ``((x, y), swap^s)``.
    """
    k = base.order
    size = 2 * k * k
    rows = [[0] * size for _ in range(size)]
    bm = base.mul
    for s, x, y, s2, x2, y2 in product(range(2), range(k), range(k), range(2), range(k), range(k)):
        a2, b2 = (x2, y2) if s == 0 else (y2, x2)
        rows[s * k * k + x * k + y][s2 * k * k + x2 * k + y2] = ((s + s2) % 2) * k * k + bm[x][a2] * k + bm[y][b2]
    labels = [f"(({base.labels[x]},{base.labels[y]}){',w' if s else ''})" for s in range(2) for x in range(k) for y in range(k)]
    return GroupTable.from_rows(rows, labels, spec_id=spec_id, check=True)


def permutation_group_table(generators: Sequence[Sequence[int]], spec_id: str | None = None) -> GroupTable:
    """Cayley table of the permutation group generated by ``generators``.

    Elements are listed in breadth-first order from the identity.
    """
    degree = len(generators[0])
    ident = tuple(range(degree))
    gens = [tuple(g) for g in generators]
    elems = [ident]
    index = {ident: 0}
    for p in elems:
        for gen in gens:
            q = tuple(gen[p[i]] for i in range(degree))  # apply p, then gen
            if q not in index:
                index[q] = len(elems)
                elems.append(q)
    rows = [[index[tuple(b[a[i]] for i in range(degree))] for b in elems] for a in elems]
    labels = [_cycle_label(p) for p in elems]
    return GroupTable.from_rows(rows, labels, spec_id=spec_id, check=True)


def _cycle_label(p: Sequence[int]) -> str:
    seen, out = set(), []
    for start in range(len(p)):
        if start in seen or p[start] == start:
            continue
        cycle, x = [], start
        while x not in seen:
            seen.add(x)
            cycle.append(str(x + 1))
            x = p[x]
        out.append("(" + "".join(cycle) + ")")
    return "".join(out) or "e"


def bundled_tables() -> dict[str, GroupTable]:
    """The non-recipe groups shipped as JSON under ``tppforge/data``.

    The order-32 ids are annotations, not verified by isomorphism testing.
    """
    c4 = build_group(GroupSpec.cyclic(4))
    v4 = build_group(GroupSpec.direct_product(GroupSpec.cyclic(2), GroupSpec.cyclic(2)))
    return {
        "q8": dicyclic_table(2),
        "q16": dicyclic_table(4),
        "q32": dicyclic_table(8),
        "a4": permutation_group_table([(1, 2, 0, 3), (1, 0, 3, 2)], spec_id="A4"),
        "s4": permutation_group_table([(1, 2, 3, 0), (1, 0, 2, 3)], spec_id="S4"),
        "g32_11": wreath_with_c2(c4, spec_id="[32,11] (C4 x C4) : C2 = C4 wr C2"),
        "g32_27": wreath_with_c2(v4, spec_id="[32,27] (C2 x C2 x C2 x C2) : C2 = C2^2 wr C2"),
    }


def write_bundled_tables(directory: Path = DATA_DIR) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, table in bundled_tables().items():
        path = directory / f"{name}.json"
        dump_table(table, path)
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# Catalog


def _is_prime_power(n: int) -> int | None:
    """The prime ``p`` if ``n = p^k`` with ``k >= 1``, else None."""
    for p in range(2, n + 1):
        if n % p == 0:
            while n % p == 0:
                n //= p
            return p if n == 1 else None
    return None


@dataclass
class CatalogEntry:
    spec: str
    order: int
    tags: dict[str, bool] = field(default_factory=dict)
    table: GroupTable | None = field(default=None, repr=False, compare=False)


def catalog_entry(spec_text: str, base_dir: Path | None = None) -> CatalogEntry:
    """Build the group and recompute its tags from scratch."""
    table = group_from_text(spec_text, base_dir)
    subgroups = enumerate_subgroups(table)
    pairs = find_abelian_normal_prime_index(table, subgroups)
    tags = {
        "abelian": table.is_abelian,
        "p_group": table.order > 1 and _is_prime_power(table.order) is not None,
        "has_cyclic_normal_prime_index": any(is_cyclic_subgroup(table, h) for h, _ in pairs),
        "has_abelian_normal_prime_index": bool(pairs),
    }
    return CatalogEntry(spec_text.strip(), table.order, tags, table)


@dataclass
class CatalogLine:
    lineno: int
    text: str


def read_catalog(path: Path | str) -> list[CatalogLine]:
    """Non-blank, non-comment lines of a catalog file."""
    lines = []
    for i, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if text:
            lines.append(CatalogLine(i, text))
    return lines


def load_catalog(
    path: Path | str = DEFAULT_CATALOG, max_order: int | None = None
) -> tuple[list[CatalogEntry], list[tuple[CatalogLine, str]]]:
    """Entries that build successfully, plus ``(line, error)`` for those that do not."""
    path = Path(path)
    entries, failures = [], []
    for line in read_catalog(path):
        try:
            entry = catalog_entry(line.text, base_dir=path.parent)
        except (TppForgeError, OSError, ValueError) as exc:
            failures.append((line, str(exc)))
            log.warning("%s:%d: %s", path, line.lineno, exc)
            continue
        if max_order is None or entry.order <= max_order:
            entries.append(entry)
    return entries, failures


def default_catalog(max_order: int | None = None) -> list[CatalogEntry]:
    entries, failures = load_catalog(DEFAULT_CATALOG, max_order)
    if failures:
        raise TppForgeError(f"bundled catalog has bad lines: {failures}")
    return entries


def default_catalog_specs() -> list[str]:
    """Spec strings of the bundled catalog, in file order."""
    return [line.text for line in read_catalog(DEFAULT_CATALOG)]

