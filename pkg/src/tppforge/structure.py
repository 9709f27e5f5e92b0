"""Coset decompositions of TPP triples and the checks built on them: the
subgroup bound for groups with an abelian normal subgroup of prime index,
its corollary, and the scan for the cyclic-subgroup conjecture."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .catalog import CatalogEntry
from .elements import ElementSet
from .errors import (
    EmptySet,
    NotAbelian,
    NotASubgroup,
    NotATppTriple,
    NotNormal,
    SearchNotExhausted,
    TheoremViolation,
)
from .groups import (
    CosetTable,
    GroupTable,
    SubgroupRecord,
    coset_table,
    enumerate_subgroups,
    find_abelian_normal_prime_index,
    is_closed_mask,
    is_cyclic_subgroup,
    subgroup_record,
)
from .search import SearchConfig, SearchReport, beta0_exact, beta_exact
from .tpp import TppTriple, is_subgroup_tpp

log = logging.getLogger(__name__)


def theorem_ratio_bound(p: int) -> Fraction:
    """``p^2 / (2p - 1)``."""
    return Fraction(p * p, 2 * p - 1)


# ---------------------------------------------------------------------------
# Supports and decompositions


def _as_record(g: GroupTable, h: SubgroupRecord | ElementSet) -> SubgroupRecord:
    if isinstance(h, SubgroupRecord):
        if not is_closed_mask(g, h.bits):
            raise NotASubgroup(f"{h.elements} is not a subgroup")
        return h
    return subgroup_record(g, h)


def h_support(g: GroupTable, s: ElementSet, h: SubgroupRecord | ElementSet, cosets: CosetTable | None = None) -> frozenset[int]:
    """Indices of the left cosets of ``h`` that meet ``s``."""
    if s.is_empty():
        raise EmptySet("the H-support of an empty set is undefined")
    if cosets is None:
        cosets = coset_table(g, _as_record(g, h))
    return frozenset(cosets.coset_of[x] for x in s)


@dataclass(frozen=True)
class CosetDecomposition:
    h: SubgroupRecord
    n_index: int
    coset_of: tuple[int, ...]
    reps: tuple[int, ...]
    supports: tuple[frozenset[int], frozenset[int], frozenset[int]]
    slices: tuple[dict[int, ElementSet], dict[int, ElementSet], dict[int, ElementSet]]
    restriction: tuple[ElementSet, ElementSet, ElementSet]

    @property
    def sigma(self) -> int:
        return len(self.supports[0])

    @property
    def tau(self) -> int:
        return len(self.supports[1])

    @property
    def upsilon(self) -> int:
        return len(self.supports[2])


def decompose(g: GroupTable, tr: TppTriple, h: SubgroupRecord | ElementSet) -> CosetDecomposition:
    """Split each slot of ``tr`` along the left cosets of ``h``."""
    rec = _as_record(g, h)
    ct = coset_table(g, rec)
    supports = []
    slices = []
    for x in tr.slots:
        parts: dict[int, int] = {}
        for e in x:
            c = ct.coset_of[e]
            parts[c] = parts.get(c, 0) | 1 << e
        supports.append(frozenset(parts))
        slices.append({c: ElementSet(g.order, bits) for c, bits in sorted(parts.items())})
    restriction = tuple(x & rec.elements for x in tr.slots)
    return CosetDecomposition(rec, ct.index, ct.coset_of, ct.reps, tuple(supports), tuple(slices), restriction)


def support_index_identity(g: GroupTable, s: SubgroupRecord | ElementSet, h: SubgroupRecord | ElementSet) -> bool:
    """``|support of S| == |S : S ∩ H|`` for a subgroup ``S``."""
    srec = _as_record(g, s)
    hrec = _as_record(g, h)
    support = h_support(g, srec.elements, hrec)
    meet = (srec.elements & hrec.elements).cardinality
    return len(support) * meet == srec.order


def support_subgroup_check(g: GroupTable, s: SubgroupRecord | ElementSet, h: SubgroupRecord | ElementSet) -> bool:
    """The support of a subgroup ``S`` is closed in ``G/H`` (``H`` normal)."""
    srec = _as_record(g, s)
    hrec = _as_record(g, h)
    if not hrec.is_normal:
        raise NotNormal("support_subgroup_check needs a normal subgroup H")
    ct = coset_table(g, hrec)
    quotient = ct.quotient_table(g)
    support = h_support(g, srec.elements, hrec, ct)
    if 0 not in support:
        return False
    return all(quotient.mul[x][y] in support for x in support for y in support)


def _require_subgroup_triple(g: GroupTable, tr: TppTriple) -> tuple[SubgroupRecord, SubgroupRecord, SubgroupRecord]:
    recs = tuple(_as_record(g, x) for x in tr.slots)
    if not is_subgroup_tpp(g, *recs):
        raise NotATppTriple(f"{tr} is not a subgroup TPP triple")
    return recs


def _require_abelian_normal(h: SubgroupRecord) -> None:
    if not h.is_normal:
        raise NotNormal("H must be normal in G")
    if not h.is_abelian:
        raise NotAbelian("H must be abelian")


@dataclass(frozen=True)
class CosetBound:
    lhs: int
    rhs: Fraction
    ok: bool
    sigma: int
    tau: int
    upsilon: int
    divisibility_ok: bool


def abelian_coset_bound(g: GroupTable, tr: TppTriple, h: SubgroupRecord | ElementSet) -> CosetBound:
    """``|S||T||U| <= (σ τ υ / n) |G|`` for a subgroup TPP triple and an
    abelian normal ``H`` of index ``n``; also checks that each support size
    divides ``n`` and the order of its subgroup."""
    hrec = _as_record(g, h)
    _require_abelian_normal(hrec)
    recs = _require_subgroup_triple(g, tr)
    dec = decompose(g, tr, hrec)
    n = dec.n_index
    lhs = tr.size
    rhs = Fraction(dec.sigma * dec.tau * dec.upsilon, n) * g.order
    divisibility_ok = all(n % k == 0 and r.order % k == 0 for k, r in zip((dec.sigma, dec.tau, dec.upsilon), recs))
    return CosetBound(lhs, rhs, lhs <= rhs and divisibility_ok, dec.sigma, dec.tau, dec.upsilon, divisibility_ok)


# ---------------------------------------------------------------------------
# Coset-distinctness lemma


@dataclass(frozen=True)
class LemmaCheck:
    part: str
    cosets: tuple[int, ...]
    ok: bool
    detail: str = ""


@dataclass
class LemmaReport:
    u0_normal: bool
    t0_normal: bool
    core_order: int
    checks: list[LemmaCheck] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def parts_checked(self) -> set[str]:
        return {c.part for c in self.checks}


def _is_normal_in(g: GroupTable, x: ElementSet) -> bool:
    return all(g.conjugate_mask(y, x.bits) == x.bits for y in g.generators)


def lemma_coset_checks(g: GroupTable, tr: TppTriple, h: SubgroupRecord | ElementSet) -> LemmaReport:
    """Materialize the products ``S_x^-1 T_x U_0`` and check, for every
    applicable coset:

    1. each is a coset of ``K = S_0 T_0 U_0`` inside ``H``, disjoint from
       ``K`` when ``xH != H``;
    2. they are pairwise distinct over ``S̄ ∩ T̄`` when ``U_0`` is normal in
       ``G`` (and ``S_x^-1 U_x T_0`` over ``S̄ ∩ Ū`` when ``T_0`` is);
    3. ``S_x^-1 T_x U_0 != S_y^-1 U_y T_0`` for ``x ∈ S̄ ∩ T̄``,
       ``y ∈ S̄ ∩ Ū``, ``x != y``.
    """
    hrec = _as_record(g, h)
    _require_abelian_normal(hrec)
    _require_subgroup_triple(g, tr)
    dec = decompose(g, tr, hrec)
    s0, t0, u0 = dec.restriction
    s_sl, t_sl, u_sl = dec.slices
    core = g.product_mask(g.product_mask(s0.bits, t0.bits), u0.bits)
    core_order = core.bit_count()
    report = LemmaReport(_is_normal_in(g, u0), _is_normal_in(g, t0), core_order)
    checks = report.checks
    if core_order != len(s0) * len(t0) * len(u0):
        checks.append(LemmaCheck("core", (), False, f"|S0 T0 U0| = {core_order} != |S0||T0||U0|"))

    def family(first: dict[int, ElementSet], second: dict[int, ElementSet], tail: ElementSet) -> dict[int, int]:
        out = {}
        for x in sorted(set(first) & set(second)):
            left = g.inverse_mask(first[x].bits)
            out[x] = g.product_mask(g.product_mask(left, second[x].bits), tail.bits)
        return out

    st = family(s_sl, t_sl, u0)  # S_x^-1 T_x U_0
    su = family(s_sl, u_sl, t0)  # S_x^-1 U_x T_0

    for label, fam in (("1", st), ("1'", su)):
        for x, coset in fam.items():
            p = (coset & -coset).bit_length() - 1
            is_coset = coset & ~hrec.bits == 0 and g.left_translate_mask(p, core) == coset
            trivial_ok = x == 0 or coset & core == 0
            checks.append(
                LemmaCheck(label, (x,), is_coset and trivial_ok, "" if is_coset else "not a coset of S0T0U0 in H")
            )

    def distinct(label: str, fam: dict[int, int]) -> None:
        keys = sorted(fam)
        for i, x in enumerate(keys):
            for y in keys[i + 1 :]:
                checks.append(LemmaCheck(label, (x, y), fam[x] != fam[y]))

    if report.u0_normal:
        distinct("2", st)
    if report.t0_normal:
        distinct("2'", su)
    for x in st:
        for y in su:
            if x != y:
                checks.append(LemmaCheck("3", (x, y), st[x] != su[y]))
    return report


# ---------------------------------------------------------------------------
# Theorem, corollary and conjecture harness


@dataclass(frozen=True)
class TheoremReport:
    group: str
    h: SubgroupRecord
    p: int
    bound: Fraction
    beta0: int
    rho0: Fraction
    holds: bool
    equality: bool
    equality_conditions_checked: dict

    def to_json_dict(self) -> dict:
        return {
            "group": self.group,
            "h_order": self.h.order,
            "h_elements": list(self.h.elements.indices()),
            "p": self.p,
            "bound": [self.bound.numerator, self.bound.denominator],
            "beta0": self.beta0,
            "rho0": [self.rho0.numerator, self.rho0.denominator],
            "holds": self.holds,
            "equality": self.equality,
            "equality_conditions": self.equality_conditions_checked,
        }


def _exact_beta0(g: GroupTable, report: SearchReport | None, subgroups) -> SearchReport:
    if report is None:
        report = beta0_exact(g, subgroups=subgroups)
    if report.mode != "subgroup_capacity":
        raise ValueError(f"expected a subgroup-capacity report, got mode {report.mode!r}")
    if not report.exhausted:
        raise SearchNotExhausted(f"{report.group}: subgroup capacity search did not finish")
    return report


def verify_theorem(
    g: GroupTable,
    beta0_report: SearchReport | None = None,
    subgroups: Sequence[SubgroupRecord] | None = None,
) -> list[TheoremReport]:
    """One report per abelian normal subgroup of prime index.

    Raises :class:`TheoremViolation` if any exact ``ρ0`` exceeds
    ``p^2/(2p-1)``, or if an equality case breaks the divisibility
    conditions that equality forces.
    """
    if subgroups is None:
        subgroups = enumerate_subgroups(g)
    pairs = find_abelian_normal_prime_index(g, subgroups)
    if not pairs:
        return []
    report = _exact_beta0(g, beta0_report, subgroups)
    rho0 = Fraction(report.capacity, g.order)
    out = []
    for h, p in pairs:
        bound = theorem_ratio_bound(p)
        holds = rho0 <= bound
        equality = rho0 == bound
        q = 2 * p - 1
        m = g.order // (p * q) if g.order % (p * q) == 0 else None
        conditions = {
            "divides_2p_minus_1": h.order % q == 0,
            "m": m,
            "m_divides_h": m is not None and h.order % m == 0,
            "m_less_than_h": m is not None and m < h.order,
        }
        tr = TheoremReport(report.group, h, p, bound, report.capacity, rho0, holds, equality, conditions)
        if not holds:
            raise TheoremViolation(
                f"{report.group}: rho0 = {rho0} exceeds p^2/(2p-1) = {bound} for H of order {h.order}, p = {p}"
            )
        if equality:
            log.warning("%s attains rho0 = p^2/(2p-1) = %s (H order %d, p = %d)", report.group, bound, h.order, p)
            if not (conditions["divides_2p_minus_1"] and conditions["m_divides_h"] and conditions["m_less_than_h"]):
                raise TheoremViolation(f"{report.group}: equality case without its divisibility conditions: {conditions}")
        out.append(tr)
    return out


@dataclass(frozen=True)
class CorollaryCheck:
    name: str
    p: int
    h_order: int
    claim: str
    ok: bool


@dataclass
class CorollaryReport:
    group: str
    rho0: Fraction
    checks: list[CorollaryCheck]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)


def _prime_power_base(n: int) -> int | None:
    for p in range(2, n + 1):
        if n % p == 0:
            while n % p == 0:
                n //= p
            return p if n == 1 else None
    return None


def verify_corollary(
    g: GroupTable,
    beta0_report: SearchReport | None = None,
    subgroups: Sequence[SubgroupRecord] | None = None,
) -> CorollaryReport:
    """Check ``ρ0 <= p/2`` when ``2p - 1`` does not divide ``|G|``, and
    ``ρ0 = 1`` for a p-group with an abelian subgroup of index p."""
    if subgroups is None:
        subgroups = enumerate_subgroups(g)
    pairs = find_abelian_normal_prime_index(g, subgroups)
    report = _exact_beta0(g, beta0_report, subgroups) if pairs else None
    rho0 = Fraction(report.capacity, g.order) if report else Fraction(0)
    base = _prime_power_base(g.order) if g.order > 1 else None
    checks = []
    for h, p in pairs:
        if g.order % (2 * p - 1) != 0:
            checks.append(CorollaryCheck("coprime", p, h.order, f"rho0 <= {p}/2", rho0 <= Fraction(p, 2)))
        if base == p:
            checks.append(CorollaryCheck("p_group", p, h.order, "rho0 == 1", rho0 == 1))
    out = CorollaryReport(report.group if report else g.describe(), rho0, checks)
    if not out.ok:
        bad = [c for c in checks if not c.ok]
        raise TheoremViolation(f"{out.group}: corollary check failed: {bad}")
    return out


SCAN_HEADER = (
    "group",
    "order",
    "h_order",
    "p",
    "bound_num",
    "bound_den",
    "beta0",
    "beta",
    "rho0_num",
    "rho0_den",
    "rho_num",
    "rho_den",
    "holds",
    "equality",
    "conjecture_status",
)


@dataclass(frozen=True)
class ScanRow:
    group: str
    order: int
    h_order: int
    p: int
    bound: Fraction
    beta0: int
    beta: int | None
    holds: bool
    equality: bool
    conjecture_status: str

    def as_csv(self) -> tuple:
        rho0 = Fraction(self.beta0, self.order)
        rho = None if self.beta is None else Fraction(self.beta, self.order)
        return (
            self.group,
            self.order,
            self.h_order,
            self.p,
            self.bound.numerator,
            self.bound.denominator,
            self.beta0,
            "" if self.beta is None else self.beta,
            rho0.numerator,
            rho0.denominator,
            "" if rho is None else rho.numerator,
            "" if rho is None else rho.denominator,
            str(self.holds).lower(),
            str(self.equality).lower(),
            self.conjecture_status,
        )


@dataclass
class ScanReport:
    rows: list[ScanRow] = field(default_factory=list)
    counterexamples: list[ScanRow] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)
    equality_cases: list[ScanRow] = field(default_factory=list)


def conjecture_scan(
    catalog: Iterable[CatalogEntry | GroupTable],
    max_order: int = 32,
    cfg: SearchConfig | None = None,
    beta_for_all: bool = True,
) -> ScanReport:
    """For each group with an abelian normal subgroup of prime index, record
    the theorem check and, when that subgroup is cyclic, whether
    ``ρ <= p^2/(2p-1)``. Violations are collected, never raised: the
    conjecture is open.

    ``beta_for_all`` also computes ``β`` for groups whose qualifying
    subgroups are all non-cyclic (shown for contrast, status ``n/a``).
    """
    cfg = cfg or SearchConfig(max_order=max(max_order, 32))
    scan = ScanReport()
    for item in catalog:
        g = item.table if isinstance(item, CatalogEntry) else item
        if g is None or g.order > max_order:
            continue
        subgroups = enumerate_subgroups(g)
        pairs = find_abelian_normal_prime_index(g, subgroups)
        if not pairs:
            continue
        b0 = beta0_exact(g, subgroups=subgroups)
        theorem = {(id(t.h)): t for t in verify_theorem(g, b0, subgroups)}
        cyclic = [is_cyclic_subgroup(g, h) for h, _ in pairs]
        beta_report = None
        if any(cyclic) or beta_for_all:
            beta_report = beta_exact(g, cfg)
            if not beta_report.exhausted:
                scan.skipped.append((g.describe(), "full capacity search hit its budget; inconclusive"))
                log.warning("%s: beta search truncated; conjecture status inconclusive", g.describe())
        beta = beta_report.capacity if beta_report and beta_report.exhausted else None
        for (h, p), is_cyc in zip(pairs, cyclic):
            bound = theorem_ratio_bound(p)
            if not is_cyc:
                status = "n/a"
            elif beta is None:
                status = "inconclusive"
            elif Fraction(beta, g.order) <= bound:
                status = "holds"
            else:
                status = "VIOLATED"
            t = theorem[id(h)]
            row = ScanRow(g.describe(), g.order, h.order, p, bound, b0.capacity, beta, t.holds, t.equality, status)
            scan.rows.append(row)
            if status == "VIOLATED":
                scan.counterexamples.append(row)
                log.warning("CONJECTURE COUNTEREXAMPLE: %s has rho = %d/%d > %s", g.describe(), beta, g.order, bound)
            if t.equality:
                scan.equality_cases.append(row)
    return scan
