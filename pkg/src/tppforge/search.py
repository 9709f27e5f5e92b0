"""Exact TPP capacities by type-first branch and bound.

Full capacity searches enumerate candidate parameter types (a >= b >= c) in
decreasing size, drop types that fail the pair bound or cannot beat the
incumbent, and for each remaining type run a feasibility DFS over basic
triples (identity in all three sets):

* ``U`` is enumerated as ``{1} ∪ {u_1 < ... }``;
* ``T`` is a clique in the Cayley graph with connection set ``G \\ Q(U)``,
  which is exactly ``Q(T) ∩ Q(U) = {1}``;
* ``S`` is a clique in the Cayley graph whose forbidden connection set is
  ``Q(T)Q(U)`` together with its inverse.

``Q(T)Q(U)`` is grown as ``T`` grows, so a partial ``T`` is abandoned as soon
as too few elements remain available for ``S``.
"""

from __future__ import annotations

import logging
import multiprocessing as mp
import time
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .elements import ElementSet, iter_bits
from .errors import CapExceeded
from .groups import GroupTable, SubgroupRecord, enumerate_subgroups, find_abelian_normal_prime_index
from .tpp import TppTriple, neumann_capacity_bound, neumann_pair_bound_ok, quotient_mask

log = logging.getLogger(__name__)

DEFAULT_FULL_CAP = 32
MODES = ("subgroup_capacity", "full_capacity", "fixed_type")


@dataclass
class SearchConfig:
    mode: str = "full_capacity"
    type: tuple[int, int, int] | None = None
    node_budget: int | None = None
    time_budget: float | None = None
    thread_count: int = 1
    report_all_witness_types: bool = False
    max_order: int = DEFAULT_FULL_CAP

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown search mode {self.mode!r}")
        if self.mode == "fixed_type":
            if self.type is None or len(self.type) != 3 or min(self.type) < 1:
                raise ValueError("fixed_type mode needs a type of three positive integers")
            self.type = tuple(int(x) for x in self.type)
        for name in ("node_budget", "time_budget"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ValueError(f"{name} must be positive when given")
        if self.thread_count < 1:
            raise ValueError("thread_count must be >= 1")


@dataclass
class SearchReport:
    group: str
    order: int
    mode: str
    capacity: int
    ratio: Fraction
    witnesses: list[TppTriple]
    neumann_bound: int
    theorem_bound: Fraction | None
    nodes_explored: int
    elapsed: float
    exhausted: bool
    requested_type: tuple[int, int, int] | None = None
    types_refuted: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def found(self) -> bool:
        """For fixed-type runs: whether a triple of the requested type exists."""
        if self.requested_type is None:
            return bool(self.witnesses)
        return any(w.type == self.requested_type for w in self.witnesses)

    def to_json_dict(self) -> dict:
        payload = {
            "group": self.group,
            "order": self.order,
            "mode": self.mode,
            "capacity": self.capacity,
            "ratio": [self.ratio.numerator, self.ratio.denominator],
            "ratio_display": f"{float(self.ratio):.6f}",
            "witnesses": [dict(w.to_json_dict(), type=list(w.type), size=w.size) for w in self.witnesses],
            "neumann_bound": self.neumann_bound,
            "theorem_bound": None
            if self.theorem_bound is None
            else [self.theorem_bound.numerator, self.theorem_bound.denominator],
            "nodes_explored": self.nodes_explored,
            "elapsed_seconds": round(self.elapsed, 6),
            "exhausted": self.exhausted,
        }
        if self.requested_type is not None:
            payload["requested_type"] = list(self.requested_type)
            payload["found"] = self.found
        if self.types_refuted:
            payload["types_refuted"] = [list(t) for t in self.types_refuted]
        return payload


CSV_HEADER = ("group", "order", "mode", "capacity", "ratio_num", "ratio_den", "ratio_display", "exhausted", "nodes", "millis")


def csv_row(report: SearchReport) -> tuple:
    return (
        report.group,
        report.order,
        report.mode,
        report.capacity,
        report.ratio.numerator,
        report.ratio.denominator,
        f"{float(report.ratio):.6f}",
        str(report.exhausted).lower(),
        report.nodes_explored,
        int(round(report.elapsed * 1000)),
    )


def theorem_bound_for(g: GroupTable, subgroups: Sequence[SubgroupRecord] | None = None) -> Fraction | None:
    """Smallest ``p^2/(2p-1) * |G|`` over abelian normal subgroups of prime index."""
    pairs = find_abelian_normal_prime_index(g, subgroups)
    if not pairs:
        return None
    return min(Fraction(p * p, 2 * p - 1) * g.order for _, p in pairs)


def trivial_triple(g: GroupTable) -> TppTriple:
    return TppTriple(g.full_set(), g.identity_set(), g.identity_set())


# ---------------------------------------------------------------------------
# Budgets


class _Stop(Exception):
    """Raised inside the DFS when a budget binds or another worker wins."""


class _Budget:
    CHECK_EVERY = 2048

    def __init__(self, node_budget: int | None, deadline: float | None, shared=None, target: int = 0):
        self.node_budget = node_budget
        self.deadline = deadline
        self.nodes = 0
        self._next_check = self.CHECK_EVERY
        self.shared = shared  # (incumbent Value, nodes Value) in worker processes
        self.target = target
        self.truncated = False
        self._reported = 0

    def tick(self, k: int = 1) -> None:
        self.nodes += k
        if self.nodes >= self._next_check:
            self._next_check = self.nodes + self.CHECK_EVERY
            self.check()

    def check(self) -> None:
        total = self.nodes
        if self.shared is not None:
            incumbent, shared_nodes = self.shared
            with shared_nodes.get_lock():
                shared_nodes.value += self.nodes - self._reported
                total = shared_nodes.value
            self._reported = self.nodes
            if incumbent.value >= self.target:
                raise _Stop
        if self.node_budget is not None and total >= self.node_budget:
            self.truncated = True
            raise _Stop
        if self.deadline is not None and time.monotonic() >= self.deadline:
            self.truncated = True
            raise _Stop


# ---------------------------------------------------------------------------
# Type feasibility DFS


class _TypeSearcher:
    """Feasibility search for a basic TPP triple of a given sorted type."""

    def __init__(self, g: GroupTable):
        self.g = g
        n = self.n = g.order
        self.full = (1 << n) - 1
        self.nonid = self.full & ~1
        self.above = [self.full & ~((1 << (x + 1)) - 1) for x in range(n)]
        self.div = g.div
        self._np_mul = np.asarray(g.mul, dtype=np.int64) if n <= 64 else None
        self._np_mul_t = self._np_mul.T.copy() if self._np_mul is not None else None

    def branches(self, a: int, b: int, c: int) -> list[int | None]:
        """Top-level branches: the first non-identity element of ``U``."""
        if c >= 2:
            return list(range(1, self.n))
        return [None]

    def _translates(self, qu: int) -> tuple[list[int], list[int]]:
        """``(RQ, LQ)`` with ``RQ[x] = Q(U) x`` and ``LQ[q] = q Q(U) ∪ Q(U) q^-1``."""
        idx = list(iter_bits(qu))
        inv = self.g.inv
        if self._np_mul is not None:
            one = np.uint64(1)
            rq = np.bitwise_or.reduce(one << self._np_mul[idx, :].astype(np.uint64), axis=0).tolist()
            lq_left = np.bitwise_or.reduce(one << self._np_mul_t[idx, :].astype(np.uint64), axis=0).tolist()
        else:
            mul = self.g.mul
            rq = [sum(1 << mul[q][x] for q in idx) for x in range(self.n)]
            lq_left = [sum(1 << mul[x][q] for q in idx) for x in range(self.n)]
        lq = [lq_left[q] | rq[inv[q]] for q in range(self.n)]
        return rq, lq

    def search(self, a: int, b: int, c: int, branch: int | None, budget: _Budget):
        """Return ``(S, T, U)`` index lists of type ``(a, b, c)`` or None."""
        assert a >= b >= c >= 1
        n = self.n
        if a > n:
            return None
        if c == 1:
            return self._with_u([0], a, b, c, budget)
        if branch is None:
            for u1 in range(1, n):
                found = self.search(a, b, c, u1, budget)
                if found:
                    return found
            return None
        above = self.above

        def grow_u(u: list[int], cand: int, need: int):
            budget.tick()
            if need == 0:
                return self._with_u(u, a, b, c, budget)
            while cand:
                if cand.bit_count() < need:
                    return None
                low = cand & -cand
                x = low.bit_length() - 1
                cand ^= low
                found = grow_u(u + [x], cand, need - 1)
                if found:
                    return found
            return None

        return grow_u([0, branch], above[branch], c - 2)

    def _with_u(self, u: list[int], a: int, b: int, c: int, budget: _Budget):
        g = self.g
        div = self.div
        nonid = self.nonid
        qu = quotient_mask(g, sum(1 << x for x in u))
        if (nonid & ~qu).bit_count() < max(a, b) - 1:
            return None
        rq, lq = self._translates(qu)
        cand_t = nonid & ~qu
        if b == c and c >= 2:
            cand_t &= self.above[u[1]]
        s_need = a - 1

        def grow_t(t: list[int], cand: int, qt: int, forbidden: int, need: int):
            budget.tick()
            if need == 0:
                return self._clique_s(t, forbidden, a, b, budget)
            while cand:
                if cand.bit_count() < need:
                    return None
                low = cand & -cand
                x = low.bit_length() - 1
                cand ^= low
                q2, f2 = qt, forbidden
                row = div[x]
                for y in t:
                    for q in (row[y], div[y][x]):
                        if not q2 >> q & 1:
                            q2 |= 1 << q
                            f2 |= lq[q]
                if (nonid & ~f2).bit_count() < s_need:
                    continue
                found = grow_t(t + [x], cand & ~rq[x], q2, f2, need - 1)
                if found:
                    return found
            return None

        found = grow_t([0], cand_t, 1, qu, b - 1)
        if found:
            s, t = found
            return s, t, u
        return None

    def _clique_s(self, t: list[int], forbidden: int, a: int, b: int, budget: _Budget):
        allowed = self.nonid & ~forbidden
        if a == b and b >= 2:
            allowed &= self.above[t[1]]
        div = self.div

        def grow(chosen: list[int], cand: int, need: int):
            budget.tick()
            if need == 0:
                return chosen
            while cand:
                if cand.bit_count() < need:
                    return None
                low = cand & -cand
                x = low.bit_length() - 1
                cand ^= low
                row = div[x]
                nxt = 0
                for y in iter_bits(cand):
                    if not forbidden >> row[y] & 1:
                        nxt |= 1 << y
                found = grow(chosen + [x], nxt, need - 1)
                if found:
                    return found
            return None

        s = grow([0], allowed, a - 1)
        if s is None:
            return None
        return s, t


# ---------------------------------------------------------------------------
# Worker pool plumbing

_WORKER: dict = {}


def _worker_init(g: GroupTable, incumbent, nodes) -> None:
    _WORKER["searcher"] = _TypeSearcher(g)
    _WORKER["shared"] = (incumbent, nodes)


def _worker_run(typ: tuple[int, int, int], branch, node_budget, deadline):
    budget = _Budget(node_budget, deadline, shared=_WORKER["shared"], target=typ[0] * typ[1] * typ[2])
    try:
        found = _WORKER["searcher"].search(*typ, branch, budget)
    except _Stop:
        found = None
    incumbent, shared_nodes = _WORKER["shared"]
    with shared_nodes.get_lock():
        shared_nodes.value += budget.nodes - budget._reported
    if budget.truncated:
        return None, budget.nodes, True
    if found:
        size = typ[0] * typ[1] * typ[2]
        with incumbent.get_lock():
            if incumbent.value < size:
                incumbent.value = size
    return found, budget.nodes, False


class _Runner:
    """Runs type feasibility searches serially or over a process pool."""

    def __init__(self, g: GroupTable, cfg: SearchConfig, start: float):
        self.g = g
        self.cfg = cfg
        self.deadline = None if cfg.time_budget is None else start + cfg.time_budget
        self.nodes = 0
        self.truncated = False
        self.searcher = _TypeSearcher(g)
        self.pool = None
        if cfg.thread_count > 1:
            ctx = mp.get_context("fork")
            self.incumbent = ctx.Value("q", 0)
            self.shared_nodes = ctx.Value("q", 0)
            self.pool = ProcessPoolExecutor(
                max_workers=cfg.thread_count,
                mp_context=ctx,
                initializer=_worker_init,
                initargs=(g, self.incumbent, self.shared_nodes),
            )

    def close(self) -> None:
        if self.pool is not None:
            self.pool.shutdown(cancel_futures=True)

    def find(self, typ: tuple[int, int, int]):
        """A triple of sorted type ``typ`` (index lists) or None.

        Sets ``self.truncated`` if a budget ended the search first.
        """
        if self.pool is None:
            remaining = None if self.cfg.node_budget is None else self.cfg.node_budget - self.nodes
            if remaining is not None and remaining <= 0:
                self.truncated = True
                return None
            budget = _Budget(remaining, self.deadline)
            try:
                found = self.searcher.search(*typ, None, budget)
            except _Stop:
                found = None
                self.truncated = True
            self.nodes += budget.nodes
            return found
        return self._find_parallel(typ)

    def _find_parallel(self, typ):
        size = typ[0] * typ[1] * typ[2]
        with self.incumbent.get_lock():
            self.incumbent.value = 0
        with self.shared_nodes.get_lock():
            self.shared_nodes.value = self.nodes
        futures = {
            self.pool.submit(_worker_run, typ, br, self.cfg.node_budget, self.deadline): br
            for br in self.searcher.branches(*typ)
        }
        results = {}
        pending = set(futures)
        while pending:
            done, pending = wait(pending, return_when=FIRST_COMPLETED)
            for fut in done:
                found, _nodes, truncated = fut.result()
                results[futures[fut]] = found
                if truncated:
                    self.truncated = True
            if any(results.values()) and self.incumbent.value >= size:
                for fut in pending:
                    fut.cancel()
                wait(pending)
                for fut in pending:
                    if not fut.cancelled():
                        results[futures[fut]] = fut.result()[0]
                break
        self.nodes = self.shared_nodes.value
        winners = [results[br] for br in sorted(results, key=lambda b: -1 if b is None else b) if results[br]]
        if winners:
            # a found triple makes any truncation in sibling branches moot
            self.truncated = False
            return winners[0]
        return None


def candidate_types(n: int, floor: int, ceiling: int) -> list[tuple[int, int, int]]:
    """Sorted types ``a >= b >= c >= 1`` with ``floor <= abc <= ceiling`` that
    pass the pair bound, largest size first."""
    out = []
    for a in range(1, n + 1):
        for b in range(1, a + 1):
            if a * b > ceiling:
                break
            for c in range(1, b + 1):
                size = a * b * c
                if size > ceiling:
                    break
                if size >= floor and neumann_pair_bound_ok((a, b, c), n):
                    out.append((a, b, c))
    out.sort(key=lambda t: (-t[0] * t[1] * t[2], tuple(-x for x in t)))
    return out


def _to_triple(g: GroupTable, found) -> TppTriple:
    s, t, u = found
    return TppTriple.from_indices(g, s, t, u)


# ---------------------------------------------------------------------------
# Public searches


def beta_exact(g: GroupTable, cfg: SearchConfig | None = None) -> SearchReport:
    """Exact TPP capacity of ``g`` (or best found when a budget binds)."""
    cfg = cfg or SearchConfig()
    if g.order > cfg.max_order:
        raise CapExceeded(f"full capacity search is capped at order {cfg.max_order}; group has order {g.order}")
    start = time.monotonic()
    n = g.order
    bound = neumann_capacity_bound(n)
    best = n
    witnesses = [trivial_triple(g)]
    refuted = []
    runner = _Runner(g, cfg, start)
    try:
        for typ in candidate_types(n, n, bound):
            size = typ[0] * typ[1] * typ[2]
            if size < best or (size == best and not cfg.report_all_witness_types):
                break
            if typ[1] == 1:
                continue  # (n, 1, 1) is the trivial triple; (a, b, 1) cannot exceed n
            found = runner.find(typ)
            if runner.truncated:
                break
            if found:
                triple = _to_triple(g, found)
                if size > best:
                    best, witnesses = size, [triple]
                else:
                    witnesses.append(triple)
                log.info("%s: found type %s", g.describe(), typ)
            else:
                refuted.append(typ)
    finally:
        runner.close()
    return SearchReport(
        group=g.describe(),
        order=n,
        mode="full_capacity",
        capacity=best,
        ratio=Fraction(best, n),
        witnesses=witnesses,
        neumann_bound=bound,
        theorem_bound=theorem_bound_for(g),
        nodes_explored=runner.nodes,
        elapsed=time.monotonic() - start,
        exhausted=not runner.truncated,
        types_refuted=refuted,
    )


def search_best_of_type(g: GroupTable, typ: Sequence[int], cfg: SearchConfig | None = None) -> SearchReport:
    """Find one TPP triple of exactly type ``typ`` or prove none exists."""
    typ = tuple(int(x) for x in typ)
    cfg = cfg or SearchConfig(mode="fixed_type", type=typ)
    if g.order > cfg.max_order:
        raise CapExceeded(f"type search is capped at order {cfg.max_order}; group has order {g.order}")
    start = time.monotonic()
    n = g.order
    order = sorted(range(3), key=lambda i: -typ[i])
    sorted_typ = tuple(typ[i] for i in order)
    witnesses: list[TppTriple] = []
    runner = _Runner(g, cfg, start)
    try:
        if neumann_pair_bound_ok(typ, n):
            found = runner.find(sorted_typ)
            if found:
                slots = [None, None, None]
                for pos, i in enumerate(order):
                    slots[i] = found[pos]
                witnesses.append(_to_triple(g, slots))
    finally:
        runner.close()
    size = typ[0] * typ[1] * typ[2]
    capacity = max(n, size) if witnesses else n
    return SearchReport(
        group=g.describe(),
        order=n,
        mode="fixed_type",
        capacity=capacity,
        ratio=Fraction(capacity, n),
        witnesses=witnesses,
        neumann_bound=neumann_capacity_bound(n),
        theorem_bound=theorem_bound_for(g),
        nodes_explored=runner.nodes,
        elapsed=time.monotonic() - start,
        exhausted=bool(witnesses) or not runner.truncated,
        requested_type=typ,
    )


def beta0_exact(
    g: GroupTable, cfg: SearchConfig | None = None, subgroups: Sequence[SubgroupRecord] | None = None
) -> SearchReport:
    """Exact subgroup TPP capacity: max ``|S||T||U|`` over subgroup triples
    with ``S ∩ TU = T ∩ U = {1}``, testing only ``|S| >= |T| >= |U|``."""
    cfg = cfg or SearchConfig(mode="subgroup_capacity")
    start = time.monotonic()
    if subgroups is None:
        subgroups = enumerate_subgroups(g)
    desc = sorted(subgroups, key=lambda h: (-h.order, h.elements.indices()))
    n = g.order
    best = n
    witnesses = [trivial_triple(g)]
    seen_types = {witnesses[0].type}
    nodes = 0
    for i, t in enumerate(desc):
        for u in desc[i:]:
            if t.bits & u.bits != 1:
                continue
            nodes += 1
            tu = t.order * u.order
            if desc[0].order * tu < best:
                continue
            prod = g.product_mask(t.bits, u.bits)
            for s in desc:
                if s.order < t.order:
                    break
                size = s.order * tu
                if size < best or (size == best and not cfg.report_all_witness_types):
                    break
                nodes += 1
                if s.bits & prod == 1:
                    triple = TppTriple(s.elements, t.elements, u.elements)
                    if size > best:
                        best, witnesses, seen_types = size, [triple], {triple.type}
                    elif triple.type not in seen_types:
                        witnesses.append(triple)
                        seen_types.add(triple.type)
                    break
    return SearchReport(
        group=g.describe(),
        order=n,
        mode="subgroup_capacity",
        capacity=best,
        ratio=Fraction(best, n),
        witnesses=witnesses,
        neumann_bound=neumann_capacity_bound(n),
        theorem_bound=theorem_bound_for(g, subgroups),
        nodes_explored=nodes,
        elapsed=time.monotonic() - start,
        exhausted=True,
    )


def run_search(g: GroupTable, cfg: SearchConfig) -> SearchReport:
    if cfg.mode == "subgroup_capacity":
        return beta0_exact(g, cfg)
    if cfg.mode == "fixed_type":
        return search_best_of_type(g, cfg.type, cfg)
    return beta_exact(g, cfg)
