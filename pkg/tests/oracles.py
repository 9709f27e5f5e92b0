"""Independent brute-force oracles.

These use only the raw multiplication and inverse tables, never the
package's set algebra or search code.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product

import numpy as np


def _popcount(arr: np.ndarray) -> np.ndarray:
    out = np.zeros(arr.shape, dtype=np.int64)
    x = arr.astype(np.uint64)
    while np.any(x):
        out += (x & np.uint64(1)).astype(np.int64)
        x = x >> np.uint64(1)
    return out


def identity_subsets(n: int) -> np.ndarray:
    """Every subset containing element 0, as uint64 bitmasks."""
    k = np.arange(1 << (n - 1), dtype=np.uint64)
    return (k << np.uint64(1)) | np.uint64(1)


def quotient_masks(mul, inv, masks: np.ndarray) -> np.ndarray:
    """``X X^-1`` for each mask, by brute force over element pairs."""
    n = len(mul)
    out = np.zeros_like(masks)
    member = [(masks >> np.uint64(a)) & np.uint64(1) for a in range(n)]
    for a, b in product(range(n), repeat=2):
        both = member[a] & member[b]
        out |= both * np.uint64(1 << mul[a][inv[b]])
    return out


def naive_beta(mul, inv) -> int:
    """Largest ``|S||T||U|`` over all triples of identity-containing subsets
    with ``X X^-1`` pairwise meeting only in 1 and ``Q(S) Q(T) ∩ Q(U) = {1}``.

    Every TPP triple has a right translate with the identity in each set, and
    right translation leaves ``X X^-1`` unchanged, so nothing is lost. The
    slot roles are rotated relative to the package's criterion on purpose.
    """
    n = len(mul)
    if n == 1:
        return 1
    masks = identity_subsets(n)
    q = quotient_masks(mul, inv, masks)
    sizes = _popcount(masks)
    one = np.uint64(1)
    best = n
    member = [((q >> np.uint64(x)) & one).astype(bool) for x in range(n)]
    for j in range(len(masks)):
        # rotated: pair (S, T) first, then U against Q(S)Q(T)
        qt = int(q[j])
        right = [0] * n  # Q(S) element x -> x * Q(T)
        for x in range(n):
            m = 0
            for y in range(n):
                if qt >> y & 1:
                    m |= 1 << mul[x][y]
            right[x] = m
        prod_masks = np.zeros_like(q)
        for x in range(n):
            prod_masks |= np.where(member[x], np.uint64(right[x]), np.uint64(0))
        ok_pair = (q & np.uint64(qt)) == one
        if not ok_pair.any():
            continue
        forb = prod_masks[ok_pair]
        s_sizes = sizes[ok_pair]
        fits = (forb[:, None] & q[None, :]) == one
        u_best = np.where(fits, sizes[None, :], 0).max(axis=1)
        cand = int((s_sizes * u_best).max()) * int(sizes[j])
        best = max(best, cand)
    return best


def closed_subsets(mul) -> list[int]:
    """All subsets containing 0 that are closed under multiplication."""
    n = len(mul)
    masks = identity_subsets(n)
    one = np.uint64(1)
    member = [(masks >> np.uint64(a)) & one for a in range(n)]
    ok = np.ones(masks.shape, dtype=bool)
    for a, b in product(range(n), repeat=2):
        ok &= ~((member[a] & member[b]).astype(bool)) | member[mul[a][b]].astype(bool)
    return sorted(int(m) for m in masks[ok])


def _set_product(mul, a: int, b: int) -> int:
    n = len(mul)
    out = 0
    for x in range(n):
        if a >> x & 1:
            for y in range(n):
                if b >> y & 1:
                    out |= 1 << mul[x][y]
    return out


def naive_beta0(mul) -> int:
    """Largest ``|S||T||U|`` over all ordered subgroup triples with
    ``S ∩ TU = T ∩ U = {1}``."""
    subs = closed_subsets(mul)
    best = 0
    for t in subs:
        for u in subs:
            if t & u != 1:
                continue
            tu = _set_product(mul, t, u)
            size_tu = bin(t).count("1") * bin(u).count("1")
            for s in subs:
                if s & tu == 1:
                    best = max(best, bin(s).count("1") * size_tu)
    return best


def is_normal_brute(mul, inv, mask: int) -> bool:
    n = len(mul)
    for g in range(n):
        for h in range(n):
            if mask >> h & 1 and not mask >> mul[mul[g][h]][inv[g]] & 1:
                return False
    return True


@lru_cache(maxsize=None)
def tpp_by_definition(mul, inv, s: tuple, t: tuple, u: tuple) -> bool:
    """Plain six-fold loop over the defining equation."""
    for s1, s2, t1, t2, u1, u2 in product(s, s, t, t, u, u):
        w = mul[mul[mul[mul[mul[s2][inv[s1]]][t2]][inv[t1]]][u2]][inv[u1]]
        if w == 0 and not (s1 == s2 and t1 == t2 and u1 == u2):
            return False
    return True
