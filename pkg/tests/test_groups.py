import json
from math import gcd

import pytest

from oracles import closed_subsets, is_normal_brute
from tppforge.catalog import bundled_tables, group_from_text
from tppforge.elements import ElementSet, iter_bits, mask_of
from tppforge.errors import CapExceeded, InvalidAction, NotASubgroup, NotNormal, TableInvalid
from tppforge.groups import (
    GroupSpec,
    GroupTable,
    axiom_violation,
    build_group,
    coset_table,
    dump_table,
    enumerate_subgroups,
    find_abelian_normal_prime_index,
    is_cyclic_subgroup,
    load_table,
    subgroup_record,
    verify_group_axioms,
)


def rotations(g, n):
    return subgroup_record(g, range(n))


class TestElementSet:
    def test_bits_roundtrip(self):
        assert list(iter_bits(mask_of([0, 3, 5]))) == [0, 3, 5]

    def test_cardinality_and_ops(self):
        a = ElementSet.from_indices(6, [0, 1, 2])
        b = ElementSet.from_indices(6, [2, 3])
        assert len(a) == 3
        assert (a & b).indices() == (2,)
        assert (a | b).indices() == (0, 1, 2, 3)
        assert (a - b).indices() == (0, 1)
        assert ElementSet.empty(6).is_empty()
        assert len(ElementSet.full(6)) == 6

    def test_capacity_mismatch(self):
        with pytest.raises(ValueError):
            ElementSet.from_indices(4, [0]) & ElementSet.from_indices(5, [0])

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            ElementSet.from_indices(4, [4])


class TestBuild:
    def test_trivial_group(self):
        g = build_group(GroupSpec.cyclic(1))
        assert g.order == 1 and g.mul == ((0,),)

    def test_order21_nonabelian(self):
        g = build_group(GroupSpec.semidirect(7, 3, 2), check=True)
        assert g.order == 21 and not g.is_abelian

    def test_dihedral6_has_cyclic_normal_index2(self):
        g = build_group(GroupSpec.dihedral(6))
        assert g.order == 12
        subs = enumerate_subgroups(g)
        r = next(h for h in subs if h.elements.indices() == tuple(range(6)))
        assert r.is_normal and r.is_abelian and r.index == 2
        assert is_cyclic_subgroup(g, r)

    @pytest.mark.parametrize("n,m,k", [(7, 3, 3), (6, 2, 2), (5, 2, 2)])
    def test_invalid_actions(self, n, m, k):
        with pytest.raises(InvalidAction):
            build_group(GroupSpec.semidirect(n, m, k))

    @pytest.mark.parametrize(
        "spec", ["cyclic:5", "dihedral:4", "sd:7,3,2", "sd:8,2,3", "prod:dihedral:3*cyclic:2", "file:q8.json", "file:s4.json"]
    )
    def test_recipes_satisfy_axioms(self, spec):
        g = group_from_text(spec)
        assert verify_group_axioms(g)
        assert all(g.mul[0][x] == x == g.mul[x][0] for x in range(g.order))

    def test_semidirect_multiplication_rule(self):
        n, m, k = 7, 3, 2
        g = build_group(GroupSpec.semidirect(n, m, k))
        for (i, j), (i2, j2) in [((1, 0), (0, 1)), ((3, 2), (5, 1)), ((6, 1), (2, 2))]:
            got = g.mul[i * m + j][i2 * m + j2]
            assert got == ((i + i2 * k**j) % n) * m + (j + j2) % m

    def test_deterministic(self):
        assert build_group(GroupSpec.dihedral(5)) == build_group(GroupSpec.dihedral(5))

    def test_cap(self, monkeypatch):
        monkeypatch.setenv("TPPFORGE_MAX_ORDER", "10")
        with pytest.raises(CapExceeded):
            build_group(GroupSpec.cyclic(11))
        monkeypatch.setenv("TPPFORGE_MAX_ORDER", "300")
        assert build_group(GroupSpec.cyclic(300)).order == 300


class TestAxioms:
    def test_cyclic4_valid(self):
        assert verify_group_axioms(build_group(GroupSpec.cyclic(4)))

    def test_swapped_entry_breaks_axioms(self):
        g = build_group(GroupSpec.cyclic(4))
        rows = [list(r) for r in g.mul]
        rows[1][2], rows[1][3] = rows[1][3], rows[1][2]
        bad = GroupTable.from_rows(rows, check=False)
        assert not verify_group_axioms(bad)

    def test_non_associative_latin_square(self):
        # a loop of order 5 that is not a group
        rows = [[0, 1, 2, 3, 4], [1, 0, 3, 4, 2], [2, 4, 0, 1, 3], [3, 2, 4, 0, 1], [4, 3, 1, 2, 0]]
        bad = GroupTable.from_rows(rows, check=False)
        assert "associativ" in axiom_violation(bad)
        with pytest.raises(TableInvalid, match="associativ"):
            GroupTable.from_rows(rows)

    def test_identity_not_at_zero(self):
        rows = [[1, 0], [0, 1]]
        with pytest.raises(TableInvalid, match="identity"):
            GroupTable.from_rows(rows)

    def test_reingested_order21(self, tmp_path):
        g = build_group(GroupSpec.semidirect(7, 3, 2))
        path = tmp_path / "g21.json"
        dump_table(g, path)
        h = load_table(path)
        assert verify_group_axioms(h) and h.mul == g.mul


class TestFiles:
    @pytest.mark.parametrize("spec", ["dihedral:6", "sd:7,3,2", "prod:cyclic:4*cyclic:4", "file:g32_11.json"])
    def test_roundtrip(self, tmp_path, spec):
        g = group_from_text(spec)
        dump_table(g, tmp_path / "t.json")
        h = load_table(tmp_path / "t.json")
        assert verify_group_axioms(h)
        assert h.mul == g.mul and h.labels == g.labels

    def test_loader_names_axiom(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"order": 3, "mul": [[0, 1, 2], [1, 1, 0], [2, 0, 1]]}))
        with pytest.raises(TableInvalid, match="Latin|permutation"):
            load_table(path)

    def test_bundled_match_constructions(self):
        for name, table in bundled_tables().items():
            stored = group_from_text(f"file:{name}.json")
            assert stored.mul == table.mul, name

    def test_bundled_ids(self):
        assert "[32,11]" in group_from_text("file:g32_11.json").describe()
        assert "[32,27]" in group_from_text("file:g32_27.json").describe()


class TestSubgroups:
    @pytest.mark.parametrize(
        "spec",
        ["cyclic:1", "cyclic:6", "dihedral:3", "dihedral:4", "file:q8.json", "prod:cyclic:2*prod:cyclic:2*cyclic:2",
         "file:a4.json", "dihedral:6", "sd:3,4,2", "prod:cyclic:4*cyclic:4", "file:q16.json"],
    )
    def test_against_closed_subsets(self, spec):
        g = group_from_text(spec)
        subs = enumerate_subgroups(g)
        assert sorted(h.bits for h in subs) == closed_subsets(g.mul)
        for h in subs:
            assert g.order % h.order == 0
            assert h.is_normal == is_normal_brute(g.mul, g.inv, h.bits)
            assert h.is_abelian == all(g.mul[a][b] == g.mul[b][a] for a in h.elements for b in h.elements)

    def test_cyclic6(self):
        subs = enumerate_subgroups(group_from_text("cyclic:6"))
        assert [h.order for h in subs] == [1, 2, 3, 6]
        assert all(h.is_normal and h.is_abelian for h in subs)

    def test_s3(self):
        subs = enumerate_subgroups(group_from_text("dihedral:3"))
        assert [h.order for h in subs] == [1, 2, 2, 2, 3, 6]
        assert [h.is_normal for h in subs] == [True, False, False, False, True, True]

    def test_sorted(self):
        subs = enumerate_subgroups(group_from_text("dihedral:4"))
        keys = [(h.order, h.elements.indices()) for h in subs]
        assert keys == sorted(keys)

    def test_cap(self):
        with pytest.raises(CapExceeded):
            enumerate_subgroups(group_from_text("cyclic:12"), cap=10)

    def test_not_a_subgroup(self):
        g = group_from_text("cyclic:6")
        with pytest.raises(NotASubgroup):
            subgroup_record(g, [0, 1])


class TestPrimeIndex:
    def test_dihedral6(self):
        g = group_from_text("dihedral:6")
        pairs = find_abelian_normal_prime_index(g)
        assert (tuple(range(6)), 2) in [(h.elements.indices(), p) for h, p in pairs]

    def test_order21(self):
        g = group_from_text("sd:7,3,2")
        pairs = find_abelian_normal_prime_index(g)
        assert [(h.order, p) for h, p in pairs] == [(7, 3)]
        assert is_cyclic_subgroup(g, pairs[0][0])

    def test_trivial(self):
        assert find_abelian_normal_prime_index(group_from_text("cyclic:1")) == []

    def test_brute_force(self, small_catalog):
        for e in small_catalog:
            g = e.table
            expected = set()
            for m in closed_subsets(g.mul):
                k = bin(m).count("1")
                idx = g.order // k
                comm = all(g.mul[a][b] == g.mul[b][a] for a in iter_bits(m) for b in iter_bits(m))
                prime = idx > 1 and all(idx % d for d in range(2, idx))
                if comm and prime and is_normal_brute(g.mul, g.inv, m):
                    expected.add((m, idx))
            got = {(h.bits, p) for h, p in find_abelian_normal_prime_index(g)}
            assert got == expected, e.spec


class TestCosets:
    def test_dihedral4(self):
        g = group_from_text("dihedral:4")
        ct = coset_table(g, rotations(g, 4))
        assert ct.index == 2
        assert ct.cosets[0].indices() == (0, 1, 2, 3)
        assert ct.cosets[1].indices() == (4, 5, 6, 7)

    def test_whole_group(self):
        g = group_from_text("dihedral:4")
        assert coset_table(g, g.full_set()).index == 1

    def test_order21(self):
        g = group_from_text("sd:7,3,2")
        c7 = next(h for h in enumerate_subgroups(g) if h.order == 7)
        assert coset_table(g, c7).index == 3

    def test_partition_everywhere(self, catalog):
        for e in catalog:
            if e.order > 16:
                continue
            g = e.table
            for h in enumerate_subgroups(g):
                ct = coset_table(g, h)
                assert sum(len(c) for c in ct.cosets) == g.order
                assert all(len(c) == h.order for c in ct.cosets)
                assert ct.reps[0] == 0 and ct.cosets[0] == h.elements
                if h.is_normal:
                    assert verify_group_axioms(ct.quotient_table(g))

    def test_quotient_needs_normal(self):
        g = group_from_text("dihedral:3")
        h = subgroup_record(g, [0, 3])
        with pytest.raises(NotNormal):
            coset_table(g, h).quotient_table(g)

    def test_rejects_non_subgroup(self):
        g = group_from_text("cyclic:4")
        with pytest.raises(NotASubgroup):
            coset_table(g, g.element_set([0, 1]))


def test_gcd_rule_matches_validation():
    for n in range(2, 10):
        for m in range(1, 5):
            for k in range(1, n):
                spec = GroupSpec.semidirect(n, m, k)
                valid = gcd(k, n) == 1 and pow(k, m, n) == 1
                try:
                    spec.validate()
                    assert valid
                except InvalidAction:
                    assert not valid
