import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multibeam.association import (StreamAssociation, derive_sets, dof_feasible,
                                   enumerate_feasible, full_cooperation_dof,
                                   max_dof, no_cooperation_dof, parse_association)
from multibeam.network import Topology, default_topology


@pytest.fixture(scope="module")
def topo():
    return default_topology()


NEAR = parse_association([[5], [6], [7]])
ALL_GBS = parse_association([[4, 7], [5, 8], [6]])


def random_topology(rng, n1, n2):
    """Random small instance: positions irrelevant for set algebra."""
    n = n1 + n2
    occupied = frozenset(range(1, n1 + 1))
    available = frozenset(range(n1 + 1, n + 1))
    backhaul = {}
    for i in occupied:
        k = rng.integers(0, n2 + 1)
        backhaul[i] = frozenset(rng.choice(sorted(available), size=k, replace=False).tolist())
    return Topology(gbs_positions=rng.uniform(-500, 500, size=(n, 3)),
                    occupied=occupied, available=available, backhaul=backhaul,
                    uav_position=np.array([0.0, 0.0, 100.0]), cell_radius=200.0)


def random_association(rng, available, max_streams):
    ids = sorted(available)
    j = int(rng.integers(1, max_streams + 1))
    labels = rng.integers(0, j + 1, size=len(ids))
    while len(set(labels) - {0}) < j:
        labels = rng.integers(0, j + 1, size=len(ids))
    groups = [frozenset(g for g, lab in zip(ids, labels) if lab == s + 1)
              for s in range(j)]
    return StreamAssociation(tuple(groups))


class TestStreamAssociation:
    def test_rejects_empty_group(self):
        with pytest.raises(ValueError):
            StreamAssociation((frozenset({4}), frozenset()))

    def test_rejects_overlap(self):
        with pytest.raises(ValueError):
            StreamAssociation((frozenset({4, 5}), frozenset({5})))

    def test_parse_literal(self):
        assoc = parse_association("[[4,7],[5,8],[6]]")
        assert assoc == ALL_GBS


class TestDerivedSets:
    def test_near_association(self, topo):
        sets = derive_sets(topo, NEAR)
        assert sets.residual_streams[1] == frozenset({2})   # stream 3 (0-based 2)
        assert sets.residual_streams[2] == frozenset()
        assert sets.residual_streams[3] == frozenset({0})

    def test_all_gbs_association(self, topo):
        sets = derive_sets(topo, ALL_GBS)
        assert all(not s for s in sets.residual_streams.values())

    def test_central_gbs_reaches_everyone(self, topo):
        sets = derive_sets(topo, parse_association([[6]]))
        assert sets.unreachable_occupied[0] == frozenset()

    def test_residual_matches_unreachable_transpose(self, topo):
        sets = derive_sets(topo, NEAR)
        for n1 in topo.occupied:
            for j in range(NEAR.n_streams):
                assert (j in sets.residual_streams[n1]) == (
                    n1 in sets.unreachable_occupied[j])


class TestDofFeasible:
    def test_single_stream_two_antennas(self, topo):
        assert dof_feasible(topo, 2, parse_association([[6]]))

    def test_two_streams_three_antennas(self, topo):
        assert dof_feasible(topo, 3, parse_association([[4, 6], [5, 7]]))

    def test_near_association_five_antennas(self, topo):
        # worst stream needs 1 occupied + 2 cross-stream nulls < 5
        assert dof_feasible(topo, 5, NEAR)

    def test_near_association_three_antennas(self, topo):
        assert not dof_feasible(topo, 3, NEAR)


class TestMaxDof:
    def test_reference_table(self, topo):
        expected = [1, 1, 2, 3, 3, 4, 5, 5]
        got = [max_dof(topo, m)[0] for m in range(1, 9)]
        assert got == expected

    def test_witness_is_feasible(self, topo):
        for m in range(1, 9):
            j, witness = max_dof(topo, m)
            assert witness.n_streams == j
            assert dof_feasible(topo, m, witness)

    def test_zero_when_nothing_feasible(self):
        # one antenna, isolated occupied GBS: every stream is blocked
        t = Topology(gbs_positions=np.zeros((2, 3)), occupied=frozenset({1}),
                     available=frozenset({2}), backhaul={1: frozenset()},
                     uav_position=np.array([0.0, 0.0, 100.0]), cell_radius=200.0)
        assert max_dof(t, 1) == (0, None)


class TestEnumerateFeasible:
    def test_contains_both_reference_associations(self, topo):
        found = enumerate_feasible(topo, 5, 3, cap=64)
        assert NEAR in found
        assert ALL_GBS in found

    def test_too_many_streams_is_empty(self, topo):
        assert enumerate_feasible(topo, 5, 6, cap=64) == []

    def test_single_antenna_single_stream(self, topo):
        found = enumerate_feasible(topo, 1, 1, cap=64)
        assert parse_association([[6]]) in found
        assert parse_association([[5, 7]]) in found

    def test_cap_respected_and_deterministic(self, topo):
        found = enumerate_feasible(topo, 5, 3, cap=5)
        assert len(found) == 5
        assert found == enumerate_feasible(topo, 5, 3, cap=5)


class TestClosedForms:
    def test_full_cooperation(self):
        assert full_cooperation_dof(4, 5) == 4
        assert full_cooperation_dof(8, 5) == 5

    def test_no_cooperation(self):
        assert no_cooperation_dof(5, 3, 5) == 2
        assert no_cooperation_dof(2, 3, 5) == 0
        assert no_cooperation_dof(10, 3, 5) == 5


class TestProperties:
    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_feasibility_monotone_in_stream_count(self, seed):
        rng = np.random.default_rng(seed)
        t = random_topology(rng, n1=int(rng.integers(1, 4)), n2=int(rng.integers(2, 5)))
        assoc = random_association(rng, t.available, max_streams=len(t.available))
        m = int(rng.integers(1, 5))
        if assoc.n_streams > 1 and dof_feasible(t, m, assoc):
            smaller = StreamAssociation(assoc.groups[:-1])
            assert dof_feasible(t, m, smaller)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_dof_ordering_across_cooperation_levels(self, seed):
        rng = np.random.default_rng(seed)
        n1 = int(rng.integers(1, 4))
        n2 = int(rng.integers(1, 5))
        t = random_topology(rng, n1=n1, n2=n2)
        m = int(rng.integers(1, 5))
        coop, _ = max_dof(t, m)
        assert (full_cooperation_dof(m, n2) >= coop
                >= no_cooperation_dof(m, n1, n2))
