import numpy as np
import pytest

from multibeam.association import StreamAssociation, derive_sets, parse_association
from multibeam.beamforming import (InfeasibleAssociation, ZeroSolution, evaluate,
                                   scale_to_constraints, zf_design)
from multibeam.channel import ChannelSet, sample_channels
from multibeam.network import Topology, default_topology

NEAR = parse_association([[5], [6], [7]])
ALL_GBS = parse_association([[4, 7], [5, 8], [6]])


@pytest.fixture(scope="module")
def topo():
    return default_topology()


def channels_for(topo, seed, m=5):
    return sample_channels(topo, m=m, ref_gain_db=-60.0, rician_factor=5.0,
                           noise_psd_dbm_hz=-169.0, bandwidth_hz=1e7, seed=seed)


def manual_channels(h_rows, sigma2):
    return ChannelSet(h=np.asarray(h_rows, dtype=complex),
                      sigma2=np.asarray(sigma2, dtype=float),
                      ref_gain_db=0.0, rician_factor=0.0)


def two_cell_topology():
    """One occupied GBS with no backhaul, one available GBS."""
    return Topology(gbs_positions=np.array([[100.0, 0.0, 0.0], [0.0, 50.0, 0.0]]),
                    occupied=frozenset({1}), available=frozenset({2}),
                    backhaul={1: frozenset()},
                    uav_position=np.array([0.0, 0.0, 100.0]), cell_radius=200.0)


class TestZfDesign:
    def test_orthogonal_complement_two_antennas(self):
        topo = two_cell_topology()
        cs = manual_channels([[1.0, 0.0], [0.6 + 0.2j, 0.8]], [1e-13, 1e-13])
        assoc = StreamAssociation((frozenset({2}),))
        sol = zf_design(cs, topo, assoc, power_w=2.0)
        # the occupied channel e1 must be nulled, so w lies along e2
        assert abs(sol.w[0, 0]) < 1e-12
        assert np.sum(np.abs(sol.w) ** 2) == pytest.approx(2.0)

    def test_unconstrained_single_stream(self, topo):
        # single stream to the centre GBS: no nulling constraint binds, the
        # beam still reaches its target
        cs = channels_for(topo, seed=2, m=2)
        sol = zf_design(cs, topo, parse_association([[6]]), power_w=0.2)
        assert np.linalg.norm(sol.w[0]) > 0
        assert abs(np.vdot(cs.vector(6), sol.w[0])) > 0

    def test_nulled_directions_are_clean(self, topo):
        cs = channels_for(topo, seed=4)
        sol = zf_design(cs, topo, NEAR, power_w=0.2)
        sets = derive_sets(topo, NEAR)
        for j, group in enumerate(NEAR.groups):
            victims = [n2 for i, g in enumerate(NEAR.groups) if i != j for n2 in g]
            victims += sorted(sets.unreachable_occupied[j])
            for victim in victims:
                h = cs.vector(victim)
                leak = abs(np.vdot(h, sol.w[j]))
                assert leak <= 1e-9 * np.linalg.norm(h) * np.linalg.norm(sol.w[j])

    def test_residuals_and_decodability_50_seeds(self, topo):
        for seed in range(50):
            cs = channels_for(topo, seed=seed)
            sol = zf_design(cs, topo, NEAR, power_w=0.2)
            for j, group in enumerate(NEAR.groups):
                for n2 in group:
                    h = cs.vector(n2)
                    signal = abs(np.vdot(h, sol.w[j]))
                    assert signal > 1e-6 * np.linalg.norm(h) * np.linalg.norm(sol.w[j])

    def test_infeasible_association_raises(self, topo):
        cs = channels_for(topo, seed=0, m=2)
        with pytest.raises(InfeasibleAssociation):
            zf_design(cs, topo, NEAR, power_w=0.2)  # needs >= 4 antennas


class TestEvaluate:
    def test_single_stream_unit_snr(self):
        topo = two_cell_topology()
        # craft |h^H w|^2 = sigma^2 so the rate is exactly 1 bps/Hz
        sigma2 = 1e-12
        cs = manual_channels([[1.0, 0.0], [0.0, 1.0]], [sigma2, sigma2])
        w = np.array([[0.0, np.sqrt(sigma2)]], dtype=complex)
        ev = evaluate(cs, topo, StreamAssociation((frozenset({2}),)), w)
        assert ev.rates[0] == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_streams_no_cross_terms(self):
        topo = Topology(gbs_positions=np.array([[100.0, 0, 0], [0, 100.0, 0]]),
                        occupied=frozenset(), available=frozenset({1, 2}),
                        backhaul={}, uav_position=np.array([0.0, 0.0, 100.0]),
                        cell_radius=200.0)
        cs = manual_channels([[1.0, 0.0], [0.0, 1.0]], [1e-12, 1e-12])
        w = np.array([[1e-6, 0.0], [0.0, 1e-6]], dtype=complex)
        assoc = StreamAssociation((frozenset({1}), frozenset({2})))
        ev = evaluate(cs, topo, assoc, w)
        assert ev.sinr[0, 0] == pytest.approx(1e-12 / 1e-12, rel=1e-12)
        assert ev.sinr[1, 1] == pytest.approx(1.0, rel=1e-12)

    def test_empty_residual_sets_mean_zero_interference(self, topo):
        cs = channels_for(topo, seed=1)
        sol = zf_design(cs, topo, ALL_GBS, power_w=0.2)
        assert all(v == 0.0 for v in sol.residual_w.values())
        assert all(v > 0.0 for v in sol.naive_w.values())

    def test_homogeneous_in_scale(self, topo):
        cs = channels_for(topo, seed=6)
        sol = zf_design(cs, topo, NEAR, power_w=0.2)
        alpha = 0.37
        scaled = evaluate(cs, topo, NEAR, np.sqrt(alpha) * sol.w)
        base = evaluate(cs, topo, NEAR, sol.w)
        for n1, v in base.naive_w.items():
            assert scaled.naive_w[n1] == pytest.approx(alpha * v, rel=1e-9)
        # SINRs: signal and interference scale together, noise does not
        assert np.all(scaled.sinr <= base.sinr + 1e-12)


class TestScaleToConstraints:
    def test_within_margin_is_untouched(self, topo):
        cs = channels_for(topo, seed=3)
        sol = zf_design(cs, topo, NEAR, power_w=0.2)
        shrunk = evaluate(cs, topo, NEAR, np.sqrt(0.5) * sol.w)
        loose = scale_to_constraints(
            zf_design(cs, topo, NEAR, power_w=0.5 * 0.2), 0.2,
            {n1: 1.0 for n1 in topo.occupied}, cs, topo, NEAR)
        assert loose.total_power == pytest.approx(0.5 * 0.2, rel=1e-9)

    def test_power_overrun_scaled_back(self, topo):
        cs = channels_for(topo, seed=3)
        power = 0.2
        overdriven = zf_design(cs, topo, NEAR, power_w=2.0 * power)
        fixed = scale_to_constraints(overdriven, power,
                                     {n1: 1.0 for n1 in topo.occupied},
                                     cs, topo, NEAR)
        assert fixed.total_power == pytest.approx(0.99 * power, rel=1e-9)

    def test_interference_bound_drives_alpha(self, topo):
        from multibeam.beamforming import solution_from
        cs = channels_for(topo, seed=3)
        # matched-filter beams: no nulling, so the occupied GBSs see real
        # interference and the temperature bound drives the scale
        w = np.array([cs.vector(n2) / np.linalg.norm(cs.vector(n2))
                      * np.sqrt(0.2 / 3) for n2 in (5, 6, 7)])
        sol = solution_from(cs, topo, NEAR, w)
        tight = {n1: sol.residual_w[n1] * 0.25 if sol.residual_w[n1] > 0 else 1.0
                 for n1 in topo.occupied}
        fixed = scale_to_constraints(sol, 0.2, tight, cs, topo, NEAR)
        for n1, bound in tight.items():
            assert fixed.residual_w[n1] <= 0.99 * bound * (1 + 1e-9)
        # at least one bound is met with equality at the margin
        ratios = [fixed.residual_w[n1] / (0.99 * bound)
                  for n1, bound in tight.items() if sol.residual_w[n1] > 0]
        assert max(ratios) == pytest.approx(1.0, rel=1e-9)

    def test_zero_input_raises(self, topo):
        cs = channels_for(topo, seed=3)
        sol = zf_design(cs, topo, NEAR, power_w=0.2)
        zeroed = type(sol)(w=np.zeros_like(sol.w), rates=sol.rates, sinr=sol.sinr,
                           available_ids=sol.available_ids,
                           residual_w=sol.residual_w, naive_w=sol.naive_w)
        with pytest.raises(ZeroSolution):
            scale_to_constraints(zeroed, 0.2, {n1: 1.0 for n1 in topo.occupied},
                                 cs, topo, NEAR)
