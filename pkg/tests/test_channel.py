import numpy as np
import pytest

from multibeam.channel import (los_steering, noise_power, sample_channels,
                               write_csv)
from multibeam.network import default_topology
from multibeam.numerics import rank
from multibeam.units import db_to_linear


@pytest.fixture(scope="module")
def topo():
    return default_topology()


def draw(topo, seed, m=5, ref_gain_db=-60.0, rician=5.0):
    return sample_channels(topo, m=m, ref_gain_db=ref_gain_db,
                           rician_factor=rician, noise_psd_dbm_hz=-169.0,
                           bandwidth_hz=1e7, seed=seed)


class TestLosSteering:
    def test_single_antenna(self):
        np.testing.assert_allclose(los_steering(1, 0.37), [1.0 + 0j])

    def test_broadside(self):
        vec = los_steering(2, np.pi / 2)
        np.testing.assert_allclose(vec, np.array([1.0, 1.0]) / np.sqrt(2), atol=1e-15)

    def test_endfire_four_elements(self):
        # phase advances by pi per element at angle 0
        vec = los_steering(4, 0.0)
        assert np.linalg.norm(vec) == pytest.approx(1.0)
        expected = np.exp(1j * np.pi * np.arange(4)) / 2.0
        np.testing.assert_allclose(vec, expected, atol=1e-15)


class TestNoisePower:
    def test_reference_bandwidth(self):
        # -169 dBm/Hz over 10 MHz = -99 dBm
        assert noise_power(-169.0, 1e7) == pytest.approx(1.2589254117941663e-13)

    def test_zero_dbm_one_hz(self):
        assert noise_power(0.0, 1.0) == pytest.approx(1e-3)

    def test_one_hz(self):
        assert noise_power(-169.0, 1.0) == pytest.approx(1.2589254117941662e-20)

    def test_rejects_nonpositive_bandwidth(self):
        with pytest.raises(ValueError):
            noise_power(-169.0, 0.0)


class TestSampleChannels:
    def test_pure_los_limit(self, topo):
        from multibeam.network import distances
        cs = draw(topo, seed=0, rician=1e12)
        norms = np.linalg.norm(cs.h, axis=1)
        expected = np.sqrt(db_to_linear(-60.0)) / distances(topo)
        np.testing.assert_allclose(norms, expected, rtol=1e-4)

    def test_rayleigh_mean_power(self, topo):
        # with no LoS, E||h||^2 = M * tau0 / d^2; Monte Carlo oracle
        from multibeam.network import distances
        m = 4
        draws = 10_000
        total = np.zeros(topo.n_gbs)
        for seed in range(draws):
            cs = draw(topo, seed=seed, m=m, rician=0.0)
            total += np.sum(np.abs(cs.h) ** 2, axis=1)
        mean = total / draws
        expected = m * db_to_linear(-60.0) / distances(topo) ** 2
        np.testing.assert_allclose(mean, expected, rtol=0.05)

    def test_deterministic_in_seed(self, topo):
        a = draw(topo, seed=123)
        b = draw(topo, seed=123)
        np.testing.assert_array_equal(a.h, b.h)
        np.testing.assert_array_equal(a.sigma2, b.sigma2)

    def test_scattered_power_share(self, topo):
        # the non-LoS part carries a 1/(k+1) share of M per unit path gain
        from multibeam.channel import steering_angles
        from multibeam.network import distances
        m, k = 4, 5.0
        d = distances(topo)
        angles = steering_angles(topo)
        tau0 = db_to_linear(-60.0)
        gbs = 4
        los = (np.sqrt(tau0 / d[gbs]**2) * np.sqrt(k / (k + 1))
               * los_steering(m, angles[gbs]))
        draws = 10_000
        acc = 0.0
        for seed in range(draws):
            cs = draw(topo, seed=seed, m=m, rician=k)
            acc += np.linalg.norm(cs.h[gbs] - los) ** 2
        share = (acc / draws) / (tau0 / d[gbs]**2 * m)
        assert share == pytest.approx(1.0 / (k + 1), rel=0.05)

    def test_linear_independence_100_seeds(self, topo):
        for seed in range(100):
            cs = draw(topo, seed=seed, m=5)
            assert rank(cs.h[:5].T, tol=1e-9) == 5


def test_channel_dump_roundtrip(tmp_path, topo):
    cs = draw(topo, seed=9, m=3)
    path = tmp_path / "channels.csv"
    write_csv(cs, path)
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "gbs_id,antenna_index,re,im"
    assert len(rows) == 1 + topo.n_gbs * 3
    first = rows[1].split(",")
    assert float(first[2]) == cs.h[0, 0].real
