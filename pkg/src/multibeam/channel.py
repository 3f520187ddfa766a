"""UAV-to-GBS channel synthesis.

Rician fading with a distance-squared path loss: the channel to GBS n is

    h_n = sqrt(tau0 / d_n^2) * (sqrt(k/(k+1)) * hhat_n + sqrt(1/(k+1)) * htilde_n)

where tau0 is the power gain at 1 m, k the Rician factor, hhat_n the
unit-norm line-of-sight steering vector and htilde_n a standard CSCG
vector.  The LoS component follows a half-wavelength uniform linear array
along the x axis of the UAV body frame.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .network import Topology, distances
from .units import db_to_linear


@dataclass(frozen=True)
class ChannelSet:
    """One realisation of all UAV-GBS channels.

    ``h[i]`` is the complex M-vector to GBS i+1 (linear amplitude);
    ``sigma2[i]`` the aggregate noise power at that GBS in Watts.
    """

    h: np.ndarray            # (N, M) complex
    sigma2: np.ndarray       # (N,) Watts
    ref_gain_db: float
    rician_factor: float

    @property
    def n_gbs(self) -> int:
        return self.h.shape[0]

    @property
    def m_antennas(self) -> int:
        return self.h.shape[1]

    def vector(self, gbs_id: int) -> np.ndarray:
        return self.h[gbs_id - 1]

    def noise(self, gbs_id: int) -> float:
        return float(self.sigma2[gbs_id - 1])


def los_steering(m: int, angle: float) -> np.ndarray:
    """Unit-norm steering vector of an M-element half-wavelength ULA.

    ``angle`` is measured between the array axis and the propagation
    direction, so the phase progression is pi*cos(angle) per element.
    """
    if m < 1:
        raise ValueError("antenna count must be >= 1")
    phases = np.pi * np.cos(angle) * np.arange(m)
    return np.exp(1j * phases) / np.sqrt(m)


def steering_angles(topology: Topology) -> np.ndarray:
    """Angle between the UAV array axis (x) and each UAV->GBS direction."""
    delta = topology.gbs_positions - topology.uav_position[None, :]
    d = np.linalg.norm(delta, axis=1)
    return np.arccos(np.clip(delta[:, 0] / d, -1.0, 1.0))


def noise_power(psd_dbm_hz: float, bandwidth_hz: float) -> float:
    """Watts of noise for a flat PSD in dBm/Hz over the given bandwidth."""
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    total_dbm = psd_dbm_hz + 10.0 * np.log10(bandwidth_hz)
    return float(10.0 ** (total_dbm / 10.0) / 1000.0)


def sample_channels(topology: Topology,
                    m: int,
                    ref_gain_db: float,
                    rician_factor: float,
                    noise_psd_dbm_hz: float,
                    bandwidth_hz: float,
                    seed: int,
                    los_angles: str = "random") -> ChannelSet:
    """Draw one channel realisation, deterministic in ``seed``.

    ``los_angles`` selects how the array sees each GBS: "random" draws an
    independent arrival angle per GBS and realisation (cos uniform on
    [-1, 1], the generic array response), "geometric" derives the angle
    from the UAV-GBS direction and the body-frame x axis.  Path loss
    always follows the geometry.  The scattered components are standard
    circularly-symmetric complex Gaussian vectors, independent across GBSs.
    """
    rng = np.random.default_rng(seed)
    n = topology.n_gbs
    d = distances(topology)
    if los_angles == "geometric":
        angles = steering_angles(topology)
    elif los_angles == "random":
        angles = np.arccos(rng.uniform(-1.0, 1.0, size=n))
    else:
        raise ValueError(f"unknown los_angles mode {los_angles!r}")
    tau0 = db_to_linear(ref_gain_db)
    k = rician_factor

    amp = np.sqrt(tau0 / d**2)
    los_w = np.sqrt(k / (k + 1.0))
    nlos_w = np.sqrt(1.0 / (k + 1.0))

    h = np.zeros((n, m), dtype=complex)
    for i in range(n):
        hhat = los_steering(m, angles[i])
        htilde = (rng.standard_normal(m) + 1j * rng.standard_normal(m)) / np.sqrt(2.0)
        h[i] = amp[i] * (los_w * hhat + nlos_w * htilde)

    sigma2 = np.full(n, noise_power(noise_psd_dbm_hz, bandwidth_hz))
    return ChannelSet(h=h, sigma2=sigma2,
                      ref_gain_db=ref_gain_db, rician_factor=rician_factor)


def sample_from_scenario(scenario, seed=None) -> ChannelSet:
    """Convenience wrapper drawing channels for a Scenario."""
    return sample_channels(
        scenario.topology,
        m=scenario.m_antennas,
        ref_gain_db=scenario.ref_gain_db,
        rician_factor=scenario.rician_factor,
        noise_psd_dbm_hz=scenario.noise_psd_dbm_hz,
        bandwidth_hz=scenario.bandwidth_hz,
        seed=scenario.seed if seed is None else seed,
        los_angles=getattr(scenario, "los_angles", "random"),
    )


def write_csv(channels: ChannelSet, path) -> None:
    """Dump channel coefficients as gbs_id, antenna_index, re, im rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gbs_id", "antenna_index", "re", "im"])
        for i in range(channels.n_gbs):
            for a in range(channels.m_antennas):
                c = channels.h[i, a]
                writer.writerow([i + 1, a, repr(float(c.real)), repr(float(c.imag))])
