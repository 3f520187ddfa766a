"""Benchmark schemes: full-cooperation CoMP capacity and cognitive
beamforming without backhaul cooperation.

CoMP turns the uplink into a point-to-point MIMO channel from the UAV's M
antennas to the available GBSs acting as one receiver; its capacity comes
from an SVD of the noise-whitened channel matrix plus water-filling.
Cognitive beamforming keeps every occupied GBS constrained (no forwarding
at all) and reuses the same surrogate iteration with the reduced stream
count that setting admits.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import numerics
from .association import StreamAssociation, no_cooperation_dof
from .channel import ChannelSet, sample_from_scenario
from .network import Scenario
from .sca import ScaConfig, ScaTrace, _zero_trace, run_sca


@dataclass(frozen=True)
class CompResult:
    capacity_bps_hz: float
    singular_values: np.ndarray      # of the whitened channel matrix
    power_allocation: np.ndarray     # per mode, Watts
    water_level: float


def water_fill(gains: np.ndarray, total_power: float):
    """Optimal power over parallel channels with unit noise.

    Maximises sum log2(1 + g_i p_i) under sum(p) = total_power, p >= 0.
    Returns (allocation, water level mu) with p_i = max(mu - 1/g_i, 0).
    """
    g = np.asarray(gains, dtype=float)
    if total_power <= 0:
        return np.zeros_like(g), 0.0
    order = np.argsort(-g)
    inv = np.full_like(g, np.inf)
    positive = g > 0
    inv[positive] = 1.0 / g[positive]
    inv_sorted = inv[order]

    n_active = int(np.count_nonzero(positive))
    mu = 0.0
    for k in range(n_active, 0, -1):
        mu = (total_power + np.sum(inv_sorted[:k])) / k
        if mu > inv_sorted[k - 1]:
            break
    p = np.maximum(mu - inv, 0.0)
    return p, float(mu)


def comp_capacity(h_available: np.ndarray, sigma2: np.ndarray,
                  power_w: float) -> CompResult:
    """Joint-decoding capacity over the available GBSs.

    ``h_available`` holds one channel vector per row; rows are whitened by
    their noise standard deviation before the SVD, so the water-filling
    runs against unit noise.
    """
    if power_w <= 0:
        empty = np.zeros(0)
        return CompResult(0.0, empty, empty, 0.0)
    h = np.asarray(h_available, dtype=complex)
    whitened = h.conj() / np.sqrt(np.asarray(sigma2, dtype=float))[:, None]
    s = numerics.svd(whitened).s
    p, mu = water_fill(s**2, power_w)
    capacity = float(np.sum(np.log2(1.0 + p * s**2)))
    return CompResult(capacity_bps_hz=capacity, singular_values=s,
                      power_allocation=p, water_level=mu)


def comp_capacity_for(scenario: Scenario, channels: ChannelSet) -> CompResult:
    ids = sorted(scenario.topology.available)
    h = np.array([channels.vector(n2) for n2 in ids])
    sig = np.array([channels.noise(n2) for n2 in ids])
    return comp_capacity(h, sig, scenario.power_w)


def cognitive_streams(channels: ChannelSet, topology, n_streams: int) -> StreamAssociation:
    """Pick the target GBSs for cognitive beamforming: the available GBSs
    with the strongest channel after projecting out all occupied channels.
    """
    occupied_cols = np.column_stack(
        [channels.vector(n1) for n1 in sorted(topology.occupied)]
    ) if topology.occupied else np.zeros((channels.m_antennas, 0), dtype=complex)
    basis = numerics.null_space(occupied_cols)
    gains = {}
    for n2 in sorted(topology.available):
        gains[n2] = float(np.linalg.norm(basis.conj().T @ channels.vector(n2)) ** 2)
    chosen = sorted(sorted(gains, key=gains.get, reverse=True)[:n_streams])
    return StreamAssociation(tuple(frozenset({n2}) for n2 in chosen))


def cognitive_beamforming(scenario: Scenario, cfg: ScaConfig = ScaConfig(),
                          channels: ChannelSet = None) -> ScaTrace:
    """Benchmark without backhaul forwarding: every occupied GBS keeps its
    interference-temperature constraint for every stream.

    Modelled by emptying the backhaul map, which makes all streams
    residual at every occupied GBS; the stream count is the no-cooperation
    DoF (zero streams yield a zero-rate trace).
    """
    topology = scenario.topology
    isolated = replace(topology,
                       backhaul={n1: frozenset() for n1 in topology.occupied})
    n1 = len(topology.occupied)
    n2 = len(topology.available)
    j_cog = no_cooperation_dof(scenario.m_antennas, n1, n2)
    if channels is None:
        channels = sample_from_scenario(scenario)
    if j_cog == 0:
        return _zero_trace(channels, isolated, StreamAssociation(()),
                           scenario.m_antennas)
    assoc = cognitive_streams(channels, topology, j_cog)
    return run_sca(channels, isolated, assoc, scenario.power_w,
                   scenario.theta_w, cfg)
