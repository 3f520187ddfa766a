"""Zero-forcing beamformer construction and analytic link evaluation.

``zf_design`` places each stream's beam in the null space of every channel
it must not reach (decoding GBSs of other streams, plus occupied GBSs that
cannot cancel it) and points it at the projected centroid of its own
multicast group.  ``evaluate`` computes SINRs, multicast rates and the
interference seen by the occupied GBSs, both after cooperative
cancellation and without it.
"""

from dataclasses import dataclass

import numpy as np

from . import numerics
from .association import StreamAssociation, derive_sets
from .channel import ChannelSet
from .network import Topology


class InfeasibleAssociation(RuntimeError):
    """A required null space is empty (rank-tolerance or feasibility issue)."""


class ZeroSolution(RuntimeError):
    """No nonzero beamformer can satisfy the requested constraints."""


@dataclass(frozen=True)
class Evaluation:
    """Analytic link metrics for a beamformer set.

    ``sinr[k, j]`` is the SINR of stream j at the k-th (sorted) available
    GBS; rates are the per-stream multicast rates in bps/Hz.  Interference
    dicts map occupied GBS id -> Watts: ``residual_w`` counts only the
    streams that GBS cannot cancel, ``naive_w`` counts all streams.
    """

    available_ids: tuple
    sinr: np.ndarray
    rates: np.ndarray
    residual_w: dict
    naive_w: dict


@dataclass(frozen=True)
class BeamformingSolution:
    """Beamformers plus their evaluated performance."""

    w: np.ndarray                 # (J, M) complex, amplitude in sqrt(Watts)
    rates: np.ndarray             # (J,) bps/Hz
    sinr: np.ndarray              # (|available|, J)
    available_ids: tuple
    residual_w: dict              # occupied id -> Watts after cancellation
    naive_w: dict                 # occupied id -> Watts without cancellation

    @property
    def sum_rate(self) -> float:
        return float(np.sum(self.rates))

    @property
    def total_power(self) -> float:
        return float(np.sum(np.abs(self.w) ** 2))


def nulled_channels(channels: ChannelSet, topology: Topology,
                    assoc: StreamAssociation, stream: int) -> np.ndarray:
    """Matrix whose columns are the channels stream ``stream`` must null."""
    sets = derive_sets(topology, assoc)
    ids = []
    for i, group in enumerate(assoc.groups):
        if i != stream:
            ids.extend(sorted(group))
    ids.extend(sorted(sets.unreachable_occupied[stream]))
    m = channels.m_antennas
    if not ids:
        return np.zeros((m, 0), dtype=complex)
    return np.column_stack([channels.vector(g) for g in ids])


def evaluate(channels: ChannelSet, topology: Topology,
             assoc: StreamAssociation, w: np.ndarray) -> Evaluation:
    """SINRs, multicast rates and occupied-GBS interference for ``w``."""
    w = np.asarray(w, dtype=complex)
    sets = derive_sets(topology, assoc)
    available_ids = tuple(sorted(topology.available))
    j_streams = assoc.n_streams

    # received power of stream j at available GBS n2
    p = np.zeros((len(available_ids), j_streams))
    for k, n2 in enumerate(available_ids):
        h = channels.vector(n2)
        for j in range(j_streams):
            p[k, j] = np.abs(np.vdot(h, w[j])) ** 2

    sinr = np.zeros_like(p)
    for k, n2 in enumerate(available_ids):
        noise = channels.noise(n2)
        total = np.sum(p[k])
        for j in range(j_streams):
            sinr[k, j] = p[k, j] / (total - p[k, j] + noise)

    rates = np.zeros(j_streams)
    for j, group in enumerate(assoc.groups):
        rows = [available_ids.index(n2) for n2 in sorted(group)]
        rates[j] = np.log2(1.0 + np.min(sinr[rows, j]))

    residual = {}
    naive = {}
    for n1 in sorted(topology.occupied):
        h = channels.vector(n1)
        per_stream = np.array([np.abs(np.vdot(h, w[j])) ** 2 for j in range(j_streams)])
        naive[n1] = float(np.sum(per_stream))
        keep = sorted(sets.residual_streams[n1])
        residual[n1] = float(np.sum(per_stream[keep])) if keep else 0.0

    return Evaluation(available_ids=available_ids, sinr=sinr, rates=rates,
                      residual_w=residual, naive_w=naive)


def solution_from(channels, topology, assoc, w) -> BeamformingSolution:
    ev = evaluate(channels, topology, assoc, w)
    return BeamformingSolution(w=w, rates=ev.rates, sinr=ev.sinr,
                               available_ids=ev.available_ids,
                               residual_w=ev.residual_w, naive_w=ev.naive_w)


def zf_design(channels: ChannelSet, topology: Topology,
              assoc: StreamAssociation, power_w: float,
              tol: float = numerics.DEFAULT_RANK_TOL) -> BeamformingSolution:
    """Zero-forcing beamformers with equal power split across streams.

    Within each stream's null space the direction is the projection of its
    multicast group's channel centroid, a heuristic that favours the
    minimum-SINR member without affecting the nulling guarantees.
    """
    j_streams = assoc.n_streams
    m = channels.m_antennas
    w = np.zeros((j_streams, m), dtype=complex)
    per_stream_power = power_w / j_streams

    for j, group in enumerate(assoc.groups):
        basis = numerics.null_space(nulled_channels(channels, topology, assoc, j), tol)
        if basis.shape[1] == 0:
            raise InfeasibleAssociation(
                f"stream {j} has no null space left with m={m} antennas"
            )
        centroid = np.mean([channels.vector(n2) for n2 in sorted(group)], axis=0)
        direction = basis @ (basis.conj().T @ centroid)
        norm = np.linalg.norm(direction)
        if norm < 1e-300:
            # centroid orthogonal to the null space: measure-zero event
            direction = basis[:, 0]
            norm = 1.0
        w[j] = np.sqrt(per_stream_power) * direction / norm

    return solution_from(channels, topology, assoc, w)


def scale_to_constraints(solution: BeamformingSolution,
                         power_w: float,
                         theta_w: dict,
                         channels: ChannelSet,
                         topology: Topology,
                         assoc: StreamAssociation,
                         margin: float = 0.99) -> BeamformingSolution:
    """Uniformly shrink all beams until power and interference sit at or
    below ``margin`` times their bounds; no-op (alpha = 1) if they already
    do.  Raises ZeroSolution when no positive scale works."""
    total_power = solution.total_power
    if total_power <= 0.0:
        raise ZeroSolution("all beamformers are zero")

    alpha_sq = min(1.0, margin * power_w / total_power)
    for n1, interference in solution.residual_w.items():
        bound = theta_w[n1]
        if interference <= 0.0:
            continue
        if bound <= 0.0:
            raise ZeroSolution(
                f"occupied GBS {n1} allows zero interference but receives "
                f"{interference:.3e} W; only the zero beamformer scales in"
            )
        alpha_sq = min(alpha_sq, margin * bound / interference)

    w = np.sqrt(alpha_sq) * solution.w
    return solution_from(channels, topology, assoc, w)
