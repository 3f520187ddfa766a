"""Successive convex approximation for finite-SNR sum-rate maximisation.

``run_sca`` starts from a scaled zero-forcing design and alternates between
solving the convex surrogate subproblem and re-anchoring the surrogate at
the new iterate.  The anchor choice makes the surrogate tight at the
current point, so each subproblem's optimum can only improve the sum rate;
iterates are additionally accepted only if they do not regress, which
keeps the trace monotone under inexact subproblem solves.

``optimize_scenario`` wraps the outer search: pick the DoF-optimal stream
count, then optimise the beams for up to a capped number of DoF-optimal
associations and keep the best.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from . import beamforming, convex, numerics
from .association import StreamAssociation, derive_sets, enumerate_feasible, max_dof
from .channel import ChannelSet, sample_from_scenario
from .network import Scenario, Topology


class NoFeasibleStream(RuntimeError):
    """Not even a single data stream is DoF-feasible for this scenario."""


@dataclass(frozen=True)
class ScaConfig:
    epsilon_bps_hz: float = 1e-3     # stop when the sum-rate gain drops below this
    max_iterations: int = 100
    rate_backoff: float = 0.99       # initial rates sit below capacity by this factor
    eta_margin: float = 0.01         # initial eta sits above interference+noise
    association_cap: int = 64

    def __post_init__(self):
        if self.epsilon_bps_hz <= 0:
            raise ValueError("epsilon_bps_hz must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class ScaTrace:
    """Per-iteration sum rates plus the final evaluated solution."""

    sum_rates: list
    solution: beamforming.BeamformingSolution
    converged: bool
    iterations: int
    max_violations: list = field(default_factory=list)

    @property
    def final_sum_rate(self) -> float:
        return self.sum_rates[-1] if self.sum_rates else 0.0


@dataclass
class InitPoint:
    """Strictly feasible starting point for the surrogate subproblem."""

    w: np.ndarray
    rates: np.ndarray
    etas_w: np.ndarray           # per decode pair, Watts
    anchor_a: np.ndarray
    anchor_b: np.ndarray
    anchor_c: np.ndarray


def _stream_bases(channels, topology, assoc, theta_w):
    """Per-stream null-space bases enforcing zero-temperature GBSs exactly.

    Returns (bases, alive) where dead streams (empty basis) are flagged.
    """
    sets = derive_sets(topology, assoc)
    m = channels.m_antennas
    bases, alive = [], []
    for j in range(assoc.n_streams):
        hard = [n1 for n1 in sorted(topology.occupied)
                if theta_w[n1] <= 0.0 and j in sets.residual_streams[n1]]
        if hard:
            cols = np.column_stack([channels.vector(n1) for n1 in hard])
            basis = numerics.null_space(cols)
        else:
            basis = np.eye(m, dtype=complex)
        bases.append(basis)
        alive.append(basis.shape[1] > 0)
    return bases, alive


def _positive_theta(topology, assoc, theta_w):
    """Temperature bounds that stay as barrier constraints (theta > 0)."""
    sets = derive_sets(topology, assoc)
    return {n1: theta_w[n1] for n1 in topology.occupied
            if theta_w[n1] > 0.0 and sets.residual_streams[n1]}


def init_anchors(channels: ChannelSet, topology: Topology,
                 assoc: StreamAssociation, power_w: float, theta_w: dict,
                 cfg: ScaConfig = ScaConfig()) -> InitPoint:
    """Feasible start: scaled ZF beams, backed-off rates, tight anchors."""
    zf = beamforming.zf_design(channels, topology, assoc, power_w)
    # Zero temperatures are enforced structurally (null-space bases), so they
    # place no scaling requirement here; the ZF design already nulls them.
    theta_eff = {n1: (theta_w[n1] if theta_w[n1] > 0 else np.inf)
                 for n1 in topology.occupied}
    start = beamforming.scale_to_constraints(zf, power_w, theta_eff,
                                             channels, topology, assoc)

    pairs = [(n2, j) for j, group in enumerate(assoc.groups) for n2 in sorted(group)]
    etas = np.zeros(len(pairs))
    a = np.zeros(len(pairs))
    b = np.zeros(len(pairs))
    signal = np.zeros(len(pairs))
    for p, (n2, j) in enumerate(pairs):
        h = channels.vector(n2)
        inner = np.vdot(h, start.w[j])
        a[p], b[p] = inner.real, inner.imag
        signal[p] = abs(inner) ** 2
        others = sum(abs(np.vdot(h, start.w[i])) ** 2
                     for i in range(assoc.n_streams) if i != j)
        etas[p] = (others + channels.noise(n2)) * (1.0 + cfg.eta_margin)

    rates = np.zeros(assoc.n_streams)
    for j in range(assoc.n_streams):
        rows = [p for p, (_, jj) in enumerate(pairs) if jj == j]
        sinr = np.min(signal[rows] / etas[rows])
        rates[j] = cfg.rate_backoff * np.log2(1.0 + sinr)

    stream_of = np.array([j for _, j in pairs])
    growth = 2.0 ** rates[stream_of]
    anchor_c = np.maximum(np.sqrt(np.maximum(growth - 1.0, 0.0) / etas), 1e-12)
    return InitPoint(w=start.w, rates=rates, etas_w=etas,
                     anchor_a=a, anchor_b=b, anchor_c=anchor_c)


def constraint_violations(channels, topology, assoc, w, power_w, theta_w,
                          rates=None) -> float:
    """Largest scaled violation of the power, temperature and rate
    constraints at a beamformer set (0 when feasible)."""
    ev = beamforming.evaluate(channels, topology, assoc, w)
    worst = (np.sum(np.abs(w) ** 2) - power_w) / power_w
    for n1, interference in ev.residual_w.items():
        bound = theta_w[n1]
        if bound > 0:
            worst = max(worst, (interference - bound) / bound)
        elif interference > 0:
            worst = max(worst, interference / channels.noise(n1))
    if rates is not None:
        for j in range(assoc.n_streams):
            worst = max(worst, (rates[j] - ev.rates[j]) / max(1.0, abs(rates[j])))
    return float(max(0.0, worst))


def _zero_trace(channels, topology, assoc, m) -> ScaTrace:
    w = np.zeros((assoc.n_streams, m), dtype=complex)
    solution = beamforming.solution_from(channels, topology, assoc, w)
    return ScaTrace(sum_rates=[0.0], solution=solution, converged=True,
                    iterations=0, max_violations=[0.0])


def run_sca(channels: ChannelSet, topology: Topology, assoc: StreamAssociation,
            power_w: float, theta_w: dict, cfg: ScaConfig = ScaConfig()) -> ScaTrace:
    """Alternate surrogate solves and anchor updates until the sum-rate
    gain per iteration drops below ``cfg.epsilon_bps_hz``.

    Zero interference temperatures are enforced exactly by restricting the
    affected streams to the corresponding channel null spaces; streams left
    with no free dimensions are dropped (rate zero).
    """
    bases, alive = _stream_bases(channels, topology, assoc, theta_w)
    if not any(alive):
        return _zero_trace(channels, topology, assoc, channels.m_antennas)

    survivors = [j for j in range(assoc.n_streams) if alive[j]]
    sub_assoc = StreamAssociation(tuple(assoc.groups[j] for j in survivors))
    sub_bases = [bases[j] for j in survivors]
    theta_pos = _positive_theta(topology, sub_assoc, theta_w)

    start = init_anchors(channels, topology, sub_assoc, power_w, theta_w, cfg)
    spec = convex.SubproblemSpec.build(channels, topology, sub_assoc, power_w,
                                       theta_pos, start.w, bases=sub_bases)
    x = spec.pack(start.w, start.rates, start.etas_w)
    # same tight anchors as InitPoint carries, in the spec's normalised units
    spec.set_anchors(*spec.anchors_at(x))

    def violation_at(xvec):
        w_sub, rates_sub, _ = spec.unpack(xvec)
        return constraint_violations(channels, topology, sub_assoc, w_sub,
                                     power_w, theta_w, rates_sub)

    trace = [float(np.sum(start.rates))]
    violations = [violation_at(x)]
    converged = False
    iterations = 0

    for _ in range(cfg.max_iterations):
        report = convex.solve(spec, x)
        iterations += 1
        if report.status == "infeasible_start":
            break
        if report.objective >= trace[-1]:
            x = report.x
            trace.append(report.objective)
        else:
            trace.append(trace[-1])  # inexact solve regressed; keep incumbent
        violations.append(violation_at(x))
        spec.set_anchors(*spec.anchors_at(x))
        if iterations >= 2 and trace[-1] - trace[-2] < cfg.epsilon_bps_hz:
            converged = True
            break

    w_sub, _, _ = spec.unpack(x)
    w_full = np.zeros((assoc.n_streams, channels.m_antennas), dtype=complex)
    for row, j in enumerate(survivors):
        w_full[j] = w_sub[row]
    solution = beamforming.solution_from(channels, topology, assoc, w_full)
    return ScaTrace(sum_rates=trace, solution=solution, converged=converged,
                    iterations=iterations, max_violations=violations)


def optimize_scenario(scenario: Scenario, cfg: ScaConfig = ScaConfig(),
                      channels: ChannelSet = None):
    """DoF-optimal association search plus beam optimisation.

    Returns (best_association, best_trace, all_traces) where ``all_traces``
    maps each evaluated association to its trace.
    """
    topology = scenario.topology
    j_star, _ = max_dof(topology, scenario.m_antennas)
    if j_star == 0:
        raise NoFeasibleStream(
            f"no stream is feasible with m={scenario.m_antennas} antennas")
    if channels is None:
        channels = sample_from_scenario(scenario)
    candidates = enumerate_feasible(topology, scenario.m_antennas, j_star,
                                    cap=cfg.association_cap)
    traces = {}
    for assoc in candidates:
        traces[assoc] = run_sca(channels, topology, assoc,
                                scenario.power_w, scenario.theta_w, cfg)
    best = max(traces, key=lambda a: traces[a].final_sum_rate)
    return best, traces[best], traces


# ----------------------------------------------------------------- KKT check
def kkt_residual(channels: ChannelSet, topology: Topology,
                 assoc: StreamAssociation, power_w: float, theta_w: dict,
                 w: np.ndarray, rates: np.ndarray,
                 active_tol: float = 1e-5) -> float:
    """Scaled stationarity residual of the original (non-convex) problem.

    Builds the gradients of the rate, temperature and power constraints at
    (w, rates), estimates nonnegative multipliers for the near-active ones
    by nonnegative least squares, and returns the normalised norm of the
    Lagrangian gradient.  Small values certify a KKT point.
    """
    sets = derive_sets(topology, assoc)
    j_streams = assoc.n_streams
    m = channels.m_antennas
    sqrt_p = np.sqrt(power_w)
    wbar = w / sqrt_p
    n = 2 * m * j_streams + j_streams

    def block(j):
        return slice(2 * m * j, 2 * m * (j + 1))

    def quad_grad(h, j, wj):
        # gradient of |h^H w_j|^2 wrt the real parametrisation of wbar_j
        q = sqrt_p * h
        inner = np.vdot(q, wj)
        v = np.concatenate([q.real, q.imag])
        u = np.concatenate([-q.imag, q.real])
        return 2.0 * (inner.real * v + inner.imag * u)

    grads, slacks = [], []

    for j, group in enumerate(assoc.groups):
        for n2 in sorted(group):
            h = channels.vector(n2)
            s_sig = abs(np.vdot(h, w[j])) ** 2
            s_int = sum(abs(np.vdot(h, w[i])) ** 2 for i in range(j_streams) if i != j)
            noise = channels.noise(n2)
            g = np.zeros(n)
            g[2 * m * j_streams + j] = 1.0
            for i in range(j_streams):
                gq = quad_grad(h, i, wbar[i])
                total = s_sig + s_int + noise
                g[block(i)] -= gq / (convex.LN2 * total)
                if i != j:
                    g[block(i)] += gq / (convex.LN2 * (s_int + noise))
            grads.append(g)
            slacks.append(np.log2(1.0 + s_sig / (s_int + noise)) - rates[j])

    for n1 in sorted(topology.occupied):
        streams = sorted(sets.residual_streams[n1])
        bound = theta_w[n1]
        if not streams or bound <= 0:
            continue
        h = channels.vector(n1)
        g = np.zeros(n)
        interference = 0.0
        for i in streams:
            g[block(i)] += quad_grad(h, i, wbar[i]) / bound
            interference += abs(np.vdot(h, w[i])) ** 2
        grads.append(g)
        slacks.append((bound - interference) / bound)

    g = np.zeros(n)
    for i in range(j_streams):
        g[block(i)] = 2.0 * np.concatenate([wbar[i].real, wbar[i].imag])
    grads.append(g)
    slacks.append((power_w - np.sum(np.abs(w) ** 2)) / power_w)

    for j in range(j_streams):
        g = np.zeros(n)
        g[2 * m * j_streams + j] = -1.0
        grads.append(g)
        slacks.append(rates[j])

    obj_grad = np.zeros(n)
    obj_grad[2 * m * j_streams:] = -1.0   # minimise -sum(rates)

    active = [k for k, s in enumerate(slacks) if s < active_tol]
    if not active:
        return float(np.linalg.norm(obj_grad))
    a_mat = np.column_stack([grads[k] for k in active])
    coeffs, _ = scipy.optimize.nnls(a_mat, -obj_grad)
    residual = np.linalg.norm(a_mat @ coeffs + obj_grad)
    return float(residual / np.linalg.norm(obj_grad))
