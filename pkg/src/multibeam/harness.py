"""Experiment drivers: the DoF table, a single convergence trace, and the
interference-temperature / transmit-power sweeps against the benchmarks.

Every driver is deterministic given (config, seeds): channels come from
``numpy.random.default_rng`` keyed on the seed alone, grid points are
processed in order, and CSV numbers are formatted with ``repr`` so reruns
are byte-identical.
"""

import csv
import os
from dataclasses import replace

import numpy as np

from . import benchmarks
from .association import (StreamAssociation, max_dof, no_cooperation_dof,
                          full_cooperation_dof, parse_association)
from .channel import sample_from_scenario
from .config import ExperimentConfig
from .network import Scenario
from .sca import ScaConfig, constraint_violations, run_sca

# The two reference stream associations compared throughout the sweeps: one
# using all five available GBSs (every occupied GBS can cancel everything),
# one using only the three GBSs closest to the UAV.
ASSOC_ALL_GBS = parse_association([[4, 7], [5, 8], [6]])
ASSOC_NEAR_GBS = parse_association([[5], [6], [7]])


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_csv(path, header, rows) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


# ------------------------------------------------------------------ dof table
def run_dof_vs_m(scenario: Scenario, experiment: ExperimentConfig):
    """(M, cooperative DoF, CoMP DoF, cognitive DoF) over the M grid."""
    topo = scenario.topology
    n1, n2 = len(topo.occupied), len(topo.available)
    rows = []
    for m in experiment.m_grid:
        coop, _ = max_dof(topo, m)
        rows.append((m, coop, full_cooperation_dof(m, n2),
                     no_cooperation_dof(m, n1, n2)))
    return rows


# ---------------------------------------------------------------- convergence
def run_convergence(scenario: Scenario, experiment: ExperimentConfig,
                    sca_cfg: ScaConfig):
    """Single run on the pinned association; rows of
    (iteration, sum_rate_bps_hz, max_violation)."""
    assoc = experiment.associations[0] if experiment.associations else ASSOC_ALL_GBS
    channels = sample_from_scenario(scenario, seed=experiment.seeds[0])
    trace = run_sca(channels, scenario.topology, assoc,
                    scenario.power_w, scenario.theta_w, sca_cfg)
    rows = [(q, rate, viol) for q, (rate, viol)
            in enumerate(zip(trace.sum_rates, trace.max_violations))]
    return rows, trace


# --------------------------------------------------------------------- sweeps
def _coop_schemes(experiment):
    if experiment.associations:
        return list(experiment.associations)
    return [ASSOC_ALL_GBS, ASSOC_NEAR_GBS]


def _scheme_names(assocs):
    names = []
    for k, assoc in enumerate(assocs):
        names.append(f"coop_{'all_gbs' if assoc == ASSOC_ALL_GBS else 'near_gbs' if assoc == ASSOC_NEAR_GBS else chr(ord('a') + k)}")
    return names


def _sweep(scenario_for, grid, experiment, sca_cfg):
    """Shared sweep core: per grid value and seed, run every cooperative
    association plus the CoMP and cognitive benchmarks."""
    assocs = _coop_schemes(experiment)
    names = _scheme_names(assocs)
    per_point = []
    for value in grid:
        scen = scenario_for(value)
        samples = {name: [] for name in names}
        samples["coop_best"] = []
        samples["comp"] = []
        samples["cognitive"] = []
        for seed in experiment.seeds:
            channels = sample_from_scenario(scen, seed=seed)
            coop_rates = []
            for name, assoc in zip(names, assocs):
                trace = run_sca(channels, scen.topology, assoc,
                                scen.power_w, scen.theta_w, sca_cfg)
                samples[name].append(trace.final_sum_rate)
                coop_rates.append(trace.final_sum_rate)
            samples["coop_best"].append(max(coop_rates))
            samples["comp"].append(
                benchmarks.comp_capacity_for(scen, channels).capacity_bps_hz)
            cog = benchmarks.cognitive_beamforming(scen, sca_cfg, channels)
            samples["cognitive"].append(cog.final_sum_rate)
        per_point.append((value, samples))

    scheme_order = names + ["coop_best", "comp", "cognitive"]
    header = ["x"]
    for name in scheme_order:
        header += [f"{name}_mean", f"{name}_std"]
    rows = []
    for value, samples in per_point:
        row = [value]
        for name in scheme_order:
            data = np.asarray(samples[name])
            row += [float(np.mean(data)), float(np.std(data))]
        rows.append(tuple(row))
    return header, rows, per_point


def run_sweep_theta(scenario: Scenario, experiment: ExperimentConfig,
                    sca_cfg: ScaConfig):
    header, rows, per_point = _sweep(
        lambda theta_dbm: scenario.with_theta_dbm(theta_dbm),
        experiment.theta_grid_dbm, experiment, sca_cfg)
    header[0] = "theta_dbm"
    return header, rows, per_point


def run_sweep_power(scenario: Scenario, experiment: ExperimentConfig,
                    sca_cfg: ScaConfig):
    header, rows, per_point = _sweep(
        lambda power_dbm: scenario.with_power_dbm(power_dbm),
        experiment.power_grid_dbm, experiment, sca_cfg)
    header[0] = "power_dbm"
    return header, rows, per_point


# ------------------------------------------------------------------- optimize
def run_optimize(scenario: Scenario, experiment: ExperimentConfig,
                 sca_cfg: ScaConfig):
    """Full outer optimisation (association search + beams) on one scenario.

    Returns (best association, trace, per-association summary rows).
    """
    from .sca import optimize_scenario
    channels = sample_from_scenario(scenario, seed=experiment.seeds[0])
    if experiment.associations:
        traces = {}
        for assoc in experiment.associations:
            traces[assoc] = run_sca(channels, scenario.topology, assoc,
                                    scenario.power_w, scenario.theta_w, sca_cfg)
        best = max(traces, key=lambda a: traces[a].final_sum_rate)
        best_trace = traces[best]
    else:
        best, best_trace, traces = optimize_scenario(scenario, sca_cfg, channels)
    rows = [(str(a), t.final_sum_rate, t.converged, t.iterations)
            for a, t in traces.items()]
    return best, best_trace, rows


def solution_rows(trace):
    """Beamformer coefficients as (stream, antenna, re, im, rate_bps_hz)."""
    sol = trace.solution
    rows = []
    for j in range(sol.w.shape[0]):
        for a in range(sol.w.shape[1]):
            rows.append((j, a, float(sol.w[j, a].real), float(sol.w[j, a].imag),
                         float(sol.rates[j])))
    return rows


def load_solution_w(path, n_streams, m_antennas):
    """Rebuild the beamformer matrix from a solution CSV."""
    w = np.zeros((n_streams, m_antennas), dtype=complex)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            w[int(row["stream"]), int(row["antenna"])] = (
                float(row["re"]) + 1j * float(row["im"]))
    return w


def validate_solution(scenario: Scenario, assoc: StreamAssociation,
                      w: np.ndarray, seed: int) -> float:
    """Re-derive the constraint violation of a stored solution."""
    channels = sample_from_scenario(scenario, seed=seed)
    return constraint_violations(channels, scenario.topology, assoc, w,
                                 scenario.power_w, scenario.theta_w)
