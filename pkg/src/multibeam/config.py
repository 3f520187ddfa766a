"""Scenario / experiment / solver configuration files.

Configs are TOML with four sections: ``[scenario]`` (geometry and
connectivity), ``[channel]`` (fading and noise), ``[radio]`` (antennas,
power, interference temperatures, seed) and optional ``[experiment]`` /
``[solver]`` blocks.  Units at this boundary are dB, dBm and MHz; parsing
converts to linear Watts and Hz exactly once.  Unknown keys are errors.
"""

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from dataclasses import dataclass

import numpy as np

from .association import parse_association
from .network import Scenario, Topology, hex_ring_layout
from .sca import ScaConfig
from .units import dbm_to_watts

EXPERIMENT_KINDS = ("dof_vs_m", "convergence", "sweep_theta", "sweep_power", "single")

DEFAULT_THETA_GRID_DBM = [-90.0, -85.0, -80.0, -75.0, -70.0, -65.0, -60.0, -55.0]
DEFAULT_POWER_GRID_DBM = [5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0]
DEFAULT_M_GRID = [1, 2, 3, 4, 5, 6, 7, 8]
DEFAULT_SEED_COUNT = 50


class ConfigError(ValueError):
    """Config file is syntactically valid TOML but semantically wrong."""


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "single"
    theta_grid_dbm: tuple = tuple(DEFAULT_THETA_GRID_DBM)
    power_grid_dbm: tuple = tuple(DEFAULT_POWER_GRID_DBM)
    m_grid: tuple = tuple(DEFAULT_M_GRID)
    seeds: tuple = tuple(range(DEFAULT_SEED_COUNT))
    out_dir: str = "results"
    associations: tuple = ()         # optional association override(s)

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        for grid, name in ((self.theta_grid_dbm, "theta_grid_dbm"),
                           (self.power_grid_dbm, "power_grid_dbm"),
                           (self.m_grid, "m_grid"), (self.seeds, "seeds")):
            if len(grid) == 0:
                raise ConfigError(f"{name} must not be empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")


class _Section:
    """Strict accessor over one TOML table."""

    def __init__(self, name, table, raw_text):
        self.name = name
        self.table = dict(table)
        self.raw = raw_text
        self.seen = set()

    def _line_of(self, key) -> str:
        for i, line in enumerate(self.raw.splitlines(), start=1):
            stripped = line.strip()
            if stripped.startswith(f"{key}") and "=" in stripped:
                return f" (line {i})"
        return ""

    def require(self, key):
        if key not in self.table:
            raise ConfigError(f"missing required key '{self.name}.{key}'")
        self.seen.add(key)
        return self.table[key]

    def get(self, key, default):
        self.seen.add(key)
        return self.table.get(key, default)

    def finish(self):
        unknown = set(self.table) - self.seen
        if unknown:
            key = sorted(unknown)[0]
            raise ConfigError(
                f"unknown key '{self.name}.{key}'{self._line_of(key)}")


def _theta_map(occupied, raw):
    if isinstance(raw, dict):
        theta = {}
        for key, value in raw.items():
            theta[int(key)] = float(dbm_to_watts(float(value)))
        missing = set(occupied) - set(theta)
        if missing:
            raise ConfigError(f"missing theta_dbm entries for GBSs {sorted(missing)}")
        return theta
    return {n1: float(dbm_to_watts(float(raw))) for n1 in occupied}


def load_config(path):
    """Parse a config file into (Scenario, ExperimentConfig, ScaConfig)."""
    with open(path, "rb") as fh:
        raw_bytes = fh.read()
    raw_text = raw_bytes.decode("utf-8")
    try:
        data = tomllib.loads(raw_text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    known_sections = {"scenario", "channel", "radio", "experiment", "solver"}
    unknown = set(data) - known_sections
    if unknown:
        raise ConfigError(f"unknown section '[{sorted(unknown)[0]}]'")

    scen = _Section("scenario", data.get("scenario", {}), raw_text)
    chan = _Section("channel", data.get("channel", {}), raw_text)
    radio = _Section("radio", data.get("radio", {}), raw_text)
    exp = _Section("experiment", data.get("experiment", {}), raw_text)
    solver = _Section("solver", data.get("solver", {}), raw_text)

    cell_radius = float(scen.get("cell_radius_m", 200.0))
    altitude = float(scen.get("uav_altitude_m", 100.0))
    azimuth = float(scen.get("grid_azimuth_deg", 25.0))
    occupied = frozenset(int(x) for x in scen.require("occupied"))
    available = frozenset(int(x) for x in scen.require("available"))
    backhaul_raw = scen.require("backhaul")
    backhaul = {int(k): frozenset(int(x) for x in v) for k, v in backhaul_raw.items()}

    positions_raw = scen.get("gbs_positions_m", None)
    if positions_raw is not None:
        positions = np.asarray(positions_raw, dtype=float)
        uav = np.asarray(scen.require("uav_position_m"), dtype=float)
    else:
        positions = hex_ring_layout(cell_radius, azimuth)
        uav_raw = scen.get("uav_position_m", None)
        if uav_raw is not None:
            uav = np.asarray(uav_raw, dtype=float)
        else:
            uav = positions[6 - 1] + np.array([0.0, 0.0, altitude])
    scen.finish()

    topology = Topology(gbs_positions=positions, occupied=occupied,
                        available=available, backhaul=backhaul,
                        uav_position=uav, cell_radius=cell_radius)
    problems = topology.validate()
    if problems:
        raise ConfigError("; ".join(problems))

    ref_gain_db = float(chan.require("ref_gain_db"))
    rician = float(chan.require("rician_factor"))
    bandwidth_hz = float(chan.require("bandwidth_mhz")) * 1e6
    noise_psd = float(chan.require("noise_psd_dbm_hz"))
    los_angles = str(chan.get("los_angles", "random"))
    if los_angles not in ("random", "geometric"):
        raise ConfigError("channel.los_angles must be 'random' or 'geometric'")
    chan.finish()

    m_antennas = int(radio.require("antennas"))
    power_w = float(dbm_to_watts(float(radio.require("power_dbm"))))
    theta_w = _theta_map(sorted(occupied), radio.require("theta_dbm"))
    seed = int(radio.get("seed", 0))
    radio.finish()

    scenario = Scenario(topology=topology, ref_gain_db=ref_gain_db,
                        rician_factor=rician, bandwidth_hz=bandwidth_hz,
                        noise_psd_dbm_hz=noise_psd, power_w=power_w,
                        theta_w=theta_w, m_antennas=m_antennas, seed=seed,
                        los_angles=los_angles)

    seeds_raw = exp.get("seeds", DEFAULT_SEED_COUNT)
    if isinstance(seeds_raw, int):
        seeds = tuple(range(seeds_raw))
    else:
        seeds = tuple(int(s) for s in seeds_raw)
    assoc_raw = exp.get("associations", [])
    associations = tuple(parse_association(a) for a in assoc_raw)
    experiment = ExperimentConfig(
        kind=str(exp.get("kind", "single")),
        theta_grid_dbm=tuple(float(x) for x in exp.get("theta_grid_dbm",
                                                       DEFAULT_THETA_GRID_DBM)),
        power_grid_dbm=tuple(float(x) for x in exp.get("power_grid_dbm",
                                                       DEFAULT_POWER_GRID_DBM)),
        m_grid=tuple(int(x) for x in exp.get("m_grid", DEFAULT_M_GRID)),
        seeds=seeds,
        out_dir=str(exp.get("out_dir", "results")),
        associations=associations,
    )
    exp.finish()

    sca_cfg = ScaConfig(
        epsilon_bps_hz=float(solver.get("epsilon_bps_hz", 1e-3)),
        max_iterations=int(solver.get("max_iterations", 100)),
        rate_backoff=float(solver.get("rate_backoff", 0.99)),
        eta_margin=float(solver.get("eta_margin", 0.01)),
        association_cap=int(solver.get("association_cap", 64)),
    )
    solver.finish()

    return scenario, experiment, sca_cfg
