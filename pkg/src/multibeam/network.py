"""Network geometry and connectivity.

A ``Topology`` holds the ground base station (GBS) positions, the
occupied/available split, the one-hop backhaul map from each occupied GBS
to the available GBSs it can receive forwarded data from, and the UAV
position.  ``default_topology`` builds the 8-cell reference layout used by
the shipped configs and experiments.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .units import dbm_to_watts

# --------------------------------------------------------------------------
# Reference 8-cell layout.
#
# Hexagonal cells of radius R (centre-to-vertex), so adjacent cell centres
# are sqrt(3)*R apart.  Cell 6 sits at the origin with the UAV directly
# overhead.  The three occupied cells 1-3 and the availables 5, 7 occupy
# alternating first-ring slots; availables 4 and 8 sit on the second ring.
# This is the unique ring assignment (up to rotation) for which the backhaul
# sets below coincide with geometric one-hop adjacency, and it is a
# consistent reuse-3 colouring: {1,2,3}, {4,6,8} and {5,7} are mutually
# non-adjacent groups.
#
# The whole grid is rotated by GRID_AZIMUTH_DEG about the vertical so that
# no two GBSs share the same steering angle relative to the UAV's linear
# antenna array (which lies along the x axis).
# --------------------------------------------------------------------------
PAPER_CELL_RADIUS_M = 200.0
PAPER_UAV_ALTITUDE_M = 100.0
GRID_AZIMUTH_DEG = 25.0

PAPER_OCCUPIED = (1, 2, 3)
PAPER_AVAILABLE = (4, 5, 6, 7, 8)
PAPER_BACKHAUL = {
    1: frozenset({4, 5, 6}),
    2: frozenset({5, 6, 7}),
    3: frozenset({6, 7, 8}),
}

# (ring radius in units of cell radius, azimuth in degrees before rotation)
_RING_SLOTS = {
    1: (np.sqrt(3.0), 60.0),
    2: (np.sqrt(3.0), 180.0),
    3: (np.sqrt(3.0), 300.0),
    4: (3.0, 90.0),
    5: (np.sqrt(3.0), 120.0),
    6: (0.0, 0.0),
    7: (np.sqrt(3.0), 240.0),
    8: (3.0, 270.0),
}


@dataclass(frozen=True)
class Topology:
    """Immutable network geometry.

    GBS ids are 1-based; ``gbs_positions[i]`` is the position of GBS i+1.
    ``backhaul[n1]`` is the set of available GBSs with a one-hop link to
    the occupied GBS n1.
    """

    gbs_positions: np.ndarray        # (N, 3) metres
    occupied: frozenset              # occupied GBS ids
    available: frozenset             # available GBS ids
    backhaul: dict                   # occupied id -> frozenset of available ids
    uav_position: np.ndarray         # (3,) metres
    cell_radius: float               # metres

    @property
    def n_gbs(self) -> int:
        return self.gbs_positions.shape[0]

    def position(self, gbs_id: int) -> np.ndarray:
        return self.gbs_positions[gbs_id - 1]

    def validate(self) -> list:
        """Return a list of invariant violations (empty when valid)."""
        problems = []
        n = self.n_gbs
        all_ids = set(range(1, n + 1))
        if set(self.occupied) | set(self.available) != all_ids:
            problems.append("occupied and available sets do not cover all GBS ids")
        overlap = set(self.occupied) & set(self.available)
        if overlap:
            problems.append(f"occupied/available sets overlap: {sorted(overlap)}")
        if set(self.backhaul) != set(self.occupied):
            problems.append("backhaul map keys do not match the occupied set")
        for n1, targets in self.backhaul.items():
            bad = set(targets) - set(self.available)
            if bad:
                problems.append(
                    f"backhaul target not available: GBS {n1} -> {sorted(bad)}"
                )
        if not np.all(np.isfinite(self.gbs_positions)):
            problems.append("non-finite GBS position")
        if not np.all(np.isfinite(self.uav_position)):
            problems.append("non-finite UAV position")
        if not self.cell_radius > 0:
            problems.append("cell_radius must be positive")
        return problems


def hex_ring_layout(cell_radius: float = PAPER_CELL_RADIUS_M,
                    azimuth_deg: float = GRID_AZIMUTH_DEG) -> np.ndarray:
    """GBS coordinates (8, 3) of the reference layout, z = 0 everywhere."""
    rot = np.deg2rad(azimuth_deg)
    pos = np.zeros((8, 3))
    for gbs_id, (radius_units, phi_deg) in _RING_SLOTS.items():
        r = radius_units * cell_radius
        phi = np.deg2rad(phi_deg) + rot
        pos[gbs_id - 1, 0] = r * np.cos(phi)
        pos[gbs_id - 1, 1] = r * np.sin(phi)
    return pos


def default_topology(cell_radius: float = PAPER_CELL_RADIUS_M,
                     uav_altitude: float = PAPER_UAV_ALTITUDE_M,
                     azimuth_deg: float = GRID_AZIMUTH_DEG) -> Topology:
    """The 8-cell reference scenario: occupied {1,2,3}, available {4..8},
    UAV hovering over the centre of cell 6."""
    positions = hex_ring_layout(cell_radius, azimuth_deg)
    uav = positions[6 - 1] + np.array([0.0, 0.0, uav_altitude])
    return Topology(
        gbs_positions=positions,
        occupied=frozenset(PAPER_OCCUPIED),
        available=frozenset(PAPER_AVAILABLE),
        backhaul=dict(PAPER_BACKHAUL),
        uav_position=uav,
        cell_radius=cell_radius,
    )


def distances(topology: Topology) -> np.ndarray:
    """Euclidean UAV-GBS distances in metres, index-aligned with GBS ids."""
    delta = topology.gbs_positions - topology.uav_position[None, :]
    return np.linalg.norm(delta, axis=1)


@dataclass(frozen=True)
class Scenario:
    """A topology plus the radio parameters of one experiment instance.

    Power quantities are stored in linear Watts; the dB/dBm forms live only
    in configs.  ``theta_w`` maps each occupied GBS to its maximum tolerable
    interference power.
    """

    topology: Topology
    ref_gain_db: float               # channel power gain at 1 m, dB
    rician_factor: float
    bandwidth_hz: float
    noise_psd_dbm_hz: float
    power_w: float                   # UAV transmit power budget
    theta_w: dict                    # occupied id -> Watts
    m_antennas: int
    seed: int = 0
    los_angles: str = "random"       # LoS arrival angles: random | geometric

    def __post_init__(self):
        if self.rician_factor < 0:
            raise ValueError("rician_factor must be >= 0")
        if self.m_antennas < 1:
            raise ValueError("m_antennas must be >= 1")
        if any(v < 0 for v in self.theta_w.values()):
            raise ValueError("interference temperatures must be >= 0 W")

    def with_theta_dbm(self, theta_dbm: float) -> "Scenario":
        theta = {n1: float(dbm_to_watts(theta_dbm)) for n1 in self.topology.occupied}
        return replace(self, theta_w=theta)

    def with_power_dbm(self, power_dbm: float) -> "Scenario":
        return replace(self, power_w=float(dbm_to_watts(power_dbm)))
