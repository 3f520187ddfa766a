"""Multi-beam UAV uplink with cooperative interference cancellation.

A UAV with M antennas sends multiple data streams to "available" ground
base stations, which forward decoded streams over one-hop backhaul so that
"occupied" base stations can cancel the aerial interference.  The package
covers the achievable degrees of freedom of that strategy, zero-forcing
and successively-convexified beamforming under interference-temperature
constraints, and CoMP / cognitive-beamforming benchmarks.
"""

from .association import (StreamAssociation, derive_sets, dof_feasible,
                          enumerate_feasible, full_cooperation_dof, max_dof,
                          no_cooperation_dof, parse_association)
from .beamforming import (BeamformingSolution, InfeasibleAssociation,
                          ZeroSolution, evaluate, scale_to_constraints,
                          zf_design)
from .benchmarks import CompResult, cognitive_beamforming, comp_capacity, water_fill
from .channel import ChannelSet, los_steering, noise_power, sample_channels
from .config import ConfigError, ExperimentConfig, load_config
from .convex import NonPositiveAnchor, SolveReport, SubproblemSpec, rate_surrogate, solve
from .network import Scenario, Topology, default_topology, distances
from .sca import (NoFeasibleStream, ScaConfig, ScaTrace, init_anchors,
                  optimize_scenario, run_sca)

__version__ = "0.1.0"
