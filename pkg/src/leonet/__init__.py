"""leonet: LEO constellation network simulation and geographic forwarding."""

from .constellation import (
    ConstellationConfig,
    Constellation,
    EciState,
    SatelliteId,
    TimeGrid,
    build_walker,
    max_phase_factor,
)
from .geometry import (
    EARTH_RADIUS_KM,
    EARTH_ROTATION_RAD_PER_S,
    SPEED_OF_LIGHT_KM_PER_S,
    GeodeticPoint,
    ecef_to_eci,
    eci_to_ecef,
    elevation_angle,
    geodesic_distance,
    geodetic_to_ecef,
    link_equator_angle,
)
from .harness import ExperimentResult, analyze_rows, run_experiment
from .metrics import (
    ReachabilityRecord,
    path_evolution,
    path_independence,
    reachable_probability,
    stretch,
)
from .routing import (
    ALGORITHMS,
    LocationTable,
    MplfHeader,
    Path,
    PathSet,
    bellman_ford,
    enumerate_paths,
    forward_cpi,
    forward_nfp,
    ler_encapsulate,
    trace_path,
)
from .scenario import Scenario, Trajectory, load_scenario
from .topology import (
    IslPattern,
    Link,
    Snapshot,
    Station,
    build_persistent_isls,
    detect_eisls,
    direction_histogram,
    snapshot,
)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "Constellation",
    "ConstellationConfig",
    "EARTH_RADIUS_KM",
    "EARTH_ROTATION_RAD_PER_S",
    "EciState",
    "ExperimentResult",
    "GeodeticPoint",
    "IslPattern",
    "Link",
    "LocationTable",
    "MplfHeader",
    "Path",
    "PathSet",
    "ReachabilityRecord",
    "SatelliteId",
    "Scenario",
    "Snapshot",
    "SPEED_OF_LIGHT_KM_PER_S",
    "Station",
    "TimeGrid",
    "Trajectory",
    "analyze_rows",
    "bellman_ford",
    "build_persistent_isls",
    "build_walker",
    "detect_eisls",
    "direction_histogram",
    "ecef_to_eci",
    "eci_to_ecef",
    "elevation_angle",
    "enumerate_paths",
    "forward_cpi",
    "forward_nfp",
    "geodesic_distance",
    "geodetic_to_ecef",
    "ler_encapsulate",
    "link_equator_angle",
    "load_scenario",
    "max_phase_factor",
    "path_evolution",
    "path_independence",
    "reachable_probability",
    "run_experiment",
    "snapshot",
    "stretch",
    "trace_path",
]
