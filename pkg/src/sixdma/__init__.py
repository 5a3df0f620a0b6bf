"""Position and orientation optimization of movable antennas at coordinated APs."""
from .channel import AntennaPose, assemble, channel_coeff
from .kernels import BACKEND
from .scene import ScenarioConfig, generate_scenario, sample_link_paths
from .solver import SolverConfig, ao_solve, offline_solve

__all__ = ["AntennaPose", "assemble", "channel_coeff", "BACKEND", "ScenarioConfig",
           "generate_scenario", "sample_link_paths", "SolverConfig", "ao_solve",
           "offline_solve"]
__version__ = "0.1.0"
