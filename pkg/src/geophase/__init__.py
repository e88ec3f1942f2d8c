"""Geometric phases of damped two-level systems: transport frames, Lindblad
integration in the lab and rotated frames, and closed-form comparisons."""
from .errors import ConfigError, GeophaseError
from .lindblad import DissipatorSet, Generator, Trajectory, integrate, lab_generator, rotated_generator
from .models import CollisionDensity, LaserModel, SpinModel, build_model, echo_protocol, parse_config
from .transport import HamiltonianPath, build_frame, holonomy, nonabelian_holonomy, pati_reference, solid_angle

__version__ = "0.1.0"

__all__ = [
    "CollisionDensity",
    "ConfigError",
    "DissipatorSet",
    "Generator",
    "GeophaseError",
    "HamiltonianPath",
    "LaserModel",
    "SpinModel",
    "Trajectory",
    "build_frame",
    "build_model",
    "echo_protocol",
    "holonomy",
    "integrate",
    "lab_generator",
    "nonabelian_holonomy",
    "parse_config",
    "pati_reference",
    "rotated_generator",
    "solid_angle",
]
