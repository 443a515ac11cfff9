"""Simulator and verification harness for the two-dimensional radiating-gas
model on the half space with outflow boundary data."""
from .elliptic import EllipticBC, solve_divq_halfstrip
from .evolution import Perturbation, SimConfig, SimState, initialize, run, step
from .flux import FluxConfig
from .grid import Grid, ScalarField, VectorField, make_grid
from .io import __version__
from .stationary import EndpointStates, StationaryProfile, shoot_profile

__all__ = [
    "EllipticBC", "EndpointStates", "FluxConfig", "Grid", "Perturbation", "ScalarField",
    "SimConfig", "SimState", "StationaryProfile", "VectorField", "__version__", "initialize",
    "make_grid", "run", "shoot_profile", "solve_divq_halfstrip", "step",
]
