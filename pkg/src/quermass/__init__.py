"""Quermass germ-grain model: exact disk-union functionals, Gibbs sampling and percolation probes."""

from .geometry import (
    Configuration,
    DegenerateGeometry,
    FunctionalDelta,
    Functionals,
    MarkedPoint,
    boundary_arcs,
    delta_functionals,
    energy,
    energy_in,
    functionals,
    local_energy,
)
from .params import QuermassParams, RadiusLaw
from .percolation import DiamondGeometry, crossing, site_field, site_percolation_summary
from .sampler import Boundary, ChainState, ExplosionError, TraceRecord, propose_and_step, run_chain

__version__ = "0.1.0"

__all__ = [
    "Boundary", "ChainState", "DiamondGeometry", "Configuration", "DegenerateGeometry", "ExplosionError",
    "FunctionalDelta", "Functionals", "MarkedPoint", "QuermassParams", "RadiusLaw", "TraceRecord",
    "boundary_arcs", "crossing", "delta_functionals", "energy", "energy_in", "functionals", "local_energy",
    "propose_and_step", "run_chain", "site_field", "site_percolation_summary",
]
