"""Reduced twist maps of the breathing-circle billiard and the Fermi-Ulam
model, Aubry-Mather minimizers, and quantitative converse-KAM criteria."""
from .billiard import ImpactEvent, ParticleState, cross_check, next_impact, reflect, simulate
from .converse_kam import (
    GraphSample, StripExtrema, ab_along_graph, a_low, a_up, criterion_scan, mather_bound_check,
    rigid_rotation_graph, strip_extrema,
)
from .genfunc import GeneratingFunction, Jet2, StripSpec, convergence_probe, h0_jet, hc_jet, verify_twist
from .profile import ClassReport, ProfileNorms, RadiusProfile, classify, compute_norms, compute_sigmas, evaluate
from .twist_map import CylinderState, ExtendedGF, Orbit, extend, forward_map, iterate_orbit, sigma_star
from .variational import Configuration, MatherProbe, mather_probe, minimize_periodic, rotation_number

__version__ = "0.1.0"
