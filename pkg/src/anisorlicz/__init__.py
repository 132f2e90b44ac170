"""Convex minorants, gauges and condition certificates for anisotropic Φ-functions."""

from .phi_core import (INF, Affine, Ball, Box, Constant, DirectionalDoublePhase, DoublePhase,
                       FrozenSpatial, FunctionPhi, HolderBump, LinftyIndicator, MinOf,
                       PhiFunction, PowerNorm, ProbeSpec, QuadraticForm, Sampler,
                       SpatialPhiFunction, Tabulated, VariableDoublePhase, VectorField,
                       ball_measure, check_strong_phi, luxemburg_norm, modular, phi_minus,
                       phi_plus)
from .envelope import (GaugeSet, GridFunction, MultiscaleEnvelope, build_minorant_pair,
                       convex_minorant_grid, minkowski_gauge)
from .oracle import almost_convex_bruteforce, caratheodory_envelope, norm_dense_scan
from .conditions import (ConditionCertificate, ConditionConfig, a1_implies_m_chain,
                         certify_equivalence_conv, check_A0, check_A0_inheritance, check_A1, check_almost_convex,
                         check_azero_reduction, check_inc1, check_M, jensen_almost_convex,
                         jensen_check)

__version__ = "0.1.0"
