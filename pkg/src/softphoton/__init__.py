"""Solvable infrared models of soft-photon emission.

Exposes radiative-correction exponents, emission amplitudes in Coulomb and
Feynman-type gauges, and a truncated indefinite-metric Fock space used as a
brute-force oracle for the closed forms.
"""

from .core import (
    CutoffWindow,
    FormFactor,
    FourVelocity,
    ScatteringKinematics,
    on_shell_dot,
    transverse_project,
    transverse_projector,
    velocity_from_momentum,
)
from .fock import ModeGrid, TruncatedFockSpace
from .gauge import PhotonSmearing, gupta_residual, t_map
from .quadrature import CorrectionExponent, b_ir, gamma_cross, m_exponent
from .smatrix import (
    AmplitudeReport,
    GaugeComparison,
    RenormalizationLedger,
    emission_factor,
    full_amplitude,
    gauge_compare,
    renormalization_ledger,
    vacuum_amplitude,
)

__version__ = "0.1.0"

__all__ = [
    "AmplitudeReport",
    "CorrectionExponent",
    "CutoffWindow",
    "FormFactor",
    "FourVelocity",
    "GaugeComparison",
    "ModeGrid",
    "PhotonSmearing",
    "RenormalizationLedger",
    "ScatteringKinematics",
    "TruncatedFockSpace",
    "b_ir",
    "emission_factor",
    "full_amplitude",
    "gamma_cross",
    "gauge_compare",
    "gupta_residual",
    "m_exponent",
    "on_shell_dot",
    "renormalization_ledger",
    "t_map",
    "transverse_project",
    "transverse_projector",
    "vacuum_amplitude",
    "velocity_from_momentum",
    "__version__",
]
