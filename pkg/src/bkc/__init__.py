"""Quench dynamics and entanglement analytics for the bosonic Kitaev chain.

Gaussian-state simulation of the open-boundary chain with hopping g + iw
and pairing iDelta, plus the closed-form long-time entanglement
predictions it is meant to be checked against: single-site and block
entropies, dephased-ensemble spectra, scaling collapse, and the
four-point consistency diagnostics.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    BkcError,
    ConfigError,
    CriticalFrameUndefined,
    DegenerateSpectrum,
    DomainError,
    MissingReference,
    NonConvergence,
    NotSymplectic,
    NumericalFailure,
    OverflowGuard,
)
from .gaussian import (
    vacuum,
    CovarianceMatrix,
    LocalDecomposition,
    apply_symplectic,
    entropy_kernel,
    local_decompose,
    single_site_nu,
    site_correlators,
    subsystem_entropy,
    subsystem_entropy_from_rows,
    symplectic_eigenvalues,
    symplectic_eigenvalues_from_rows,
    symplectic_form,
    symplectic_residual,
    thermal_entropy,
)
from .model import (
    ModelParams,
    PhaseRegime,
    SqueezingFrame,
    TightBindingSpectrum,
    bdg_matrices,
    classify_phase,
    dynamical_spectrum,
    squeezing_frame,
    tight_binding_spectrum,
    validate_frame,
)
from .dynamics import (
    AveragingProtocol,
    PageCurve,
    PropagationMode,
    Propagator,
    SiteProfiles,
    TimeAverageResult,
    build_propagator,
    evolve,
    fluctuation_ratio,
    lab_exponential_evolve,
    page_curve,
    profiles,
    series_fluctuation_ratio,
    time_averaged_entropy,
)
from .analytics import (
    CollapseResult,
    ContinuumParams,
    GgeSpectrum,
    avg_site_correlators,
    conserved_correlators,
    continuum_mode_nu,
    continuum_params,
    gge_entropy,
    gge_spectrum,
    nu_bar_squared,
    s1_prediction,
    scaling_collapse,
)
from .fourpoint import (
    FourPointReport,
    InitialMomentumCorrelators,
    SelectionSums,
    a_kernel,
    epsilon4,
    fourpoint_report,
    log_correction,
    momentum_correlators,
    selection_sums,
)

__all__ = [
    "__version__",
    "BkcError", "ConfigError", "CriticalFrameUndefined", "DegenerateSpectrum",
    "DomainError", "MissingReference", "NonConvergence", "NotSymplectic",
    "NumericalFailure", "OverflowGuard",
    "CovarianceMatrix", "LocalDecomposition", "apply_symplectic",
    "entropy_kernel", "local_decompose", "single_site_nu", "site_correlators",
    "subsystem_entropy", "subsystem_entropy_from_rows",
    "symplectic_eigenvalues", "symplectic_eigenvalues_from_rows",
    "symplectic_form", "symplectic_residual", "thermal_entropy",
    "vacuum",
    "ModelParams", "PhaseRegime", "SqueezingFrame", "TightBindingSpectrum",
    "bdg_matrices", "classify_phase", "dynamical_spectrum", "squeezing_frame",
    "tight_binding_spectrum", "validate_frame",
    "AveragingProtocol", "PageCurve", "PropagationMode", "Propagator",
    "SiteProfiles", "TimeAverageResult", "build_propagator", "evolve",
    "fluctuation_ratio", "lab_exponential_evolve", "page_curve", "profiles",
    "series_fluctuation_ratio", "time_averaged_entropy",
    "CollapseResult", "ContinuumParams", "GgeSpectrum", "avg_site_correlators",
    "conserved_correlators", "continuum_mode_nu", "continuum_params",
    "gge_entropy", "gge_spectrum", "nu_bar_squared", "s1_prediction",
    "scaling_collapse",
    "FourPointReport", "InitialMomentumCorrelators", "SelectionSums",
    "a_kernel", "epsilon4", "fourpoint_report", "log_correction",
    "momentum_correlators", "selection_sums",
]
