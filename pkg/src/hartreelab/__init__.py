"""Pseudospectral simulator for the periodic Hartree flow on the 2D torus,
plus a numerical laboratory for its modified-energy almost-conservation
structure: threshold multipliers, resonance-decomposed correction
functionals, explicit derivative formulas, and exhaustive audits of the
identities and envelopes they rest on."""

from .dynamics import (
    BlowUpError,
    StepperConfig,
    evolve,
    linear_step,
    nonlinear_step,
    plane_wave_reference,
    strang_step,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    initial_data,
    load_config,
    run_equivalence_sweep,
    run_growth_experiment,
    run_nsweep,
    run_verification_suite,
)
from .iop import E1, ThetaParams, apply_D, dmvt_check, dmvt_sweep, theta
from .modified_energy import (
    BudgetExceededError,
    Classification,
    E2,
    M4Params,
    Quadruplet,
    ResonanceParams,
    beta0_for,
    classify_quadruplet,
    dE1_dt_direct,
    dE2_dt_terms,
    gamma4_identity_audit,
    lambda4,
    m4,
    m4_bound_audit,
    m6,
    resonance_for,
)
from .potential import Potential, convolve_potential, energy, make_potential
from .spectral import (
    EnergyReport,
    SpectralField,
    TorusGrid,
    analyze,
    make_grid,
    mass,
    sobolev_norm,
    synthesize,
)

__version__ = "0.1.0"
