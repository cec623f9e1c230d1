"""Truncated CG trust-region solver and polynomial laboratory."""

from ._tcglab import (
    JacobiRecurrence,
    NotWellDefined,
    NumericalBreakdown,
    Polynomial,
    Problem,
    SpectralMeasure,
    SplitSpectralMeasure,
    cg_objective,
    experiment_names,
    clustered_split,
    measure_from_matrix,
    phi_poly,
    pi_poly,
    problem,
    random_split,
    ritz_values,
    root_displacement_bound,
    run_experiment,
    sigma_system,
    solve_trs_exact,
    stieltjes,
    tcg,
    tr_minimize,
    uniform_start,
    varsigma_poly,
    verify_rho_identity,
    xi,
    zeta,
)

__version__ = "0.1.0"
