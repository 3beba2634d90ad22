"""Generalized prime systems from prescribed density templates.

Build a template (a non-decreasing mass function on [1, oo)), discretize
it into a reproducible system of real "primes" whose counting function
tracks the template within an additive constant, then study the induced
number system: generated integers, Moebius and Liouville summatories,
zeta values, and the deviation of exponential sums from their continuous
counterparts.
"""

from .discretize import (
    ConstructionError,
    DiscreteCellLaw,
    Partition,
    PrimeSystem,
    build_partition,
    calibrate_density,
    cell_law,
    discretize,
    read_prime_system,
    sample_continuous_cell,
    sample_discrete_cell,
    write_prime_system,
    z1_estimate,
)
from .numsys import (
    GenInteger,
    N_count,
    L_sum,
    M_sum,
    Z_eval,
    Z_eval_report,
    ZetaValue,
    density_estimate,
    generate_integers,
    pi_count,
    riemann_pi,
    zeta_dirichlet,
    zeta_euler,
)
from .quadrature import QuadratureError
from .templates import (
    AtomicTemplate,
    GramSeriesTemplate,
    Li_eval,
    Li_template,
    LogTemplate,
    MixedTemplate,
    OscillatingTemplate,
    OscillationParams,
    Pi_c_eval,
    Template,
    TemplateError,
    check_admissible_grid,
    default_oscillation_params,
    grid_template,
    li_eval,
    li_template,
    log_template,
    pi_c_eval,
    resolve_template,
    scaled_log_grid,
    template_from_doc,
)
from .verify import (
    DeviationReport,
    RademacherSampler,
    UniformSampler,
    count_deviation,
    deviation_sweep,
    default_x_grid,
    envelope,
    exp_int,
    exp_sum,
    kolmogorov_check,
    mertens_identity_check,
    pi_Li_gap_check,
    pool_reports,
    solve_u0,
    tail_bound,
    wilson_lower,
)

__version__ = "0.1.0"
