"""Stability and admissibility analysis for diagonal systems with a state delay.

Each mode obeys ``z'(t) = lam z(t - tau) + b u(t)``.
"""

from .admissibility import (
    FrequencyIntegral,
    ModeCertificate,
    SystemCertificate,
    frequency_integral,
    mode_bound,
    select_delta,
    system_certificate,
)
from .errors import (
    ConvergenceError,
    DelayAdmitError,
    DomainError,
    InfeasibleModeError,
    PoleError,
    SpecError,
)
from .quasipoly import (
    ModeParams,
    analyze_mode,
    char_roots,
    count_rhp_roots,
    critical_delay,
    crossing_direction,
    crossing_frequency,
    eval_charfun,
    in_lambda_region,
    spectral_abscissa,
)
from .resolvent import HistoryGrid, resolvent_a0_apply, resolvent_block_apply, resolvent_psi, trace_norm_sq_R21
from .simulate import (
    InputSignal,
    Trajectory,
    forcing_norm_empirical,
    fundamental_energy,
    fundamental_solution,
    state_norm,
    step_integrate,
)
from .systems import (
    ModeSpec,
    SystemSpec,
    TailRule,
    aggregate_norm,
    artificial_spec,
    dump_spec,
    heat_reciprocal_spec,
    load_spec,
    symbol_sampled_spec,
)

__version__ = "0.1.0"
