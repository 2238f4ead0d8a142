"""Mean-field SDEs whose diffusion switches regime when P(X_t <= r(t)) crosses levels."""

from .coefficients import AlphaFamily, Band, CoefficientSet, beta_n, check_drift_ode, classify_band, classify_pair, eval_b
from .errors import (
    DomainError,
    DomainExit,
    ModeError,
    MonotonicityError,
    ProblemFileError,
    QuadratureError,
    RangeError,
    RegimeExhausted,
    RegimeSDEError,
    VerdictMismatch,
)
from .gaussian_law import LawCurve, phi_slope_sign
from .monte_carlo import simulate_exact, simulate_particles
from .pathology_lab import (
    LevelProblem,
    VerdictKind,
    classify_level,
    construct_branches,
    construct_delay_family,
    oscillation_probe,
)
from .problem import Levels, ProblemSpec, load_problem, problem_from_dict
from .regime_solver import (
    Schedule,
    ScheduleStatus,
    build_schedule,
    check_bijectivity,
    check_globality,
    find_crossing,
    levels_from_times,
    reindexed,
)
from .transform import forward, inverse, transform_reference

__version__ = "0.1.0"
