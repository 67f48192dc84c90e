"""5G-aided RTK GNSS positioning: observation synthesis, float/fixed solvers, Monte Carlo harness."""

from .availability import AvailabilityResult, assess, availability_table, format_table
from .config import ExperimentConfig, load_config, parse_config
from .errors import (AlmanacParseError, AvailabilityError, ConfigError, DimensionError,
                     DivergenceError, DomainError, NumericalError, RankDeficiencyError,
                     Rtk5gError, ScenarioError)
from .hybrid import (HybridData, SolveReport, StateVector, extract_ambiguity_covariance,
                     joint_cost, joint_gradient, make_data, solve, solve_fixed_hybrid,
                     solve_float_hybrid)
from .ils import brute_force_ils, decorrelate, ltdl, search
from .observation import (NoiseConfig, Scenario, double_difference, generate_5g,
                          generate_raw)
from .rtk_core import conditional_solution, cost_decomposition, solve_float_rtk

__version__ = "0.1.0"
