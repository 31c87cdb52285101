"""Planar Ricker competition map under prediction-based control."""
from .model import (ControlBounds, ConstantSchedule, Equilibrium, ModelParams, ParameterError,
                    PlanarState, RuleSchedule, SequenceSchedule, Trajectory, equilibrium, pbc_image,
                    pbc_step, random_schedule, simulate, validate_params)
from .kernels import BACKENDS, DEFAULT_BACKEND
from .detectors import Outcome, classify_tail, converged_to, period_two
from .invariant import (Rect, check_invariance, check_nested_invariance, entrance_bound,
                        entry_thresholds, invariant_domain, lower_edges, upper_caps)
from .local import (Matrix2, NormKind, constant_control_verdict, equal_control_thresholds, jacobian,
                    local_thresholds, matrix_norm, variable_control_bounds)
from .lyapunov import (descent_floor, global_floors, lyapunov_increment, lyapunov_value, phi_psi)
from .stochastic import (NoiseSpec, StochasticControl, derive_seed, design_region,
                         equal_control_noise_interval, expected_log_norm, kolmogorov_ledger,
                         monte_carlo_convergence, noise_stream, simulate_stochastic)

__version__ = "0.1.0"
