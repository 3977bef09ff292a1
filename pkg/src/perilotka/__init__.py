"""Periodic two-prey / one-predator Lotka-Volterra dynamics with
Beddington-DeAngelis predation: simulation, periodic orbits, and checks of
the existence and stability hypotheses."""

from .coefficients import (
    CoefficientExpr, Harmonic, PeriodicCoefficient, SampledPeriodicFunction,
    check_positive, eval_at, hat_mean, maximum, sup_inf,
)
from .dynamics import (
    CoefficientSet, bd_response, boundary_field, full_field, full_jacobian,
    log_field, logistic_field,
)
from .exceptions import (
    ConfigError, DomainError, IntegrationError, OrbitError, PerilotkaError, QuadratureError,
)
from .integrator import IntegratorConfig, Trajectory, flow, integrate, sample
from .orbits import (
    PeriodicOrbit, find_orbit, logistic_closed_form, monodromy, period_balance, poincare,
)
from .analysis import (
    check_E26, check_E27, check_H2, check_thm2, dplusV_bound, existence_bounds,
    lyapunov_V, verify_attraction,
)
from .scenario import ScenarioConfig, preset

__version__ = "0.1.0"
