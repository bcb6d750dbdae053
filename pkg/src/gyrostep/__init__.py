"""Large-stepsize integrators for charged particles in strong magnetic fields."""

from .fields import (FieldModel, catalog, check_consistency, constant_field, cubic_field,
                     eval_total_A, eval_total_B, potential_for_linear_B1, tilted_field)
from .filters import (FilterPair, ResonanceError, boris_rotation_angle, filter_pair, hat,
                      projections, resonance_margin, rotation_about)
from .integrators import (BlowUpError, ConvergenceError, MethodKind, SolverParams,
                          StaggeredState, StartPolicy, integrate, prepare_start,
                          recover_velocity, step_boris, step_filtered, step_variational,
                          two_step_residual)
from .reference import ErrorReport, exact_constant_solution, global_error, reference_trajectory
from .trajectory import Trajectory

__version__ = "0.1.0"
