"""Leading-order asymptotics of degenerate fiber integrals I(z) = int g(zf, x) dx,
with numerical validation against a brute-force integration oracle."""

from .errors import (ConvergenceError, DivergenceError, FiberAsymError,
                     InputError, UnsupportedCaseError, WrongCaseError)
from .germ import (Classification, Germ, classify, eval_fk, germ_from_json,
                   germ_to_json, tangential_gradient)
from .sphere import (CoareaDensity, SphereRule, build_rule, coarea_density,
                     coarea_derivative_at_zero, inverse_power_integral,
                     surface_area)
from .brackets import (BracketResult, SmoothFunction1D, Symbol, gamma,
                       canonical_constant, finite_part_bracket,
                       mellin_oscillatory, mellin_transform, t_power_bracket)
from .expansion import (ExpansionTerm, GeometryConfig, Prediction,
                        RadialAmplitude, bernstein_value, pole_schedule,
                        predict_leading, radial_expansion, regular_leading)
from .oracle import (FitResult, OracleSample, QuadConfig, fit_asymptotics,
                     integrate_fiber, sample_curve)
from .fixtures import FIXTURES, get_fixture, make_symbol

__version__ = "0.1.0"
