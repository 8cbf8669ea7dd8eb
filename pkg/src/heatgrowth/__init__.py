"""Heat flow for initial data with Gaussian-type growth.

Solutions of u_t = Laplace(u) are computed as kernel integrals against
Radon measures that may grow like exp(A|x|^2).  The package exposes:

* :mod:`heatgrowth.measures`  data families, weighted norms, growth index
* :mod:`heatgrowth.kernel`    pointwise values, derivatives, semigroup checks
* :mod:`heatgrowth.blowup`    maximal time and the regular set at that time
* :mod:`heatgrowth.longtime`  origin traces, oscillating data, rescaling
* :mod:`heatgrowth.trace`     series solutions with a prescribed u(0, t)
* :mod:`heatgrowth.cli`       manifest-driven command line
"""
from .errors import *  # noqa: F401,F403
from .quadrature import DEFAULT_CONFIG, QuadratureConfig
from .measures import (
    AnnulusSum,
    DiracComb,
    ExpQuadDensity,
    GridDensity,
    GrowthIndex,
    HalfSpacePiece,
    Measure,
    Modifier,
    Sum,
    constant,
    dirac,
    growth_index,
    meps_norm,
)
from .kernel import SolutionValue, evaluate, evaluate_derivative
from .blowup import ConvexSetSpec, HalfSpace, blowup_time, classify_point
from .longtime import build_oscillating_data, trace_at_origin
from .trace import build_trace_solution, eval_trace_solution

__version__ = "0.1.0"
