"""Mass-, energy- and momentum-conserving finite difference schemes for mKdV."""

from .grid import Grid, TwoLevelField
from .schemes import SchemeFamily, SchemeSpec, conservation_laws, jacobian, residual
from .solver import NewtonConfig, Trajectory, integrate, step
from .analysis import (ErrorReport, TwoSolitonParams, exact_breather, exact_two_soliton,
                       run_benchmark, sweep_lambda)

__version__ = "0.1.0"
