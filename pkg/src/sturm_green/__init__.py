"""Green kernels, local length scales and spectra of ``-y'' + q y`` on the line, ``q >= 1``."""

from .dfuncs import (
    CompactnessVerdict,
    DFunctions,
    compactness_indicator,
    compute_dfunctions,
    solve_d,
    solve_d1,
    solve_d2,
)
from .errors import (
    AdmissibilityError,
    ArgumentOrderError,
    DiagonalDerivativeError,
    InternalConsistencyError,
    InvalidProbeError,
    InvalidWindowError,
    OutOfDomainError,
    PreconditionError,
    RefinementError,
    SamplingError,
    SturmGreenError,
)
from .estimator import DFunctionTransformer, GreenSolver
from .green import (
    GreenKernel,
    SolutionReport,
    apply,
    apply_derivative,
    apply_indicator,
    apply_on_grid,
    kernel_dx,
    kernel_eval,
    kernel_row_integral,
    solve_bvp,
)
from .pfss import Pfss, rho_at, solve_pfss
from .potential import Forcing, Potential, load_forcing, load_potential
from .spectrum import SpectralResult, discreteness_diagnostic, eigen_truncated
from .verify import (
    CheckResult,
    kolmogorov_compactness_probe,
    lower_bound_witness,
    run_inequality_suite,
)

__version__ = "0.1.0"
