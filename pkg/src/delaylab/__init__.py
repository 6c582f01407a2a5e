"""delaylab: simulation and stability certification of linear evolution
equations with intermittent delay feedback or anti-damping."""

from . import errors
from .certificates import (
    AS_STATED,
    SQUARED_VARIANT,
    AsymptoticPattern,
    CertificateReport,
    TailDeclaration,
    compare_small_delay_vs_general,
    exponential_certificate,
    remark_sufficient_test,
    series_certificate,
)
from .integrator import Trajectory, simulate
from .models import (
    LocallyDampedWaveModel,
    MemoryKernel,
    ViscoelasticWaveModel,
    build_locally_damped_wave,
    build_scalar,
    build_viscoelastic_wave,
)
from .monitor import (
    InequalityCheck,
    InequalityReport,
    LyapunovSeries,
    check_cycle_bounds,
    check_even_contraction,
    check_F_derivative,
    check_growth_bound,
    lyapunov_series,
    run_standard_checks,
)
from .schedule import (
    HypothesisReport,
    SwitchingSchedule,
    build_periodic_schedule,
    build_schedule,
    validate_hypotheses,
)
from .semigroup import (
    SemigroupEnvelope,
    estimate_envelope,
    pin_envelope,
    verify_envelope,
)
from .system import (
    ANTI_DAMPING,
    DELAYED,
    DelaySystem,
    InnerProduct,
    check_antidamping_sign,
    check_dissipative,
    induced_operator_norm,
    load_matrix,
    save_matrix,
)

__version__ = "0.1.0"
