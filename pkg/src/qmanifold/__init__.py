"""Numerical toolkit for quantum manifolds modelled on Schwartz space.

Functions are stored as truncated Hermite-function expansions; on top of
that sit the position expectation value, translations, the trivialization of
the nonzero functions as a bundle over R^n and the trivial quantization of a
classical atlas together with its classical limit.
"""
__version__ = "0.1.0"

from . import config
from .errors import (
    AxisError,
    DimensionMismatch,
    DirectionNotTangent,
    GridTooSmall,
    NonzeroRequired,
    NotHermitian,
    OutOfOverlap,
    PlanRejected,
    PreconditionError,
    QMError,
    SampleOutsideChart,
    TruncationError,
)
from .hermite import (
    GridSpec,
    SchwartzFn,
    apply_momentum,
    apply_position,
    basis,
    derivative,
    evaluate,
    inner,
    monomial_multiply,
    nuclear_quadratic_form,
    nuclear_seminorm,
    random_schwartz,
    sup_seminorm,
    truncate,
    zeros,
)
from .expectation import (
    continuity_bound_check,
    d_expectation,
    gaussian_section,
    indistinguishable,
    position_expectation,
    tangent_slope,
)
from .translation import plan_translation, translate
from .bundle import (
    FiberPoint,
    d_trivialize,
    d_untrivialize,
    project_to_fiber,
    trivialize,
    untrivialize,
    verify_local_triviality,
)
from .atlas import (
    QuantumPoint,
    kolmogorov_project,
    make_classical_atlas,
    quantum_transition,
    recover_classical_transition,
    trivial_quantization,
    verify_quantum_atlas,
)
from .report import CheckRecord, VerificationReport
