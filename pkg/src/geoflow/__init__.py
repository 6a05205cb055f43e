"""Numerical certification of integrable geodesic flows on compact Lie groups and bi-quotients."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DegenerateVertical,
    GeoflowError,
    HypothesisFailed,
    InvalidConfig,
    InvalidParameters,
    NotCartan,
    NotRegular,
    NumericalFailure,
    RankMismatch,
    SpecMismatch,
    ToleranceAmbiguity,
)
from .liealg import (  # noqa: E402
    AlgebraElement,
    AlgebraSpec,
    GroupElement,
    Subspace,
    algebra,
    bracket,
    cartan_element,
    centralizer,
    default_cartan,
    inner,
    is_regular,
    parse_algebra,
    rank_of_algebra,
)
from .metrics import MetricSpec, SectionalOperator, build_sectional, default_sectional  # noqa: E402
from .dynamics import CotangentState, IntegratorConfig, Trajectory, integrate, step  # noqa: E402
from .actions import (  # noqa: E402
    TwoSidedAction,
    builtin_scenarios,
    eschenburg,
    flag,
    gromoll_meyer,
    moment,
    vertical_horizontal,
)
from .verify import (  # noqa: E402
    IntegralFamily,
    IntegralFunction,
    completeness_check,
    conservation_certificate,
    ddim_dind,
    horizontal_regularity,
    poisson_bracket,
    torus_dimension,
)
