"""Cost-optimal control charts under compound-Poisson mixture shifts."""

__version__ = "0.1.0"

from .distributions import (  # noqa: E402
    GenericComponentMoments,
    MixtureShiftSpec,
    ShiftCountLaw,
    erlang_cdf,
    geom_cdf,
    mixture_cdf,
    negbin_pmf,
    process_cdf,
    sum_cdf_given_n,
    sum_cdf_given_n_r,
)
from .moments import (  # noqa: E402
    IntervalCostInput,
    IntervalCostResult,
    binomial_sum_square,
    binomial_sum_square_general,
    c2,
    c2_general,
    c2_mixture,
    c2_series_oracle,
    expected_square_general,
    expected_square_mixture,
)
from .chart import ChartModel, ChartParams, CostSpec, ProcessSpec, build_model, expected_cost  # noqa: E402
from .optimize import Optimum, SearchSpace, grid_search  # noqa: E402
