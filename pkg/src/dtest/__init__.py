"""Diagnostic-test analysis of discrete-valued time series."""

__version__ = "0.1.0"

from .core import (
    ColumnSet,
    DiscreteMatrix,
    RawSeriesMatrix,
    load_discrete_csv,
    load_raw_csv,
    write_discrete_csv,
)
from .discretize import discretize_quantile, discretize_sign
from .errors import (
    DtestError,
    IndistinguishableRows,
    ParameterError,
    TractabilityError,
    ValidationError,
)
from .probability import (
    AlphabetProfile,
    ProbabilityValue,
    prob_column_all_equal,
    prob_matching_test,
    prob_matching_test_subset_oracle,
    prob_row_match_profile,
    prob_row_match_uniform,
)
from .testing import (
    DeadEndTestReport,
    RowPartition,
    column_importance,
    discernibility,
    enumerate_dead_end_tests,
    find_matching_row_groups,
    is_dead_end_test,
    is_test,
    min_test_length,
)
