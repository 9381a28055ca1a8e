"""Bernoulli shifts, subsequence selection and empirical normality checks on digit streams."""
from ._accel import HAS_NUMBA, backend
from .analyze import (
    DiscrepancyCurve,
    FrequencyReport,
    Verdict,
    count_patterns,
    count_starred_aligned,
    discrepancy,
    lemma1_crosscheck,
    normality_verdict,
    wall_matrix,
)
from .generators import (
    GeneratorSpec,
    build,
    champernowne,
    duplicate,
    fill_zero,
    iid_sampled,
    parse_spec,
    theorem3_point,
    weighted_concat,
)
from .selectors import (
    AP,
    EventuallyPeriodic,
    Explicit,
    PeriodicSet,
    lower_density,
    parse_selection,
    select,
    selection_family_for_theorem2,
    thickness_violation,
)
from .shiftspace import (
    Alphabet,
    BernoulliMeasure,
    DigitSequence,
    Pattern,
    StarredPattern,
    block_flatten,
    block_measure,
    block_recode,
    cylinder_measure,
    remark3_measure,
    starred_measure_bruteforce,
    starred_measure_closed_form,
    theorem3_measure,
)

__version__ = "0.1.0"
