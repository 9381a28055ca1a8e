from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlab.errors import MeasureMismatchError, ParameterError, SpecSyntaxError, UnsupportedConstructionError
from nlab.generators import (
    GeneratorSpec,
    build,
    champernowne,
    duplicate,
    fill_zero,
    iid_sampled,
    output_base,
    parse_spec,
    stage_counts,
    theorem3_point,
    weighted_concat,
)
from nlab.selectors import PeriodicSet, parse_selection, select
from nlab.shiftspace import Alphabet, BernoulliMeasure, DigitSequence, block_recode

from . import oracles


@pytest.mark.parametrize("b", [2, 3, 10, 16])
def test_champernowne_prefix(b):
    assert champernowne(b).take(5000).tolist() == oracles.champernowne_digits(b, 5000)


def test_champernowne_known_starts():
    assert "".join(map(str, champernowne(2).take(16))) == "1101110010111011"
    assert champernowne(10).take(12).tolist() == [1, 2, 3, 4, 5, 6, 7, 8, 9, 1, 0, 1]


@pytest.mark.parametrize("weights", [("1/2", "1/2"), ("1/3", "2/3"), ("1/10", "0", "9/10"), (0.25, 0.25, 0.5)])
def test_iid_matches_threshold_oracle(weights):
    m = BernoulliMeasure(Alphabet(len(weights)), weights)
    got = iid_sampled(m, 1234).take(70_000).tolist()
    assert got == oracles.iid_digits(m.weights, 1234, 70_000)


def test_iid_never_emits_zero_weight_digit():
    m = BernoulliMeasure(Alphabet(3), ("1/2", "0", "1/2"))
    assert 1 not in set(iid_sampled(m, 5).take(200_000).tolist())


@settings(max_examples=20)
@given(st.integers(0, 2 ** 64 - 1))
def test_iid_reproducible(seed):
    m = BernoulliMeasure.uniform(3)
    assert np.array_equal(iid_sampled(m, seed).take(1000), iid_sampled(m, seed).take(1000))


def test_iid_seed_range():
    with pytest.raises(ParameterError):
        iid_sampled(BernoulliMeasure.uniform(2), -1)


def test_iid_frequencies_follow_weights():
    m = BernoulliMeasure(Alphabet(2), ("1/3", "2/3"))
    d = iid_sampled(m, 0).take(300_000)
    assert abs(d.mean() - 2 / 3) < 0.005


def test_stage_counts():
    uniform = BernoulliMeasure.uniform(2)
    assert stage_counts(uniform, 1) == [2, 2]
    assert stage_counts(uniform, 2) == [4, 4, 4, 4]
    skew = BernoulliMeasure(Alphabet(2), ("1/3", "2/3"))
    assert stage_counts(skew, 1) == [2, 3]
    assert stage_counts(skew, 2) == [2, 4, 4, 8]  # ceil(16/9), ceil(32/9), ..., ceil(64/9)


def test_weighted_concat_layout():
    uniform = BernoulliMeasure.uniform(2)
    # stage 1: 0 0 1 1; stage 2: 00 x4, 01 x4, ...
    assert weighted_concat(uniform).take(12).tolist() == [0, 0, 1, 1] + [0, 0] * 4
    skew = BernoulliMeasure(Alphabet(2), ("1/3", "2/3"))
    assert weighted_concat(skew).take(5).tolist() == [0, 0, 1, 1, 1]


def test_weighted_concat_needs_exact_weights():
    with pytest.raises(UnsupportedConstructionError):
        weighted_concat(BernoulliMeasure(Alphabet(2), (0.5, 0.5)))


def test_duplicate():
    seq = duplicate(DigitSequence.from_digits([1, 0, 2], 3), 2)
    assert seq.known_length == 6
    assert seq.take(10).tolist() == [1, 1, 0, 0, 2, 2]
    with pytest.raises(ParameterError):
        duplicate(champernowne(2), 1)


@settings(max_examples=40)
@given(st.integers(1, 9), st.data())
def test_fill_zero_then_select_recovers_inner(m, data):
    res = data.draw(st.sets(st.integers(1, m), min_size=1))
    sel = PeriodicSet(m, frozenset(res))
    inner = iid_sampled(BernoulliMeasure.uniform(3), data.draw(st.integers(0, 1000)))
    filled = fill_zero(inner, sel)
    prefix = filled.take(5000)
    assert all(prefix[n - 1] == 0 for n in range(1, 5001) if not sel.contains(n))
    assert np.array_equal(select(filled.fresh(), sel).take(2000), inner.prefix(2000))


def test_fill_zero_ends_before_unfillable_position():
    filled = fill_zero(DigitSequence.from_digits([1, 1, 1], 2), parse_selection("ap:k=2,l=3"))
    # selected positions 2, 5, 8, 11: the fourth has no digit left
    assert filled.take(100).tolist() == [0, 1, 0, 0, 1, 0, 0, 1, 0, 0]


def test_perturbed_point_block_frequencies():
    pt = theorem3_point(2, 2, seed=3)
    blocks = block_recode(pt, 2).take(400_000)
    freq = np.bincount(blocks, minlength=4) / len(blocks)
    assert np.allclose(freq, [1 / 8, 3 / 8, 3 / 8, 1 / 8], atol=0.005)


def test_perturbed_point_offset_prefix():
    a = theorem3_point(2, 2, seed=3, L=3).take(1000)
    b = theorem3_point(2, 2, seed=3).take(998)
    assert a[:2].tolist() == [0, 0]
    assert np.array_equal(a[2:], b)


def test_perturbed_point_rejects_wrong_inner():
    with pytest.raises(MeasureMismatchError):
        theorem3_point(2, 2, inner=GeneratorSpec("iid", {"b": 2, "K": 2, "seed": 0}))
    with pytest.raises(MeasureMismatchError):
        theorem3_point(2, 2, inner=GeneratorSpec("champernowne", {"b": 2}))


def test_perturbed_point_from_concat_inner():
    nu = BernoulliMeasure(Alphabet(2, 2), tuple(Fraction(x, 8) for x in (1, 3, 3, 1)))
    end = sum(sum(stage_counts(nu, L)) * L for L in range(1, 5))
    blocks = block_recode(build("thm3 b=2 K=2 inner=concat"), 2).take(end)
    # complete stages hold every block in exact proportion
    assert np.bincount(blocks, minlength=4).tolist() == [end // 8, 3 * end // 8, 3 * end // 8, end // 8]


# --- specs ------------------------------------------------------------------


SPECS = [
    "champernowne b=10",
    "iid b=2 seed=42",
    "iid b=3 w=1/2|1/4|1/4 seed=1",
    "iid b=2 K=2 measure=thm3 seed=9",
    "concat b=2 measure=uniform growth=3",
    "thm3 b=2 K=3 L=2 seed=4",
    "duplicate r=2 inner=[champernowne b=2]",
    "fill_zero sel=periodic:m=2,r=2 inner=[iid b=2 seed=0]",
    "duplicate r=3 inner=[fill_zero sel=ap:k=1,l=2 inner=[iid b=3 seed=7]]",
]


@pytest.mark.parametrize("text", SPECS)
def test_spec_roundtrip_and_determinism(text):
    spec = parse_spec(text)
    assert parse_spec(str(spec)) == spec
    assert np.array_equal(build(spec).take(3000), build(str(spec)).take(3000))


def test_spec_aliases_and_measure_words():
    assert parse_spec("iid_sampled uniform b=2 seed=3") == parse_spec("iid b=2 measure=uniform seed=3")
    assert parse_spec("dup r=2 inner=[champernowne b=2]").kind == "duplicate"


def test_output_base():
    assert output_base(parse_spec("iid b=2 K=3 measure=thm3 seed=0")) == 8
    assert output_base(parse_spec("duplicate r=2 inner=[champernowne b=7]")) == 7


@pytest.mark.parametrize("text,column", [
    ("nosuch b=2", 0),
    ("iid b=two seed=1", 6),
    ("champernowne b=2 bogus", 17),
    ("duplicate r=2 inner=[champernowne b=2", 14),
    ("iid b=2", 0),
])
def test_spec_errors_carry_position(text, column):
    with pytest.raises(SpecSyntaxError) as exc:
        parse_spec(text)
    assert exc.value.position == column


def test_nested_spec_error_points_inside_brackets():
    text = "duplicate r=2 inner=[iid b=x seed=1]"
    with pytest.raises(SpecSyntaxError) as exc:
        parse_spec(text)
    assert text[exc.value.position] == "x"


def test_bad_weights_rejected():
    with pytest.raises(SpecSyntaxError):
        parse_spec("iid b=2 w=1/3|1/3 seed=0")
