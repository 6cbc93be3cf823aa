"""Step-profile calculus: rearrangement, partial integrals, submajorization."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from majorant import (
    BorelCellSet,
    StepProfile,
    compress_halves,
    partial_integral,
    rearrange,
    rearrangement_order,
    restrict_equidistributed,
    submajorizes,
)

finite_values = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def profiles(max_n=32):
    return arrays(
        np.float64,
        st.integers(1, max_n),
        elements=finite_values,
    ).map(StepProfile)


def test_rearrangement_order_is_stable_descending():
    order = rearrangement_order([1.0, 3.0, 3.0, -2.0])
    assert order.tolist() == [1, 2, 0, 3]


def test_rearrange_sorts_signed_values_descending():
    f = StepProfile([-2.0, 5.0, 0.5])
    assert rearrange(f).values.tolist() == [5.0, 0.5, -2.0]


@given(profiles())
def test_rearrange_is_idempotent_and_preserves_multiset(f):
    g = rearrange(f)
    assert rearrange(g).values.tolist() == g.values.tolist()
    assert sorted(g.values.tolist()) == sorted(f.values.tolist())
    assert g.is_sorted


def test_partial_integral_interpolates_within_cells():
    f = StepProfile([3.0, 1.0])
    assert partial_integral(f, 0.0) == 0.0
    assert partial_integral(f, 0.5) == pytest.approx(1.5)
    assert partial_integral(f, 0.75) == pytest.approx(1.5 + 0.25)
    assert partial_integral(f, 1.0) == pytest.approx(2.0)


def test_partial_integral_rejects_unsorted_profiles():
    with pytest.raises(ValueError):
        partial_integral(StepProfile([1.0, 3.0]), 0.5)


@given(profiles(), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_partial_integral_is_monotone_for_nonnegative_profiles(f, t1, t2):
    g = rearrange(StepProfile(np.abs(f.values)))
    lo, hi = sorted((t1, t2))
    assert partial_integral(g, lo) <= partial_integral(g, hi) + 1e-9


def test_submajorizes_strict_case():
    report = submajorizes(StepProfile([1.0, 0.0]), StepProfile([1.0, 1.0]))
    assert report.submajorized
    assert not report.majorized
    assert not report.thompson_finite_ok
    assert report.margins.tolist() == pytest.approx([0.0, 0.5])


def test_submajorizes_equality_is_majorization():
    report = submajorizes(StepProfile([0.5, 0.25]), StepProfile([0.25, 0.5]))
    assert report.submajorized and report.majorized and report.thompson_finite_ok
    assert report.trace_gap == pytest.approx(0.0)


def test_submajorizes_rejects_oversized_target():
    report = submajorizes(StepProfile([2.0, 1.0]), StepProfile([1.0, 0.5]))
    assert not report.submajorized
    assert report.margins.min() < 0


def test_submajorizes_takes_absolute_values():
    report = submajorizes(StepProfile([-1.0, 0.0]), StepProfile([1.0, 1.0]))
    assert report.submajorized


def test_submajorizes_refines_mismatched_resolutions():
    coarse = StepProfile([1.0])
    fine = StepProfile([1.5, 0.5, 1.5, 0.5])
    report = submajorizes(coarse, fine)
    assert report.resolution == 4
    assert report.submajorized


def test_finite_condition_window_example():
    # gap of targets must fit inside the gap of the spectrum
    ok = submajorizes(StepProfile([0.6, 0.5]), StepProfile([1.0, 0.5]))
    assert ok.thompson_finite_ok
    bad = submajorizes(StepProfile([1.0, 0.0]), StepProfile([1.0, 1.0]))
    assert not bad.thompson_finite_ok


@settings(max_examples=60)
@given(profiles(max_n=16), st.data())
def test_submajorization_survives_averaging(f, data):
    # averaging adjacent cells can only pull a profile down in partial sums
    vals = np.abs(rearrange(f).values)
    if vals.size < 2:
        return
    i = data.draw(st.integers(0, vals.size - 2))
    avg = vals.copy()
    avg[i] = avg[i + 1] = (vals[i] + vals[i + 1]) / 2.0
    report = submajorizes(StepProfile(avg), StepProfile(vals), tol=1e-9)
    assert report.submajorized


def test_restrict_equidistributed_picks_sorted_cells():
    f = StepProfile([0.1, 5.0, 3.0, 4.0])
    X = BorelCellSet([0, 2], 4)
    out = restrict_equidistributed(f, X)
    assert out.values.tolist() == [5.0, 3.0]


def test_compress_halves_splits_the_rearrangement():
    top, bottom = compress_halves(StepProfile([1.0, 4.0, 2.0, 3.0]))
    assert top.values.tolist() == [4.0, 3.0]
    assert bottom.values.tolist() == [2.0, 1.0]


def test_compress_halves_rejects_odd_lengths():
    with pytest.raises(ValueError):
        compress_halves(StepProfile([1.0, 2.0, 3.0]))


def test_cell_set_complement_partitions_the_grid():
    X = BorelCellSet([1, 3], 6)
    Y = X.complement()
    assert sorted(X.cells.tolist() + Y.cells.tolist()) == list(range(6))
    assert X.measure + Y.measure == pytest.approx(1.0)


def test_cell_set_rejects_out_of_range_cells():
    with pytest.raises(ValueError):
        BorelCellSet([7], 4)


def test_profile_json_round_trip():
    f = StepProfile([2.0, -1.0, 0.25])
    assert StepProfile.from_json(f.to_json()).values.tolist() == f.values.tolist()
