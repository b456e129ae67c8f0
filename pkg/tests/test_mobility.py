import pytest
from hypothesis import given, strategies as st

from conftest import SLOT, make_trace
from mobility import (MobilityTrace, Segment, connection_probabilities, connection_probability,
                      connectivity_time, raw_probability)


def test_probability_from_coverage_time():
    trace = make_trace('veh-0', ['ap-a'], speed=10.0, share=0.8)
    assert connection_probability(trace, 'ap-a', SLOT) == pytest.approx(0.8)


def test_registration_and_wait_reduce_probability():
    segment = Segment(ap='ap-a', coverage_length=1500.0, registration_time=10.0, wait_time=20.0)
    assert raw_probability(segment, 10.0, SLOT) == pytest.approx((150.0 - 30.0) / SLOT)


def test_missing_segment_is_zero():
    trace = make_trace('veh-0', ['ap-a'])
    assert connection_probability(trace, 'ap-b', SLOT) == 0.0


def test_probability_is_clamped():
    long_stay = MobilityTrace('veh-0', 1.0, (Segment('ap-a', 10 * SLOT, 0.0, 0.0),))
    short_stay = MobilityTrace('veh-1', 10.0, (Segment('ap-a', 5.0, 1.0, 1.0),))
    assert connection_probability(long_stay, 'ap-a', SLOT) == 1.0
    assert connection_probability(short_stay, 'ap-a', SLOT) == 0.0


def test_probabilities_rescaled_when_above_one():
    trace = MobilityTrace('veh-0', 1.0, (Segment('ap-a', 0.9 * SLOT, 0.0, 0.0),
                                         Segment('ap-b', 0.6 * SLOT, 0.0, 0.0)))
    coverage = connection_probabilities(trace, SLOT)
    assert coverage.total == pytest.approx(1.0)
    assert coverage.probabilities['ap-a'] == pytest.approx(0.6)
    assert coverage.covered


def test_uncovered_vehicle_uses_fallback():
    trace = MobilityTrace('veh-0', 10.0, (Segment('ap-b', 1.0, 5.0, 5.0),))
    coverage = connection_probabilities(trace, SLOT, fallback_ap='ap-a')
    assert coverage.probabilities == {'ap-a': 1.0}
    assert not coverage.covered


def test_dominant_ap_tie_breaks_on_id():
    coverage = connection_probabilities(make_trace('veh-3', ['ap-b', 'ap-a']), SLOT)
    assert coverage.dominant_ap() == 'ap-a'


def test_connectivity_time():
    assert connectivity_time(0.25, SLOT) == 75.0
    with pytest.raises(ValueError):
        connectivity_time(1.5, SLOT)


def test_nonpositive_slot_rejected():
    with pytest.raises(ValueError):
        connection_probability(make_trace('veh-0', ['ap-a']), 'ap-a', 0.0)


@given(st.lists(st.tuples(st.sampled_from(['ap-a', 'ap-b', 'ap-c']),
                          st.floats(min_value=0.0, max_value=1e5),
                          st.floats(min_value=0.0, max_value=50.0),
                          st.floats(min_value=0.0, max_value=50.0)), max_size=6),
       st.floats(min_value=0.5, max_value=40.0))
def test_probabilities_are_normalized(segments, speed):
    trace = MobilityTrace('veh-0', speed, tuple(Segment(*segment) for segment in segments))
    coverage = connection_probabilities(trace, SLOT, fallback_ap='ap-a')
    assert all(0.0 <= p <= 1.0 for p in coverage.probabilities.values())
    assert coverage.total <= 1.0 + 1e-9
