import math
import pickle

import pytest
from hypothesis import given
from hypothesis import strategies as st

from neurodyn import (
    DimensionMismatch,
    InvalidParameter,
    NonFiniteValue,
    StateVector,
    StimulusProtocol,
    evaluate_stimulus,
    make_model,
    validate_state,
)
from neurodyn.core import ModelSystem


class TestStimulus:
    def test_pulse_before_and_inside(self):
        p = StimulusProtocol.pulse(90.0, 10.0, 50.0)
        assert evaluate_stimulus(p, 5.0) == 0.0
        assert evaluate_stimulus(p, 30.0) == 90.0

    def test_pulse_window_is_half_open(self):
        p = StimulusProtocol.pulse(1.0, 10.0, 50.0)
        assert p(10.0) == 1.0
        assert p(60.0) == 0.0

    def test_step_holds(self):
        assert evaluate_stimulus(StimulusProtocol.step(0.025), 1000.0) == 0.025
        assert StimulusProtocol.step(3.0, onset=5.0)(4.999) == 0.0

    def test_constant_ignores_onset(self):
        assert StimulusProtocol("constant", 2.0, onset=100.0)(0.0) == 2.0

    @pytest.mark.parametrize(
        "kw",
        [
            dict(kind="ramp"),
            dict(kind="pulse", amplitude=1.0, duration=0.0),
            dict(kind="pulse", amplitude=1.0),
            dict(kind="step", onset=-1.0),
            dict(amplitude=math.nan),
        ],
    )
    def test_invalid(self, kw):
        with pytest.raises(InvalidParameter):
            StimulusProtocol(**kw)

    @given(
        amp=st.floats(-100, 100),
        onset=st.floats(0, 100),
        dur=st.floats(0.1, 100),
        frac=st.floats(0.01, 0.99),
    )
    def test_piecewise_constant(self, amp, onset, dur, frac):
        p = StimulusProtocol.pulse(amp, onset, dur)
        assert p(onset * frac) == 0.0 or onset == 0.0
        assert p(onset + frac * dur) == amp
        assert p(onset + dur * (1 + frac)) == 0.0


class TestStateVector:
    def test_nonfinite_names_index(self):
        with pytest.raises(NonFiniteValue) as exc:
            StateVector([0.0, math.nan])
        assert exc.value.index == 1

    def test_validate_against_model(self):
        hh = make_model("hh")
        assert len(validate_state([-65.0, 0.05, 0.6, 0.3], hh)) == 4
        with pytest.raises(DimensionMismatch):
            validate_state([0.0, 0.0], hh)
        with pytest.raises(NonFiniteValue):
            validate_state([0.0, math.inf], make_model("fhn"))

    def test_immutable(self):
        s = StateVector([1.0, 2.0])
        with pytest.raises(AttributeError):
            s.values = (0.0,)


def test_model_system_rejects_label_mismatch():
    with pytest.raises(InvalidParameter):
        ModelSystem("x", 2, lambda t, y, I: y, ("a",))


@pytest.mark.parametrize("family", ["hh", "izhikevich", "fhn", "fhn_cell", "hr", "ml"])
def test_models_pickle_and_are_deterministic(family):
    m = make_model(family)
    clone = pickle.loads(pickle.dumps(m))
    y = [0.3, 0.2, 0.1, 0.4][: m.dimension]
    assert clone.rhs(0.0, y, 1.5) == m.rhs(0.0, y, 1.5)
    assert m.rhs(0.0, y, 1.5) == m.rhs(0.0, y, 1.5)
    assert dict(clone.parameters) == dict(m.parameters)
