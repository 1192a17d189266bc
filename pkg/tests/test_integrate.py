import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neurodyn import (
    Divergence,
    IntegratorConfig,
    InvalidInput,
    ModelSystem,
    StimulusProtocol,
    convergence_order,
    get_preset,
    integrate,
)
from neurodyn.integrate import InvalidConfig, Trajectory, UnknownChannel


def _zero(t, y, I):
    return (0.0,) * len(y)


def _explode(t, y, I):
    return (y[0] * y[0],)


def _current(t, y, I):
    return (I,)


def test_zero_rhs_is_constant():
    m = ModelSystem("zero", 2, _zero, ("a", "b"))
    tr = integrate(m, (1.5, -2.0), StimulusProtocol(), IntegratorConfig("euler", 0.1, 1.0))
    assert np.all(tr.samples == [1.5, -2.0])


def test_exponential_oracle(decay):
    tr = integrate(decay, (1.0,), StimulusProtocol(), IntegratorConfig("rk4", 0.1, 1.0))
    assert abs(tr.samples[-1, 0] - 0.3678794) < 1e-6


def test_convergence_orders(decay):
    stim = StimulusProtocol()
    rk4 = convergence_order(decay, (1.0,), stim, (0.2, 0.1, 0.05), 1.0, "rk4")
    euler = convergence_order(decay, (1.0,), stim, (0.2, 0.1, 0.05), 1.0, "euler")
    assert 3.7 <= rk4.order <= 4.3
    assert 0.8 <= euler.order <= 1.2


def test_degenerate_zero_error():
    m = ModelSystem("zero", 1, _zero, ("y",))
    res = convergence_order(m, (1.0,), StimulusProtocol(), (0.2, 0.1, 0.05), 1.0)
    assert res.degenerate and res.order is None


@pytest.mark.parametrize("dts", [(0.2, 0.1), (0.2, 0.1, 0.04)])
def test_convergence_input_checks(decay, dts):
    with pytest.raises(InvalidInput):
        convergence_order(decay, (1.0,), StimulusProtocol(), dts, 1.0)


def test_izhikevich_reset_overshoot_is_bounded():
    p = get_preset("izh_rs")
    m = p.model()
    tr = integrate(m, p.s0, StimulusProtocol.step(10.0), IntegratorConfig("rk4", 0.01, 1000.0))
    assert len(tr.events) > 0
    vdot = max(m.rhs(0.0, s, 10.0)[0] for s in tr.samples)
    assert tr.channel("v").max() <= 30.0 + vdot * 0.01


def test_stimulus_sampled_at_stage_times():
    m = ModelSystem("ramp", 1, _current, ("q",))
    stim = StimulusProtocol.pulse(1.0, 0.05, 1.0)
    euler = integrate(m, (0.0,), stim, IntegratorConfig("euler", 0.1, 0.1))
    rk4 = integrate(m, (0.0,), stim, IntegratorConfig("rk4", 0.1, 0.1))
    assert euler.samples[-1, 0] == 0.0
    # k2, k3 and k4 see the pulse: (0 + 2 + 2 + 1) / 6 * dt
    assert rk4.samples[-1, 0] == pytest.approx(0.1 * 5 / 6)


@settings(max_examples=15, deadline=None)
@given(stride=st.integers(1, 7), t_end=st.floats(1.0, 20.0))
def test_stride_is_a_subsequence(stride, t_end):
    p = get_preset("fhn_default")
    m = p.model()
    full = integrate(m, p.s0, StimulusProtocol.constant(0.5), IntegratorConfig("rk4", 0.02, t_end))
    sub = integrate(m, p.s0, StimulusProtocol.constant(0.5), IntegratorConfig("rk4", 0.02, t_end, stride))
    n = len(sub)
    assert n == math.floor(t_end / (0.02 * stride) + 1e-9) + 1
    assert np.array_equal(full.samples[::stride][:n], sub.samples)
    assert t_end - sub.t_final < 0.02 * stride + 1e-12


def test_deterministic():
    p = get_preset("hh_squid")
    cfg = IntegratorConfig("rk4", 0.01, 20.0)
    a = integrate(p.model(), p.s0, StimulusProtocol.constant(10.0), cfg)
    b = integrate(p.model(), p.s0, StimulusProtocol.constant(10.0), cfg)
    assert a.to_csv() == b.to_csv()


def test_divergence_carries_truncated_trajectory():
    m = ModelSystem("blowup", 1, _explode, ("y",))
    with pytest.raises(Divergence) as exc:
        integrate(m, (1.0,), StimulusProtocol(), IntegratorConfig("euler", 0.1, 100.0))
    tr = exc.value.trajectory
    assert exc.value.t < 100.0
    assert np.all(np.isfinite(tr.samples)) and np.all(np.abs(tr.samples) <= 1e9)


@pytest.mark.parametrize(
    "kw",
    [
        dict(method="rk45"),
        dict(dt=0.0),
        dict(dt=1.0, t_end=0.5),
        dict(record_stride=0),
        dict(dt=math.nan),
    ],
)
def test_invalid_config(kw):
    with pytest.raises(InvalidConfig):
        IntegratorConfig(**kw)


def test_trajectory_csv_and_channels(tmp_path):
    tr = Trajectory(0.0, 0.5, np.array([[1.0, 2.0], [3.0, 4.123456789123]]), ("a", "b"))
    text = tr.to_csv(tmp_path / "t.csv")
    assert text.splitlines() == ["time,a,b", "0,1,2", "0.5,3,4.12345679"]
    assert (tmp_path / "t.csv").read_text() == text
    assert list(tr.channel("b")) == [2.0, 4.123456789123]
    with pytest.raises(UnknownChannel):
        tr.channel("c")
    assert tr.shifted(2.0).times[0] == 2.0


def test_samples_are_read_only():
    tr = Trajectory(0.0, 1.0, np.zeros((2, 1)), ("x",))
    with pytest.raises(ValueError):
        tr.samples[0, 0] = 1.0
