import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neurodyn import IntegratorConfig, InvalidParameter, StimulusProtocol, integrate
from neurodyn.models import (
    MAEDA_CIRCUIT,
    FHNParams,
    HHParams,
    HRParams,
    IzhikevichParams,
    MLParams,
    fhn_rhs,
    hh_conductance,
    hh_model,
    hh_rhs,
    hr_rhs,
    izh_reset,
    izh_rhs,
    make_model,
    ml_m_ss,
    ml_n_ss,
    ml_rhs,
    ml_tau_n,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)


class TestHH:
    def test_conductance_examples(self):
        assert hh_conductance(-1.0, -55.0, 50.0) == pytest.approx(0.009524, abs=1e-6)
        assert hh_conductance(2.0, -65.0, -77.0) == pytest.approx(0.16667, abs=1e-5)
        assert hh_conductance(0.0, -40.0, -54.4) == 0.0

    def test_conductance_at_reversal(self):
        with pytest.raises(ZeroDivisionError):
            hh_conductance(1.0, 50.0, 50.0)

    def test_sodium_term_vanishes_at_reversal(self):
        p = HHParams(g_K_max=0.0, g_L=0.0)
        assert hh_rhs((p.V_Na, 1.0, 1.0, 0.0), p, 0.0)[0] == 0.0

    @given(V=st.floats(-100, 60), m=st.floats(0, 1), h=st.floats(0, 1), n=st.floats(0, 1), I=st.floats(-20, 20))
    def test_capacitance_scaling(self, V, m, h, n, I):
        base = hh_rhs((V, m, h, n), HHParams(), I)[0]
        halved = hh_rhs((V, m, h, n), HHParams(C_m=0.5), I)[0]
        assert halved == pytest.approx(2.0 * base, rel=1e-12, abs=1e-300)

    def test_invalid_params(self):
        with pytest.raises(InvalidParameter):
            HHParams(C_m=0.0)
        with pytest.raises(InvalidParameter):
            HHParams(g_Na_max=-1.0)

    @settings(max_examples=10, deadline=None)
    @given(gates=st.tuples(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1)), dt=st.sampled_from([0.01, 0.025, 0.05]))
    def test_gates_stay_in_unit_interval(self, gates, dt):
        tr = integrate(hh_model(), (-65.0, *gates), StimulusProtocol.constant(15.0), IntegratorConfig("rk4", dt, 20.0))
        g = tr.samples[:, 1:]
        assert g.min() >= -1e-9 and g.max() <= 1 + 1e-9


class TestIzhikevich:
    def test_rhs_examples(self):
        p = IzhikevichParams()
        assert izh_rhs((-65.0, -13.0), p, 0.0) == (-3.0, 0.0)
        assert izh_rhs((0.0, 0.0), p, 0.0) == (140.0, 0.0)
        assert izh_rhs((0.0, 0.0), p, -140.0)[0] == 0.0

    def test_reset_examples(self):
        p = IzhikevichParams()
        assert izh_reset((31.0, 5.0), p) == (-65.0, 13.0)
        assert izh_reset((29.99, 5.0), p) == (29.99, 5.0)
        once = izh_reset((31.0, 5.0), p)
        assert izh_reset(once, p) == once

    @given(v=st.floats(-100, 100), u=finite)
    def test_reset_is_identity_below_threshold(self, v, u):
        p = IzhikevichParams()
        out = izh_reset((v, u), p)
        if v < p.threshold:
            assert out == (v, u)
        else:
            assert out == (p.c, u + p.d)

    def test_a_must_be_positive(self):
        with pytest.raises(InvalidParameter):
            IzhikevichParams(a=0.0)


class TestFHN:
    def test_examples(self):
        p = FHNParams()
        dv, du = fhn_rhs((0.0, 0.0), p, 0.0)
        assert dv == 0.0 and du == pytest.approx(0.7 / 3)
        assert fhn_rhs((math.sqrt(3), 0.0), p, 0.0)[0] == pytest.approx(0.0, abs=1e-15)

    def test_zero_c(self):
        with pytest.raises(InvalidParameter):
            fhn_rhs((0.0, 0.0), FHNParams(c=0.0), 0.0)

    @given(v=finite, u=finite, I=finite)
    def test_voltage_equation_is_odd(self, v, u, I):
        p = FHNParams()
        assert fhn_rhs((-v, -u), p, -I)[0] == pytest.approx(-fhn_rhs((v, u), p, I)[0], rel=1e-12, abs=1e-9)


class TestHR:
    def test_examples(self):
        p = HRParams()
        dv, du, dw = hr_rhs((0.0, 0.0, 0.0), p, 0.0)
        assert (dv, du) == (0.0, 1.0)
        assert dw == pytest.approx(0.064)
        assert hr_rhs((0.0, 1.0, 0.0), p, 0.0)[1] == 0.0

    def test_mu_positive(self):
        with pytest.raises(InvalidParameter):
            HRParams(mu=0.0)


class TestML:
    def test_half_activation(self):
        p = MLParams()
        assert ml_m_ss(p.V1, p) == 0.5

    def test_calcium_term_vanishes_at_reversal(self):
        p = dataclasses.replace(MLParams(), g_L=0.0)
        N = 0.3
        I = p.g_K * N * (p.V_Ca - p.V_K)
        assert ml_rhs((p.V_Ca, N), p, I)[0] == pytest.approx(0.0, abs=1e-12)

    @given(V=st.floats(-1e4, 1e4))
    def test_gating_ranges(self, V):
        p = MLParams()
        assert 0.0 <= ml_m_ss(V, p) <= 1.0
        assert 0.0 <= ml_n_ss(V, p) <= 1.0
        assert ml_tau_n(V, p) > 0.0

    @pytest.mark.parametrize("kw", [dict(C=0.0), dict(V2=0.0), dict(V4=0.0)])
    def test_invalid(self, kw):
        with pytest.raises(InvalidParameter):
            MLParams(**kw)


def test_make_model_rejects_unknowns():
    with pytest.raises(InvalidParameter):
        make_model("lif")
    with pytest.raises(InvalidParameter):
        make_model("fhn", q=1.0)


def test_maeda_constants_are_read_only():
    assert MAEDA_CIRCUIT.I_ext == "0.025 mA"
    assert MAEDA_CIRCUIT.values()["T2"] == "PNP 2N3906"
    with pytest.raises(dataclasses.FrozenInstanceError):
        MAEDA_CIRCUIT.C = "1 F"


def test_hr_trajectory_bounded():
    tr = integrate(make_model("hr"), (-1.6, -11.8, 0.0), StimulusProtocol.constant(2.0), IntegratorConfig("rk4", 0.05, 500.0))
    assert np.max(np.abs(tr.channel("v"))) < 3.0
