import numpy as np
import pytest

from pwapid.errors import OutOfFeasibleSet
from pwapid.mpqp import locate
from pwapid.scheduler import check_setpoint_change, decompose_gains, make_state, step
from pwapid.simulate import run_closed_loop
from pwapid.verify import sample_in


def runtime(ctrl):
    s = ctrl.spec
    return make_state(ctrl.law, ctrl.target, ctrl.model, ctrl.aug.kind, s.Ez, s.Fu, s.G)


@pytest.mark.parametrize("key", ["I", "III"])
def test_equilibrium_input_at_target(controllers, key):
    ctrl = controllers(key)
    st = runtime(ctrl)
    for _ in range(5):
        u, diag = step(st, ctrl.model.C @ ctrl.target.x_s)
        np.testing.assert_allclose(u, ctrl.target.u_s, atol=1e-12)
        assert diag.region == 0 and not diag.escalation
        assert np.all(diag.slack >= 0)


def test_unconstrained_region_is_the_pid_law(controllers, rng):
    """Near the target the scheduled input is ``u_s + K1 e + K2 sum(e) + K3 de``."""
    ctrl = controllers("III")
    g = ctrl.gains
    x_s, v = ctrl.target.x_s, ctrl.target.v_ref
    Cv = ctrl.model.Cv
    st = runtime(ctrl)
    x_prev, acc = None, np.zeros(1)
    for _ in range(30):
        x = x_s + rng.normal(scale=1e-3, size=2)
        dv = np.zeros(1) if x_prev is None else Cv @ (x - x_prev)
        expected = ctrl.target.u_s + g.K1 @ (x_s - x) + g.K2 @ (-acc) + g.K3 @ (-dv)
        u, diag = step(st, x)
        assert diag.region == 0
        np.testing.assert_allclose(u, expected, rtol=0, atol=1e-12)
        acc = acc + Cv @ x - v
        x_prev = x


def test_hold_last_input_when_outside(controllers):
    ctrl = controllers("I")
    st = runtime(ctrl)
    u0, _ = step(st, ctrl.target.x_s + 0.01)
    u1, diag = step(st, np.array([40.0, -40.0]))
    assert diag.region is None and diag.escalation
    np.testing.assert_array_equal(u1, u0)
    u2, diag = step(st, ctrl.target.x_s)
    assert diag.region == 0 and not diag.escalation


def test_strict_mode_raises(controllers):
    ctrl = controllers("I")
    with pytest.raises(OutOfFeasibleSet):
        step(runtime(ctrl), np.array([40.0, -40.0]), strict=True)


def test_setpoint_change_same_point(controllers):
    ctrl = controllers("I")
    z = ctrl.target.z_s
    assert check_setpoint_change(ctrl.law, z, z)


def test_setpoint_change_far_point(controllers):
    ctrl = controllers("I")
    z2 = ctrl.target.z_s
    assert not check_setpoint_change(ctrl.law, z2 + np.array([10.0, 0.0]), z2)


def test_pid_bank_split_for_reactor(controllers):
    ctrl = controllers("III")
    bank = decompose_gains(ctrl.law, ctrl.aug.coord_map)
    assert bank.pid_channels == 2 and bank.p_channels == 2
    assert bank.columns == {"state": [0, 1], "integral": [2], "difference": [3]}
    for i, reg in enumerate(ctrl.law.regions):
        np.testing.assert_array_equal(bank.reassemble(i), reg.F)
        np.testing.assert_array_equal(bank.g[i], reg.g)


def test_plain_bank_has_only_proportional_part(controllers):
    ctrl = controllers("I")
    bank = decompose_gains(ctrl.law, ctrl.aug.coord_map)
    assert bank.K2[0] is None and bank.K3[0] is None and bank.pid_channels == 0
    np.testing.assert_array_equal(bank.reassemble(0), ctrl.law.regions[0].F)


def test_random_starts_reach_unconstrained_region(controllers, rng):
    ctrl = controllers("I")
    Z = sample_in(ctrl.law.X0, 20, rng)
    for z in Z:
        x0 = ctrl.target.x_s - z
        tr = run_closed_loop(ctrl.model, ctrl.law, ctrl.target, steps=150, x0=x0)
        assert tr.status == "ok"
        assert tr.located().all()
        assert tr.region[-1] == 0
        assert np.all(tr.slack >= -1e-8)


def test_integral_frozen_while_holding(controllers):
    ctrl = controllers("III")
    st = runtime(ctrl)
    step(st, ctrl.target.x_s + 0.01)
    before = st.integral.copy()
    _, diag = step(st, np.array([40.0, -40.0]))
    assert diag.escalation
    np.testing.assert_array_equal(st.integral, before)
