import numpy as np
import pytest

from pwapid.io import DisturbanceEvent, read_trace_csv, write_trace_csv
from pwapid.simulate import disturbance_at, run_closed_loop
from pwapid.sysmodel import LtiModel


def ev(t, kind, v):
    return DisturbanceEvent(t, kind, np.asarray(v, float))


def test_impulse_applies_once():
    e = [ev(3, "impulse", [1.0, -0.5])]
    assert np.all(disturbance_at(e, 2, 2) == 0)
    np.testing.assert_array_equal(disturbance_at(e, 3, 2), [1.0, -0.5])
    assert np.all(disturbance_at(e, 4, 2) == 0)


def test_additive_persists():
    e = [ev(3, "additive", [0.01, -0.01]), ev(5, "additive", [1.0, 0.0])]
    assert np.all(disturbance_at(e, 2, 2) == 0)
    np.testing.assert_allclose(disturbance_at(e, 4, 2), [0.01, -0.01])
    np.testing.assert_allclose(disturbance_at(e, 500, 2), [1.01, -0.01])


def test_start_at_target_stays_put(controllers):
    ctrl = controllers("III")
    tr = run_closed_loop(ctrl.model, ctrl.law, ctrl.target, steps=50, x0=ctrl.target.x_s)
    assert len(tr) == 51 and tr.status == "ok"
    np.testing.assert_allclose(tr.x, np.tile(ctrl.target.x_s, (51, 1)), atol=1e-12)
    np.testing.assert_allclose(tr.u, np.tile(ctrl.target.u_s, (51, 1)), atol=1e-10)
    assert np.all(tr.region == 0) and not tr.flag.any()


def test_impulse_moves_the_error_by_its_vector(controllers):
    # the reactor model lives in the deviation frame, so d enters x~ = x_s - x
    ctrl = controllers("I")
    x_s = ctrl.target.x_s
    tr = run_closed_loop(ctrl.model, ctrl.law, ctrl.target, [ev(0, "impulse", [0.1, 0.0])],
                         steps=3, x0=x_s)
    np.testing.assert_allclose(x_s - tr.x[1], [0.1, 0.0], atol=1e-12)


def test_impulse_moves_an_absolute_state_by_its_vector(controllers):
    ctrl = controllers("I")
    m = ctrl.model
    plant = LtiModel(m.A, m.B, m.C, m.Cv, m.constraints, "absolute")
    x_s = ctrl.target.x_s
    tr = run_closed_loop(plant, ctrl.law, ctrl.target, [ev(0, "impulse", [0.1, 0.0])],
                         steps=3, x0=x_s)
    np.testing.assert_allclose(tr.x[1] - x_s, [0.1, 0.0], atol=1e-12)


def test_reactor_step_starts_saturated(controllers):
    """From x(0) = 0 the first located samples use a saturated region."""
    ctrl = controllers("I")
    tr = run_closed_loop(ctrl.model, ctrl.law, ctrl.target, steps=60)
    loc = np.flatnonzero(tr.located())
    first = ctrl.law.regions[tr.region[loc[0]]]
    assert np.abs(first.g).max() > 0
    assert tr.region[-1] == 0
    ut = ctrl.target.u_s - tr.u[loc]
    assert np.abs(ut).max() <= 2 + 1e-7


def test_divergent_plant_is_flagged(controllers):
    ctrl = controllers("I")
    m = ctrl.model
    wild = LtiModel(3.0 * np.eye(2), m.B, m.C, m.Cv, m.constraints, m.frame)
    tr = run_closed_loop(wild, ctrl.law, ctrl.target, steps=200, x0=ctrl.target.x_s + 0.1)
    assert tr.status == "diverged"
    assert len(tr) < 201
    assert np.all(np.isfinite(tr.x))
    assert tr.flag[-1] == 1


def test_trace_is_deterministic(controllers, tmp_path):
    ctrl = controllers("I")
    dist = [ev(3, "impulse", [1.0, -0.5]), ev(100, "additive", [-0.15, 0.0])]
    paths = []
    for i in range(2):
        tr = run_closed_loop(ctrl.model, ctrl.law, ctrl.target, dist, steps=200)
        p = tmp_path / f"t{i}.csv"
        write_trace_csv(tr, p)
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    back = read_trace_csv(paths[0])
    np.testing.assert_array_equal(back["x1"], tr.x[:, 0])
    np.testing.assert_array_equal(back["u2"], tr.u[:, 1])


def test_rejects_bad_arguments(controllers):
    ctrl = controllers("I")
    with pytest.raises(ValueError):
        run_closed_loop(ctrl.model, ctrl.law, ctrl.target, steps=0)
    with pytest.raises(ValueError):
        run_closed_loop(ctrl.model, ctrl.law, ctrl.target, [ev(0, "impulse", [1.0])])


def test_integral_action_removes_offset(controllers):
    ctrl = controllers("II")
    d = [ev(0, "additive", [-0.02, 0.01])]
    tr = run_closed_loop(ctrl.model, ctrl.law, ctrl.target, d, steps=800)
    assert tr.status == "ok"
    np.testing.assert_allclose(tr.x[-1], ctrl.target.x_s, atol=1e-3)
