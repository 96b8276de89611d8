import numpy as np
import pytest

from pwapid.errors import SynthesisFailed
from pwapid.gainsynth import SteadyTarget
from pwapid.mpqp import condense, solve_online
from pwapid.pipeline import (SchemeConfig, config_from_meta, deviation_rows, is_lqr_consistent,
                             retarget, spec_from_meta, spec_for_reference, synthesize)
from pwapid.presets import cstr_model
from pwapid.sysmodel import ConstraintSet, LtiModel, augment


def test_meta_rebuilds_the_same_qp(controllers):
    ctrl = controllers("III")
    model, spec, target = spec_from_meta(ctrl.law.meta)
    qp = condense(spec)
    np.testing.assert_allclose(qp.H, ctrl.qp.H, rtol=1e-14)
    np.testing.assert_allclose(qp.S, ctrl.qp.S, rtol=1e-14)
    np.testing.assert_array_equal(target.z_s, ctrl.target.z_s)
    assert spec.formulation == "prestabilized"


def test_lqr_consistency_flags(controllers):
    assert is_lqr_consistent(controllers("I").spec)
    assert not is_lqr_consistent(controllers("III").spec)


def test_config_from_meta(controllers):
    cfg = config_from_meta(controllers("I").law.meta, [0.5])
    assert cfg.kind == "plain" and cfg.N == 2
    np.testing.assert_array_equal(cfg.v_ref, [0.5])


def test_deviation_frame_spec_is_reference_free(controllers):
    meta = controllers("I").law.meta
    _, spec, target = spec_for_reference(meta, [0.3])
    np.testing.assert_array_equal(spec.G, controllers("I").spec.G)
    assert target.x_s[0] == pytest.approx(0.3)


def test_absolute_frame_rows_shift_with_target():
    cons = ConstraintSet.from_boxes([-1, -1], [1, 1], [-1], [1], n=2, m=1)
    m = LtiModel(np.diag([0.5, 0.5]), [[1.0], [0.0]], np.eye(2), [[1.0, 0.0]], cons, "absolute")
    aug = augment(m, "plain")
    t = SteadyTarget(np.array([0.2, 0.0]), np.array([0.1]), np.array([0.2]), np.array([0.2, 0.0]))
    Ez, Fu, G = deviation_rows(m, aug, t)
    # x = x_s - x~ and u = u_s - u~ satisfy the original rows iff the shifted rows hold
    xt, ut = np.array([0.1, -0.3]), np.array([0.05])
    lhs = Ez @ xt + Fu @ ut - G
    orig = cons.E @ (t.x_s - xt) + cons.F @ (t.u_s - ut) - cons.G
    np.testing.assert_allclose(lhs, orig, atol=1e-15)


def test_wrong_weight_shape_fails():
    cfg = SchemeConfig("x", "pi", 2, np.eye(2), np.eye(2), np.eye(2)[:1], [0.0])
    with pytest.raises(SynthesisFailed):
        synthesize(cstr_model(), cfg)


def test_unknown_scheme_rejected():
    with pytest.raises(ValueError):
        SchemeConfig("x", "pd", 2, np.eye(2), np.eye(2), np.eye(2)[:1], [0.0])


def test_retarget_keeps_gain(controllers):
    ctrl = controllers("I")
    new = retarget(ctrl, [0.5])
    np.testing.assert_array_equal(new.gains.K, ctrl.gains.K)
    assert new.target.x_s[0] == pytest.approx(0.5)
    assert len(new.law.regions) == len(ctrl.law.regions)


def test_unconstrained_optimizer_is_the_pid_gain(controllers):
    ctrl = controllers("III")
    z = 1e-4 * np.array([1.0, -1.0, 0.5, 0.2])
    sol = solve_online(ctrl.qp, z)
    np.testing.assert_allclose(ctrl.qp.first_input(sol.U, z), -ctrl.gains.K @ z, atol=1e-12)
