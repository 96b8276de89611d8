import numpy as np
import pytest

from pwapid import gainsynth, numkit
from pwapid.errors import SingularTarget, SynthesisFailed, TargetInfeasible
from pwapid.gainsynth import PidGains, closed_loop, steady_target, terminal_cost
from pwapid.presets import CSTR_A, CSTR_B
from pwapid.sysmodel import ConstraintSet, LtiModel, augment, augment_pid, augment_plain

from frozen import K_PI, K_PLAIN, SCALAR_DARE_P, U_S, X_S
from oracles import riccati_recursion, spectral_radius


def reactor(Cv):
    return LtiModel(CSTR_A, CSTR_B, np.eye(2), Cv)


def test_pi_gain_matches_riccati_oracle():
    aug = augment(reactor(np.eye(2)), "PI")
    g = gainsynth.synth_pi_gain(aug, np.diag([1, 1, 1e-3, 1e-3]), 0.01 * np.eye(2))
    np.testing.assert_allclose(g.K, K_PI, atol=1e-8)
    np.testing.assert_array_equal(g.K3, np.zeros((2, 2)))
    assert numkit.is_schur(closed_loop(aug, g.K))


def test_plain_gain_matches_riccati_oracle():
    aug = augment_plain(reactor(np.eye(2)[:1]))
    g = gainsynth.lqr(aug, np.eye(2), 0.02 * np.eye(2))
    np.testing.assert_allclose(g.K, K_PLAIN, atol=1e-8)


def test_large_input_weight_gives_small_gain():
    aug = augment(reactor(np.eye(2)[:1]), "plain")
    g = gainsynth.lqr(aug, np.eye(2), 1e6 * np.eye(2))
    assert np.abs(g.K).max() <= 1e-2


def test_scalar_gain_closed_form():
    aug = augment_plain(LtiModel([[0.5]], [[1.0]], [[1.0]], [[1.0]]))
    g = gainsynth.lqr(aug, [[1.0]], [[1.0]])
    P = SCALAR_DARE_P
    assert g.K[0, 0] == pytest.approx(P * 0.5 / (1 + P), abs=1e-12)


def test_pi_gain_requires_pi_augmentation():
    with pytest.raises(ValueError):
        gainsynth.synth_pi_gain(augment_pid(reactor(np.eye(2)[:1])), np.eye(4), np.eye(2))


def test_pi_gain_rejects_uncontrollable():
    m = LtiModel(CSTR_A, np.zeros((2, 2)), np.eye(2), np.eye(2))
    with pytest.raises(SynthesisFailed):
        gainsynth.synth_pi_gain(augment(m, "PI"), np.eye(4), np.eye(2))


def test_gain_blocks_roundtrip():
    K = np.arange(8.0).reshape(2, 4)
    g = PidGains.from_full(K, 2, 1, "PID")
    np.testing.assert_array_equal(g.K, K)
    assert g.K1.shape == (2, 2) and g.K2.shape == (2, 1) and g.K3.shape == (2, 1)


def test_lqr_on_pid_state_has_no_difference_gain():
    aug = augment_pid(reactor(np.eye(2)[:1]))
    K, _ = numkit.lqr_gain(aug.A_m, aug.B_m, np.diag([1, 1, 1e-3, 0.1]), 0.01 * np.eye(2))
    assert np.linalg.norm(K[:, aug.indices("difference")]) <= 1e-9


# ------------------------------------------------------------------ PID via output feedback

@pytest.fixture(scope="module")
def pid_design():
    return gainsynth.synth_pid_gain(reactor(np.eye(2)[:1]))


def test_pid_certificate_margins(pid_design):
    gains, cert = pid_design
    assert np.linalg.eigvalsh(cert.lmi1_lhs())[-1] <= -1e-7
    assert np.linalg.eigvalsh(cert.lmi2_lhs())[-1] <= -1e-7
    # margins re-derived from the stored matrices
    assert np.linalg.eigvalsh(cert.lmi1_lhs())[-1] <= -cert.lmi1_margin / 2
    assert np.linalg.eigvalsh(cert.lmi2_lhs())[-1] <= -cert.lmi2_margin / 2
    assert cert.sigma > 0 and numkit.is_pd(cert.P0)


def test_pid_closed_loop_is_schur(pid_design):
    gains, _ = pid_design
    aug = augment_pid(reactor(np.eye(2)[:1]))
    assert spectral_radius(closed_loop(aug, gains.K)) <= 1 - 1e-6


def test_pid_gain_recovery_formula(pid_design):
    gains, cert = pid_design
    m = reactor(np.eye(2)[:1])
    F = cert.F_sof
    F3 = F[:, 3:]
    T = np.eye(2) + F3 @ m.Cv @ m.B
    np.testing.assert_allclose(-T @ gains.K, F, atol=1e-10)


def test_pid_scalar_first_lmi_is_feasible():
    # with a = 0.5, b = 1 the first inequality 0.25 p - p + sigma < 0 holds at p = 1, sigma = 0.5
    a, p, sigma = 0.5, 1.0, 0.5
    assert a * p * a - p + sigma < 0


# ------------------------------------------------------------------ terminal cost

def test_terminal_cost_zero_dynamics():
    Q = np.diag([2.0, 3.0])
    P = terminal_cost(np.zeros((2, 2)), np.zeros((2, 1)), np.zeros((1, 2)), Q, np.eye(1))
    np.testing.assert_allclose(P, Q)


def test_terminal_cost_scalar():
    P = terminal_cost([[0.5]], [[1.0]], [[0.0]], [[1.0]], [[1.0]])
    assert P[0, 0] == pytest.approx(4 / 3)


def test_terminal_cost_decrease_equality():
    aug = augment(reactor(np.eye(2)), "PI")
    Q, R = np.diag([1, 1, 1e-3, 1e-3]), 0.01 * np.eye(2)
    P = terminal_cost(aug.A_m, aug.B_m, K_PI, Q, R)
    A_K = closed_loop(aug, K_PI)
    resid = A_K.T @ P @ A_K - P + Q + K_PI.T @ R @ K_PI
    assert np.abs(resid).max() <= 1e-9
    # for the LQR gain the terminal cost is the Riccati solution itself
    np.testing.assert_allclose(P, riccati_recursion(aug.A_m, aug.B_m, Q, R), rtol=1e-7)


def test_decrease_on_unit_ball(rng):
    aug = augment(reactor(np.eye(2)), "PI")
    Q, R = np.diag([1, 1, 1e-3, 1e-3]), 0.01 * np.eye(2)
    P = terminal_cost(aug.A_m, aug.B_m, K_PI, Q, R)
    A_K = closed_loop(aug, K_PI)
    Z = rng.normal(size=(1000, 4))
    Z /= np.linalg.norm(Z, axis=1, keepdims=True) / rng.uniform(0, 1, size=(1000, 1))
    stage = Q + K_PI.T @ R @ K_PI
    V = lambda X: np.einsum("ij,jk,ik->i", X, P, X)
    lhs = V(Z @ A_K.T) - V(Z) + np.einsum("ij,jk,ik->i", Z, stage, Z)
    assert lhs.max() <= 1e-8


# ------------------------------------------------------------------ steady targets

def test_target_zero_reference():
    t = steady_target(reactor(np.eye(2)[:1]), [0.0], "PI")
    np.testing.assert_allclose(t.x_s, 0, atol=1e-15)
    np.testing.assert_allclose(t.u_s, 0, atol=1e-15)


def test_target_for_unit_reference():
    m = reactor(np.eye(2)[:1])
    t = steady_target(m, [1.0], "PID", priority="state")
    np.testing.assert_allclose(t.x_s, X_S, atol=1e-12)
    np.testing.assert_allclose(t.u_s, U_S, atol=1e-9)
    np.testing.assert_allclose(m.A @ t.x_s + m.B @ t.u_s, t.x_s, atol=1e-9)
    np.testing.assert_allclose(t.z_s, [1.0, 0.0, 0.0, 0.0], atol=1e-12)


def test_target_joint_priority_is_minimum_norm():
    m = reactor(np.eye(2)[:1])
    t = steady_target(m, [1.0], "PI", priority="joint")
    M = np.block([[CSTR_A - np.eye(2), CSTR_B], [m.Cv, np.zeros((1, 2))]])
    s = np.linalg.lstsq(M, [0, 0, 1.0], rcond=None)[0]
    np.testing.assert_allclose(np.r_[t.x_s, t.u_s], s, atol=1e-10)


def test_target_holds_equilibrium():
    m = reactor(np.eye(2)[:1])
    t = steady_target(m, [1.0], "PI", priority="state")
    x = t.x_s.copy()
    for _ in range(50):
        x = m.A @ x + m.B @ t.u_s
    assert np.linalg.norm(x - t.x_s) <= 1e-9


def test_target_infeasible_under_absolute_bounds():
    cons = ConstraintSet.from_boxes([-0.5, -0.5], [1.5, 2.5], [-2, -2], [2, 2], n=2, m=2)
    m = LtiModel(CSTR_A, CSTR_B, np.eye(2), np.eye(2)[:1], cons, "absolute")
    with pytest.raises(TargetInfeasible):
        steady_target(m, [1.0], "PI", priority="state")


def test_target_singular_rank():
    m = LtiModel(np.eye(2), np.array([[1.0], [0.0]]), np.eye(2), np.eye(2)[1:])
    with pytest.raises(SingularTarget):
        steady_target(m, [1.0], "PI")


def test_target_shape_checked():
    with pytest.raises(ValueError):
        steady_target(reactor(np.eye(2)[:1]), [1.0, 2.0], "PI")
