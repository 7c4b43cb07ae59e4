"""Integrator fidelity: exact grids, jump conventions, failure handling."""

import math

import numpy as np
import pytest

from impstab.errors import InvalidInterval, InvalidSystem, NonFiniteState
from impstab.impulses import ImpulseSequence, periodic_family
from impstab.inputs import (
    HybridInput,
    InputSignal,
    constant_signal,
    pulse_train,
    zero_signal,
)
from impstab.library import make_linear_system
from impstab.sim import (
    DIVERGENCE_RADIUS,
    STATUS_COMPLETE,
    STATUS_DIVERGED,
    STATUS_STEP_FAILURE,
    Trajectory,
    closed_form_linear_impulsive,
    integral_residual,
    simulate,
)
from impstab.systems import ImpulsiveSystem

# x(1) for dx/dt = -x, x(0) = 1, one jump halving the state at t = 0.5:
# 0.5 * e^{-1}.
HALVED_EXP_ORACLE = 0.18393972058572117


def hybrid(u, *times):
    return HybridInput(u, ImpulseSequence.from_times(np.asarray(times, dtype=float)))


class TestAgainstClosedForm:
    def test_hand_oracle(self):
        sys1 = make_linear_system(-1.0, 0.5)
        w = hybrid(zero_signal(), 0.5)
        traj = simulate(sys1, 0.0, [1.0], w, 1.0, 1e-3)
        assert abs(traj.states[-1][0] - HALVED_EXP_ORACLE) <= 1e-9
        exact = closed_form_linear_impulsive(-1.0, 0.5, 0.0, [1.0], w, 1.0, 1e-3)
        assert abs(exact.states[-1][0] - HALVED_EXP_ORACLE) <= 1e-15

    def test_identical_grids(self):
        sys1 = make_linear_system(-0.7, 0.4)
        w = HybridInput(
            pulse_train(start=0.3, period=0.9, width=0.25, amplitude=1.2, count=4),
            periodic_family(0.5).sampler(3, 6.0),
        )
        traj = simulate(sys1, 0.25, [1.5], w, 6.0, 1e-2)
        exact = closed_form_linear_impulsive(-0.7, 0.4, 0.25, [1.5], w, 6.0, 1e-2)
        assert np.array_equal(traj.times, exact.times)
        assert len(traj.jumps) == len(exact.jumps)
        for ra, rb in zip(traj.jumps, exact.jumps):
            assert ra.time == rb.time

    def test_accuracy_random_linear(self):
        rng = np.random.default_rng(5)
        for _ in range(6):
            a = float(rng.uniform(-2.0, 0.5))
            jf = float(rng.uniform(-0.8, 0.9))
            t0 = float(rng.uniform(0.0, 1.0))
            x0 = float(rng.uniform(-3.0, 3.0))
            amp = float(rng.uniform(-2.0, 2.0))
            w = HybridInput(
                constant_signal(amp),
                ImpulseSequence.from_times(
                    np.sort(rng.uniform(t0 + 0.05, t0 + 4.0, size=3))
                ),
            )
            sys1 = make_linear_system(a, jf)
            traj = simulate(sys1, t0, [x0], w, t0 + 4.0, 1e-3)
            exact = closed_form_linear_impulsive(a, jf, t0, [x0], w, t0 + 4.0, 1e-3)
            err = float(np.max(np.abs(traj.states - exact.states)))
            assert err <= 1e-9

    def test_fourth_order_convergence(self):
        sys1 = make_linear_system(-1.3, 0.6)
        w = hybrid(constant_signal(0.8), 1.0, 2.2)

        def err(step):
            traj = simulate(sys1, 0.0, [2.0], w, 3.0, step)
            exact = closed_form_linear_impulsive(-1.3, 0.6, 0.0, [2.0], w, 3.0, step)
            return float(np.max(np.abs(traj.states - exact.states)))

        ratio = err(0.1) / err(0.05)
        assert 8.0 <= ratio <= 40.0  # RK4 halving: ideally ~16


class TestJumpConventions:
    def test_jump_at_start_not_applied(self):
        sys1 = make_linear_system(0.0, 0.5)
        w = hybrid(zero_signal(), 1.0, 2.0)
        traj = simulate(sys1, 1.0, [4.0], w, 1.5, 1e-2)
        assert traj.states[0][0] == 4.0
        assert len(traj.jumps) == 0

    def test_jump_at_horizon_applied(self):
        sys1 = make_linear_system(0.0, 0.5)
        w = hybrid(zero_signal(), 2.0)
        traj = simulate(sys1, 0.0, [4.0], w, 2.0, 1e-2)
        assert len(traj.jumps) == 1
        assert traj.jumps[0].time == 2.0
        assert traj.states[-1][0] == 2.0  # sample at the horizon is post-jump

    def test_right_continuity_and_increment(self):
        sys1 = make_linear_system(-1.0, 0.25)
        w = hybrid(constant_signal(1.0), 1.0)
        traj = simulate(sys1, 0.0, [3.0], w, 2.0, 1e-3)
        rec = traj.jumps[0]
        i = int(np.searchsorted(traj.times, 1.0))
        assert traj.times[i] == 1.0
        assert traj.states[i][0] == rec.x_post[0]
        # increment form: x_post = x_pre + g(tau, x_pre, u(tau))
        incr = sys1.jump(1.0, rec.x_pre.tolist(), (1.0,))
        assert abs(rec.x_post[0] - (rec.x_pre[0] + incr[0])) <= 1e-15
        assert rec.time in traj.pre_states()

    def test_events_exactly_on_grid(self):
        sys1 = make_linear_system(-0.5, 0.9)
        u = InputSignal(np.array([0.37, 1.11]), np.array([[1.0], [-0.5]]))
        w = HybridInput(u, ImpulseSequence.from_times(np.array([0.73, 1.9])))
        traj = simulate(sys1, 0.1, [1.0], w, 2.5, 0.03)
        ts = set(float(t) for t in traj.times)
        for event in (0.37, 0.73, 1.11, 1.9, 0.1, 2.5):
            assert event in ts
        assert float(np.max(np.diff(traj.times))) <= 0.03 + 1e-12

    def test_zero_length_window(self):
        sys1 = make_linear_system(-1.0, 0.5)
        traj = simulate(sys1, 1.0, [2.0], hybrid(zero_signal()), 1.0, 1e-2)
        assert traj.end_time == 1.0
        assert traj.status == STATUS_COMPLETE
        assert len(traj.times) == 1


class TestFailureModes:
    def test_divergence_stops_run(self):
        sys1 = make_linear_system(4.0, 3.0)
        w = HybridInput(zero_signal(), periodic_family(0.5).sampler(0, 30.0))
        traj = simulate(sys1, 0.0, [1.0], w, 30.0, 1e-2)
        assert traj.status == STATUS_DIVERGED
        assert traj.norms()[-1] >= DIVERGENCE_RADIUS
        assert traj.end_time < 30.0
        assert np.all(np.isfinite(traj.states))

    def test_nonfinite_strict_raises(self):
        def bad_flow(t, x, u):
            return (float("nan"),) if t > 1.0 else (-x[0],)

        sys1 = ImpulsiveSystem("bad", 1, 1, bad_flow, lambda t, x, u: (0.0,))
        w = hybrid(zero_signal())
        with pytest.raises(NonFiniteState):
            simulate(sys1, 0.0, [1.0], w, 2.0, 1e-2)

    def test_nonfinite_lenient_truncates(self):
        def bad_flow(t, x, u):
            return (float("nan"),) if t > 1.0 else (-x[0],)

        sys1 = ImpulsiveSystem("bad", 1, 1, bad_flow, lambda t, x, u: (0.0,))
        traj = simulate(sys1, 0.0, [1.0], hybrid(zero_signal()), 2.0, 1e-2, strict=False)
        assert traj.status == STATUS_STEP_FAILURE
        assert np.all(np.isfinite(traj.states))
        assert traj.end_time <= 2.0

    def test_bad_windows_rejected(self):
        sys1 = make_linear_system(-1.0, 0.5)
        w = hybrid(zero_signal())
        with pytest.raises(InvalidInterval):
            simulate(sys1, 1.0, [1.0], w, 0.5, 1e-2)
        with pytest.raises(InvalidInterval):
            simulate(sys1, 0.0, [1.0], w, 1.0, 0.0)

    def test_dimension_mismatch_rejected(self):
        sys1 = make_linear_system(-1.0, 0.5)
        with pytest.raises(InvalidSystem):
            simulate(sys1, 0.0, [1.0, 2.0], hybrid(zero_signal()), 1.0, 1e-2)
        with pytest.raises(InvalidSystem):
            simulate(sys1, 0.0, [1.0], hybrid(zero_signal(dim=2)), 1.0, 1e-2)


class TestIntegralResidual:
    def test_small_on_simulated_path(self):
        sys1 = make_linear_system(-1.0, 0.5)
        w = hybrid(constant_signal(1.0), 0.7, 1.9)
        traj = simulate(sys1, 0.0, [2.0], w, 3.0, 1e-2)
        assert integral_residual(traj, sys1) <= 1e-8

    def test_detects_tampering(self):
        sys1 = make_linear_system(-1.0, 0.5)
        w = hybrid(constant_signal(1.0), 0.7)
        traj = simulate(sys1, 0.0, [2.0], w, 2.0, 1e-2)
        states = traj.states.copy()
        states[len(states) // 2, 0] += 1e-3
        forged = Trajectory(
            t0=traj.t0,
            times=traj.times,
            states=states,
            jumps=traj.jumps,
            status=traj.status,
            step=traj.step,
            input_used=traj.input_used,
        )
        assert integral_residual(forged, sys1) >= 5e-4

    def test_requires_an_input(self):
        sys1 = make_linear_system(-1.0, 0.5)
        w = hybrid(zero_signal())
        traj = simulate(sys1, 0.0, [1.0], w, 1.0, 1e-2)
        bare = Trajectory(
            t0=traj.t0,
            times=traj.times,
            states=traj.states,
            jumps=traj.jumps,
            status=traj.status,
            step=traj.step,
        )
        with pytest.raises(InvalidSystem):
            integral_residual(bare, sys1)
        assert integral_residual(bare, sys1, w) <= 1e-8


class TestSerialization:
    def _sample(self):
        sys1 = make_linear_system(-0.9, 0.3)
        w = hybrid(constant_signal(0.5), 0.8, 1.6)
        return simulate(sys1, 0.2, [1.7], w, 2.5, 5e-2)

    def test_csv_round_trip(self, tmp_path):
        traj = self._sample()
        path = tmp_path / "traj.csv"
        traj.to_csv(path)
        back = Trajectory.from_csv(path)
        assert np.array_equal(back.times, traj.times)
        assert np.array_equal(back.states, traj.states)
        assert len(back.jumps) == len(traj.jumps)
        for ra, rb in zip(back.jumps, traj.jumps):
            assert ra.time == rb.time
            assert np.array_equal(ra.x_pre, rb.x_pre)
            assert np.array_equal(ra.x_post, rb.x_post)

    def test_json_payload(self, tmp_path):
        import json

        traj = self._sample()
        path = tmp_path / "traj.json"
        traj.to_json(path)
        payload = json.loads(path.read_text())
        assert payload["t0"] == 0.2
        assert payload["status"] == STATUS_COMPLETE
        assert len(payload["times"]) == len(traj.times)
        assert len(payload["jumps"]) == 2
        rec = payload["jumps"][0]
        assert rec["x_post"][0] == pytest.approx(0.3 * rec["x_pre"][0])

    def test_norms_and_end_time(self):
        traj = self._sample()
        assert traj.norms().shape == traj.times.shape
        assert traj.end_time == 2.5
        assert traj.dim == 1
        assert math.isclose(float(traj.x0[0]), 1.7)
