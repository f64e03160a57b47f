import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from loosegait.controller import (BodyState, ControllerParams, FallOver, SupportState,
                                  com_ground_projection, compute_support, compute_torque,
                                  gravity_torque, ik_offset_correction, integrate_body)
from loosegait.geometry import GRAVITY, SagittalFrame, Segment2, Vec3
from loosegait.heightfield import HeightField, generate_slope

FWD = Vec3(1.0, 0.0, 0.0)


def flat_terrain():
    return HeightField.flat(40, 40, 0.1, 0.0, origin=Vec3(-2.0, 0.0, -2.0))


def support_at(target, u=(1.0, 0.0)):
    return SupportState(Segment2.ordered(target, target), target, u)


def body_with_projection_error(err, omega=0.0):
    # upright body whose COM sits at s = 0, target `err` ahead of it
    body = BodyState(Vec3(0.0, 1.0, 0.0), 0.0, omega)
    frame = SagittalFrame(body.com, FWD)
    return body, frame, support_at((err, -1.3))


class TestSupport:
    def test_symmetric_feet_flat(self):
        frame = SagittalFrame(Vec3(), FWD)
        s = compute_support((Vec3(-0.2, 0, 0), Vec3(0.2, 0, 0)), frame, flat_terrain())
        assert s.target[0] == 0.0
        assert s.slope_dir == (1.0, 0.0)

    def test_slope_tangent(self):
        hf = generate_slope(40, 40, 0.1, math.atan(0.1), origin=Vec3(-2.0, 0.0, -2.0))
        frame = SagittalFrame(Vec3(), FWD)
        feet = (Vec3(-0.2, -0.02, 0), Vec3(0.2, 0.02, 0))
        s = compute_support(feet, frame, hf)
        n = math.hypot(1.0, 0.1)
        assert s.slope_dir == pytest.approx((1 / n, 0.1 / n), abs=1e-12)

    def test_coincident_feet(self):
        frame = SagittalFrame(Vec3(), FWD)
        p = Vec3(0.3, 0.0, 0.0)
        s = compute_support((p, p), frame, flat_terrain())
        assert s.target == (0.3, 0.0)
        assert s.segment.a == s.segment.b
        assert s.slope_dir == (1.0, 0.0)

    @given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
    def test_invariants(self, xa, xb, ya, yb):
        frame = SagittalFrame(Vec3(0.1, 0.2, 0.0), FWD)
        s = compute_support((Vec3(xa, ya, 0.0), Vec3(xb, yb, 0.0)), frame, flat_terrain())
        assert s.target == s.segment.midpoint
        assert s.segment.a[0] <= s.segment.b[0]
        assert math.hypot(*s.slope_dir) == pytest.approx(1.0, abs=1e-12)


class TestTorque:
    def test_reference_gains(self):
        body, frame, support = body_with_projection_error(0.1)
        tau = compute_torque(body, support, ControllerParams(30.0, 6.0, 0.0), frame)
        assert tau == pytest.approx(3.0, abs=1e-12)

    def test_equilibrium(self):
        body, frame, support = body_with_projection_error(0.0)
        assert compute_torque(body, support, ControllerParams(30.0, 6.0, 10.0), frame) == 0.0

    def test_rate_terms(self):
        body, frame, support = body_with_projection_error(0.0, omega=0.5)
        assert compute_torque(body, support, ControllerParams(30.0, 6.0, 10.0), frame) == -2.0

    def test_projection_on_slope_line(self):
        body, frame, _ = body_with_projection_error(0.0)
        n = math.hypot(1.0, 0.1)
        support = support_at((0.4, -1.0), (1 / n, 0.1 / n))
        ps, ph = com_ground_projection(body, support, frame)
        assert ps == 0.0
        assert ph == pytest.approx(-1.0 - 0.04, abs=1e-12)


def random_state(rng):
    tilt = rng.uniform(-1.2, 1.2)
    root = Vec3(*rng.uniform(-3, 3, size=3))
    heading = rng.uniform(0, 2 * math.pi)
    fwd = Vec3(math.cos(heading), 0.0, math.sin(heading))
    body = BodyState(root, tilt, 0.0, heading=fwd, com_height_offset=rng.uniform(0.1, 0.5))
    frame = SagittalFrame(Vec3(*rng.uniform(-3, 3, size=3)), fwd)
    slope = rng.uniform(-0.6, 0.6)
    u = (math.cos(slope), math.sin(slope))
    target = tuple(rng.uniform(-3, 3, size=2))
    return body, frame, support_at(target, u)


def projection_error(body, support, frame):
    ps, ph = com_ground_projection(body, support, frame)
    (ts, th), (us, uh) = support.target, support.slope_dir
    return (ts - ps) * us + (th - ph) * uh


class TestTorqueProperties:
    def test_sign_and_linearity_random_states(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            body, frame, support = random_state(rng)
            alpha = rng.uniform(0.1, 100.0)
            beta = rng.uniform(0.0, 10.0)
            p1 = ControllerParams(alpha, beta, rng.uniform(0, 20))
            p2 = ControllerParams(2 * alpha, beta, p1.angular_drag)
            tau = compute_torque(body, support, p1, frame)
            err = projection_error(body, support, frame)
            assert tau == pytest.approx(alpha * err, rel=1e-9, abs=1e-9)
            if abs(err) > 1e-9:
                assert math.copysign(1.0, tau) == math.copysign(1.0, err)
            assert compute_torque(body, support, p2, frame) == pytest.approx(2 * tau, rel=1e-9,
                                                                             abs=1e-9)

    def test_exact_equilibrium_random_gains(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            body = BodyState(Vec3(*rng.uniform(-3, 3, size=3)), rng.uniform(-1, 1), 0.0)
            frame = SagittalFrame(body.com, FWD)
            support = support_at((0.0, rng.uniform(-2, 0)),
                                 (math.cos(0.2), math.sin(0.2)))
            params = ControllerParams(rng.uniform(0, 100), rng.uniform(-10, 10), rng.uniform(0, 20))
            assert compute_torque(body, support, params, frame) == 0.0


def simulate_swing(theta0, seconds=10.0, dt=1 / 60, params=ControllerParams(30.0, 6.0, 10.0)):
    hf = flat_terrain()
    feet = (Vec3(-0.2, 0.0, 0.0), Vec3(0.2, 0.0, 0.0))
    body = BodyState(Vec3(0.0, 0.95, 0.0), theta0)
    tilts = [theta0]
    for _ in range(int(round(seconds / dt))):
        frame = SagittalFrame(body.com, FWD)
        support = compute_support(feet, frame, hf)
        tau = compute_torque(body, support, params, frame) + gravity_torque(body, 0.13)
        body = integrate_body(body, tau, -GRAVITY, dt)
        tilts.append(body.tilt)
    return np.array(tilts)


def envelope_peaks(tilts):
    a = np.abs(tilts)
    return [a[i] for i in range(1, len(a) - 1) if a[i] >= a[i - 1] and a[i] >= a[i + 1]]


class TestIntegration:
    def test_no_torque_no_motion(self):
        body = BodyState(Vec3(0, 1, 0), 0.2, 0.0)
        assert integrate_body(body, 0.0, -GRAVITY, 1 / 60).tilt == 0.2

    def test_arithmetic(self):
        body = BodyState(Vec3(0, 1, 0), 0.0, 0.0, inertia=2.0)
        out = integrate_body(body, 4.0, -GRAVITY, 0.5)
        assert out.angular_velocity == 1.0
        assert out.tilt == 0.5

    def test_gravity_moves_root(self):
        out = integrate_body(BodyState(Vec3(0, 1, 0)), 0.0, Vec3(), 0.1)
        assert out.linear_velocity.y == pytest.approx(-0.981, abs=1e-12)

    def test_fall_over(self):
        with pytest.raises(FallOver):
            integrate_body(BodyState(Vec3(0, 1, 0), 1.5, 10.0), 0.0, -GRAVITY, 0.1)

    def test_gravity_torque_dead_zone(self):
        assert gravity_torque(BodyState(Vec3(), 0.2), 0.13) == 0.0
        assert gravity_torque(BodyState(Vec3(), 1.0), 0.13) > 0.0
        assert gravity_torque(BodyState(Vec3(), -1.0), 0.13) < 0.0

    @pytest.mark.parametrize("theta0", [-0.29, -0.1, 0.05, 0.2, 0.29])
    def test_bounded_swing(self, theta0):
        tilts = simulate_swing(theta0)
        assert np.abs(tilts).max() <= abs(theta0) + 1e-12
        peaks = envelope_peaks(tilts)
        assert all(b <= a + 1e-12 for a, b in zip(peaks, peaks[1:]))
        assert abs(tilts[-1]) < 0.01 * abs(theta0)

    def test_deterministic(self):
        assert simulate_swing(0.2, 2.0).tobytes() == simulate_swing(0.2, 2.0).tobytes()


class TestOffsetCorrection:
    def test_on_target(self):
        feet = (Vec3(0, 0, 0), Vec3(1, 0, 0))
        assert ik_offset_correction(feet, feet) == Vec3()

    def test_uniform_gap(self):
        feet = (Vec3(0, 0, -0.1), Vec3(0.5, 0, 0.1))
        targets = tuple(f + Vec3(0.01, 0, 0) for f in feet)
        off = ik_offset_correction(feet, targets)
        assert off.x == pytest.approx(0.01, abs=1e-15)
        assert off.y == 0.0 and off.z == 0.0

    def test_cap(self):
        feet = (Vec3(), Vec3())
        off = ik_offset_correction(feet, (Vec3(0.5, 0, 0), Vec3(0.5, 0, 0)))
        assert off.norm() == pytest.approx(0.02, abs=1e-15)
        assert off.x > 0
