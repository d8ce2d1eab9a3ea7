import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctql.environment import (
    EnvParams,
    WorldState,
    herder_repulsion,
    in_goal,
    initial_velocities,
    interaction_indicator,
    resample_noise,
    saturate,
    step_world,
    target_velocity,
)
from ctql.errors import SimulationDivergence

P = EnvParams()
finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_defaults():
    assert (P.beta1, P.rho_tau, P.v_tau_max, P.v_h_max, P.beta_max) == (1.0, 3.0, 9.0, 14.0, 1.8)
    assert (P.delta_t_noise, P.x_g, P.rho_g, P.Ts) == (1.0, (0.0, 0.0), 5.0, 1e-3)
    assert P.noise_period_steps == 1000


@pytest.mark.parametrize("kw", [{"rho_g": 0.0}, {"Ts": -1.0}, {"v_h_max": 0.0}, {"Ts": 2.0}])
def test_param_validation(kw):
    with pytest.raises(ValueError):
        EnvParams(**kw)


class TestIndicator:
    @pytest.mark.parametrize("d, expect", [(2.9, 1), (3.0, 0), (100.0, 0)])
    def test_examples(self, d, expect):
        assert interaction_indicator((d, 0.0), (0.0, 0.0), 3.0) == expect


class TestRepulsion:
    def test_nobody_in_range(self):
        assert herder_repulsion((0.0, 0.0), [(3.0, 0.0), (10.0, 10.0)], P) == (0.0, 0.0)

    def test_inverse_square(self):
        assert herder_repulsion((0.0, 0.0), [(-0.5, 0.0)], P) == pytest.approx((4.0, 0.0))

    def test_symmetric_pair_pushes_along_bisector(self):
        fx, fy = herder_repulsion((0.0, 0.0), [(-1.0, -1.0), (-1.0, 1.0)], P)
        assert fy == pytest.approx(0.0, abs=1e-15)
        assert fx > 0

    def test_singularity_guard_is_finite(self):
        f = herder_repulsion((1.0, 1.0), [(1.0, 1.0)], P)
        assert all(math.isfinite(c) for c in f)
        f = herder_repulsion((1.0 + 1e-9, 1.0), [(1.0, 1.0)], P)
        assert f[0] > 0 and math.isfinite(f[0])
        assert math.hypot(*saturate(f, P.v_tau_max)) == pytest.approx(P.v_tau_max)

    @settings(max_examples=200)
    @given(st.floats(0.01, 2.99), st.floats(0, 2 * math.pi))
    def test_head_on_push_is_radial_outward(self, d, ang):
        h = (d * math.cos(ang), d * math.sin(ang))
        f = herder_repulsion((0.0, 0.0), [h], P)
        # the push points from the herder through the target
        assert f[0] * -h[0] + f[1] * -h[1] > 0
        assert math.hypot(*f) == pytest.approx(1 / d**2, rel=1e-9)


class TestNoise:
    def test_zero_cap(self):
        rng = np.random.default_rng(0)
        assert all(resample_noise(rng, 0.0)[0] == 0.0 for _ in range(100))

    def test_uniform_moments(self):
        rng = np.random.default_rng(7)
        draws = np.array([resample_noise(rng, 1.8) for _ in range(100_000)])
        assert draws[:, 0].mean() == pytest.approx(0.9, rel=0.01)
        assert abs(np.cos(draws[:, 1]).mean()) < 0.02
        assert draws[:, 0].min() >= 0 and draws[:, 0].max() < 1.8
        assert draws[:, 1].min() >= 0 and draws[:, 1].max() < 2 * math.pi


class TestSaturate:
    def test_below_cap_unchanged(self):
        assert saturate((3.0, 4.0), 10.0) == (3.0, 4.0)

    def test_three_four_five(self):
        assert saturate((30.0, 40.0), 10.0) == pytest.approx((6.0, 8.0))

    def test_zero(self):
        assert saturate((0.0, 0.0), 5.0) == (0.0, 0.0)

    @settings(max_examples=500)
    @given(finite, finite, st.floats(0.1, 100))
    def test_norm_and_direction(self, x, y, vmax):
        out = saturate((x, y), vmax)
        n_in = math.hypot(x, y)
        n_out = math.hypot(*out)
        assert n_out <= vmax * (1 + 1e-12)
        assert n_out == pytest.approx(min(n_in, vmax), rel=1e-12, abs=1e-300)
        if n_in > 0:
            # parallel and same orientation
            assert abs(x * out[1] - y * out[0]) <= 1e-9 * n_in * max(n_out, 1)
            assert x * out[0] + y * out[1] >= 0


def world(targets, herders, noise=None):
    return WorldState(list(targets), list(herders), noise or [(0.0, 0.0)] * len(targets))


def rngs(n, seed=0):
    return [np.random.default_rng([seed, i]) for i in range(n)]


class TestStepWorld:
    def test_all_still(self):
        w = world([(1.0, 2.0)], [(10.0, 10.0)])
        w2 = step_world(w, [(0.0, 0.0)], P, rngs(1))
        assert w2.targets == [(1.0, 2.0)] and w2.herders == [(10.0, 10.0)]
        assert w2.t == pytest.approx(1e-3) and w2.k == 1

    def test_noise_drift(self):
        w = world([(0.0, 0.0)], [(50.0, 0.0)], [(1.8, 0.0)])
        w2 = step_world(w, [(0.0, 0.0)], P, rngs(1))
        assert w2.targets[0][0] == pytest.approx(0.0018)
        assert w2.target_vel[0] == pytest.approx((1.8, 0.0))

    def test_herder_saturation(self):
        w = world([(0.0, 0.0)], [(50.0, 0.0)])
        w2 = step_world(w, [(100.0, 0.0)], P, rngs(1))
        assert w2.herders[0][0] - 50.0 == pytest.approx(0.014)

    def test_matches_reference_velocity(self):
        w = world([(0.0, 0.0), (5.0, 5.0)], [(0.4, 0.3), (5.5, 5.0)], [(1.0, 1.0), (1.7, 4.0)])
        w2 = step_world(w, [(0.0, 0.0), (0.0, 0.0)], P, rngs(2))
        for i in range(2):
            v = target_velocity(w.targets[i], w.noise[i], w.herders, P)
            assert w2.target_vel[i] == pytest.approx(v, rel=1e-13)
            assert w2.targets[i] == pytest.approx((w.targets[i][0] + 1e-3 * v[0], w.targets[i][1] + 1e-3 * v[1]))

    def test_wrong_command_count(self):
        with pytest.raises(ValueError):
            step_world(world([(0.0, 0.0)], [(1.0, 1.0)]), [], P, rngs(1))

    def test_divergence(self):
        w = world([(0.0, 0.0)], [(50.0, 0.0)])
        with pytest.raises(SimulationDivergence) as exc:
            step_world(w, [(math.nan, 0.0)], P, rngs(1))
        assert exc.value.step == 0

    def test_noise_resampled_exactly_on_period(self):
        w = world([(0.0, 0.0)], [(50.0, 0.0)], [(1.0, 1.0)])
        streams = rngs(1, seed=3)
        changes = []
        for _ in range(3500):
            prev = w.noise
            w = step_world(w, [(0.0, 0.0)], P, streams)
            if w.noise != prev:
                changes.append(w.k)
        assert changes == [1000, 2000, 3000]

    def test_no_noise_no_herders_is_stationary(self):
        p = EnvParams(beta_max=0.0)
        w = world([(3.0, -2.0), (10.0, 1.0)], [(40.0, 40.0)])
        for _ in range(2500):
            w = step_world(w, [(0.0, 0.0)], p, rngs(2))
        assert w.targets == [(3.0, -2.0), (10.0, 1.0)]

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=4),
        st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=3),
        st.floats(-50, 50),
        st.floats(-50, 50),
    )
    def test_displacement_bounds(self, targets, herders, ux, uy):
        w = world(targets, herders, [(1.8, 0.3)] * len(targets))
        w2 = step_world(w, [(ux, uy)] * len(herders), P, rngs(len(targets)))
        for a, b in zip(w.targets, w2.targets):
            assert math.dist(a, b) <= P.v_tau_max * P.Ts * (1 + 1e-9)
        for a, b in zip(w.herders, w2.herders):
            assert math.dist(a, b) <= P.v_h_max * P.Ts * (1 + 1e-9)

    def test_deterministic(self):
        def run():
            w = world([(1.0, 0.0)], [(0.2, 0.1)], [(1.0, 2.0)])
            s = rngs(1, seed=11)
            for k in range(3000):
                w = step_world(w, [(math.sin(k), math.cos(k))], P, s)
            return w
        assert run() == run()


class TestWorldState:
    def test_validate(self):
        world([(0.0, 0.0)], [(1.0, 1.0)], [(1.0, 1.0)]).validate(1.8)
        with pytest.raises(ValueError):
            world([(math.inf, 0.0)], [(1.0, 1.0)]).validate()
        with pytest.raises(ValueError):
            world([(0.0, 0.0)], [(1.0, 1.0)], [(2.0, 0.0)]).validate(1.8)
        with pytest.raises(ValueError):
            world([(0.0, 0.0)], [(1.0, 1.0)], [(1.0, 7.0)]).validate(1.8)

    def test_initial_velocities(self):
        w = world([(0.0, 0.0)], [(-0.5, 0.0)], [(0.0, 0.0)])
        assert initial_velocities(w, P) == [pytest.approx((4.0, 0.0))]


class TestGoal:
    def test_examples(self):
        assert in_goal((0.0, 0.0), P)
        assert not in_goal((5.0, 0.0), P)
        assert in_goal((3.0, 3.0), P)
