from __future__ import annotations

import numpy as np
import pytest

from pegring import quat
from pegring.demos import synth_demo
from pegring.dmp import (
    CanonicalSystem,
    DegenerateDemo,
    DegenerateGoal,
    DmpState,
    MollifierBasis,
    Obstacle,
    RankDeficient,
    TrajectorySample,
    generalize,
    integrate_step,
    learn,
    load_demo_csv,
    load_model,
    obstacle_gradient,
    potential,
    quaternion_step,
    rollout,
    save_demo_csv,
    save_model,
)

GQ = quat.pointing([0.0, 0.0, -1.0])
X0 = np.array([0.01, -0.04, 0.02])
G = np.array([-0.04, 0.03, 0.005])


@pytest.fixture(scope="module")
def model():
    demo = synth_demo("move_ring", X0, G, duration=2.0)
    return learn([demo], gesture="move_ring")


class TestCanonical:
    def test_phase_matches_closed_form(self):
        cs = CanonicalSystem(alpha=4.0, tau=1.0)
        dt = 0.01
        for i in range(1, 201):
            cs.step(dt)
            assert abs(cs.s - np.exp(-4.0 * i * dt)) < 1e-6

    def test_strictly_decreasing_from_one(self):
        cs = CanonicalSystem(alpha=4.0, tau=2.0)
        assert cs.s == 1.0
        prev = cs.s
        for _ in range(50):
            cur = cs.step(0.01)
            assert cur < prev
            prev = cur


class TestLearn:
    def test_replay_reproduces_own_demo(self, model):
        res = rollout(model, X0, G, q0=quat.IDENTITY, g_q=GQ, tau=1.0, duration=2.0)
        demo = synth_demo("move_ring", X0, G, duration=2.0)
        demo_x = np.array([s.x for s in demo])
        err = np.sqrt(np.mean(np.sum((res["x"][: len(demo_x)] - demo_x) ** 2, axis=1)))
        assert err < 1e-3

    def test_straight_line_forcing_matches_analytic_residual(self):
        # constant-speed line: f(t) = (g-x0) * (d/(k*T) - 1 + t/T + s(t))
        duration = 1.5
        n = 151
        ts = np.linspace(0, duration, n)
        demo = [TrajectorySample(t=float(t), x=X0 + (t / duration) * (G - X0),
                                 q=quat.IDENTITY) for t in ts]
        m = learn([demo], gesture="line")
        k, d, alpha = m.k_gain, m.d_gain, m.alpha
        base = m.base_transform()
        for t in np.linspace(0.1, duration - 0.1, 8):
            s = np.exp(-alpha * t)
            f_learned_world = base.apply(m.basis.forcing(s, m.weights))
            coeff = d / (k * duration) - 1.0 + t / duration + s
            f_true = (G - X0) * coeff
            assert np.linalg.norm(f_learned_world - f_true) < 2e-2 * max(
                np.linalg.norm(f_true), 1.0)

    def test_unforced_solution_gives_zero_weights(self):
        # closed form of the critically damped system with the s input,
        # sampled until it has settled to machine level
        k = 150.0
        d = 2 * np.sqrt(k)
        alpha = 4.0
        w = np.sqrt(k)
        c = -k / (alpha * alpha - d * alpha + k)
        a = -1.0 - c
        b = w * a + alpha * c
        duration = 10.0
        ts = np.linspace(0, duration, int(2000 * duration) + 1)
        disp = G - X0
        xs = (G[None, :]
              + np.outer(a * np.exp(-w * ts) + b * ts * np.exp(-w * ts)
                         + c * np.exp(-alpha * ts), disp))
        demo = [TrajectorySample(t=float(t), x=x, q=quat.IDENTITY)
                for t, x in zip(ts, xs)]
        m = learn([demo], gesture="unforced", hz=2000.0)
        assert np.max(np.abs(m.weights)) < 1e-6

    def test_multi_demo_beats_single_noisy_demo(self):
        clean = lambda i: synth_demo("move_ring", X0, G, duration=2.0,
                                     noise=0.004, seed=100 + i)
        demos = [clean(0), clean(1), clean(2)]
        m_all = learn(demos, gesture="avg")
        worst = None
        for i in range(3):
            m_one = learn([demos[i]], gesture="one")
            res = rollout(m_one, X0, G, g_q=GQ, tau=1.0, duration=2.0)
            ref = np.array([s.x for s in synth_demo("move_ring", X0, G, duration=2.0)])
            err = np.sqrt(np.mean(np.sum((res["x"][: len(ref)] - ref) ** 2, axis=1)))
            worst = err if worst is None else max(worst, err)
        res = rollout(m_all, X0, G, g_q=GQ, tau=1.0, duration=2.0)
        ref = np.array([s.x for s in synth_demo("move_ring", X0, G, duration=2.0)])
        err_all = np.sqrt(np.mean(np.sum((res["x"][: len(ref)] - ref) ** 2, axis=1)))
        assert err_all <= worst

    def test_degenerate_demo_rejected(self):
        demo = [TrajectorySample(t=0.1 * i, x=X0.copy(), q=quat.IDENTITY)
                for i in range(20)]
        with pytest.raises(DegenerateDemo):
            learn([demo])

    def test_rank_deficient_rejected(self):
        # 10 samples cannot determine 15 weights
        ts = np.linspace(0, 0.09, 10)
        demo = [TrajectorySample(t=float(t), x=X0 + t * np.array([1.0, 0, 0]),
                                 q=quat.IDENTITY) for t in ts]
        with pytest.raises(RankDeficient):
            learn([demo], hz=100.0)

    def test_too_few_samples_rejected(self):
        demo = [TrajectorySample(t=0.1 * i, x=X0 + 0.01 * i, q=quat.IDENTITY)
                for i in range(5)]
        with pytest.raises(ValueError):
            learn([demo])


class TestIntegrate:
    def test_equilibrium_is_fixed_point(self, model):
        state = DmpState(x=G.copy(), v=np.zeros(3), q=GQ.copy(),
                         omega=np.zeros(3), s=1e-9, x0=X0.copy(),
                         q0=quat.IDENTITY.copy())
        nxt = integrate_step(model, state, G, GQ, dt=0.01, tau=1.0)
        assert np.linalg.norm(nxt.x - G) < 1e-6
        assert np.linalg.norm(nxt.v) < 1e-4

    def test_zero_weights_converges_monotonically(self, model):
        m = type(model)(gesture="plain", basis=model.basis,
                        weights=np.zeros_like(model.weights),
                        quat_weights=np.zeros_like(model.quat_weights),
                        x0_learn=model.x0_learn, g_learn=model.g_learn,
                        duration_learn=1.0)
        res = rollout(m, X0, G, g_q=GQ, tau=1.0, duration=10.0)
        dist = np.linalg.norm(res["x"] - G, axis=1)
        assert dist[-1] < 1e-3
        tail = dist[50:]
        assert np.all(np.diff(tail) < 1e-12)

    def test_goal_convergence_across_random_pairs(self, model):
        rng = np.random.default_rng(7)
        checked = 0
        t_final = 1.5 * model.duration_learn
        while checked < 100:
            a = rng.uniform(-0.3, 0.3, 3)
            b = a + rng.uniform(-0.4, 0.4, 3)
            d = np.linalg.norm(b - a)
            if not 0.01 <= d <= 0.5:
                continue
            res = rollout(model, a, b, g_q=GQ, tau=1.0, duration=t_final)
            assert np.linalg.norm(res["x"][-1] - b) < 1e-3
            checked += 1

    def test_moving_goal_tracked(self, model):
        g2 = G + np.array([0.02, -0.015, 0.0])

        def goal_fn(t):
            return (G if t < 0.8 else g2), GQ

        res = rollout(model, X0, G, g_q=GQ, tau=1.0, duration=3.0,
                      goal_fn=goal_fn)
        assert np.linalg.norm(res["x"][-1] - g2) < 1e-3

    def test_time_scaling_same_path(self, model):
        r1 = rollout(model, X0, G, g_q=GQ, tau=1.0, dt=0.01, duration=2.0)
        r2 = rollout(model, X0, G, g_q=GQ, tau=2.0, dt=0.02, duration=4.0)
        assert r2["t"][-1] == pytest.approx(2 * r1["t"][-1])
        assert np.max(np.abs(r1["x"] - r2["x"])) < 1e-6

    def test_quaternion_norm_preserved(self, model):
        res = rollout(model, X0, G, q0=quat.from_axis_angle([0, 1, 0], 0.3),
                      g_q=GQ, tau=1.0, duration=3.0)
        assert np.max(np.abs(np.linalg.norm(res["q"], axis=1) - 1.0)) < 1e-9


class TestGeneralize:
    def test_identity_when_displacement_unchanged(self, model):
        m = generalize(model, model.x0_learn, model.g_learn)
        assert m.scale == pytest.approx(1.0)
        assert abs(m.rotation[0]) > 1 - 1e-12

    def test_rotation_equivariance_perpendicular_axis(self, model):
        disp = G - X0
        axis = np.cross(disp, [0.0, 0.0, 1.0])
        axis /= np.linalg.norm(axis)
        for angle in (np.pi / 2, 0.7, -1.1):
            r = quat.from_axis_angle(axis, angle)
            res = rollout(model, X0, G, g_q=GQ, tau=1.0, duration=2.0)
            res_r = rollout(model, quat.rotate(r, X0), quat.rotate(r, G),
                            g_q=GQ, tau=1.0, duration=2.0)
            back = np.array([quat.rotate(quat.conjugate(r), p) for p in res_r["x"]])
            assert np.max(np.linalg.norm(back - res["x"], axis=1)) < 1e-6

    def test_scaled_displacement_scales_trajectory(self, model):
        from pegring.dmp.model import rotoscale

        res = rollout(model, X0, G, g_q=GQ, tau=1.0, duration=2.0)
        x0b = X0 + 0.05
        gb = x0b + 2.0 * (G - X0)
        res_b = rollout(model, x0b, gb, g_q=GQ, tau=1.0, duration=2.0)
        na = (res["x"] - X0) @ rotoscale(G - X0, np.ones(3)).matrix().T
        nb = (res_b["x"] - x0b) @ rotoscale(gb - x0b, np.ones(3)).matrix().T
        assert np.max(np.linalg.norm(na - nb, axis=1)) < 1e-6

    def test_degenerate_goal_rejected(self, model):
        with pytest.raises(DegenerateGoal):
            generalize(model, X0, X0 + 1e-9)


class TestObstacles:
    def test_no_obstacles_zero(self):
        assert np.allclose(obstacle_gradient(np.zeros(3), []), 0.0)

    def test_outside_influence_zero(self):
        obs = [Obstacle.point([0.1, 0.0, 0.0], influence_radius=0.03)]
        assert np.allclose(obstacle_gradient(np.zeros(3), obs), 0.0)

    def test_points_away_from_obstacle(self):
        obs = [Obstacle.point([0.0, 0.0, 0.0])]
        g = obstacle_gradient(np.array([0.01, 0.0, 0.0]), obs)
        assert g[0] > 0 and abs(g[1]) < 1e-12 and abs(g[2]) < 1e-12

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        obs = [Obstacle.segment([0, 0, 0], [0, 0, 0.02]),
               Obstacle.point([0.03, 0.01, 0.01])]
        checked = 0
        while checked < 100:
            p = rng.uniform(-0.05, 0.05, 3)
            g = obstacle_gradient(p, obs, cap=1e18)
            if np.linalg.norm(g) < 1e-9:
                continue
            h = 1e-7
            fd = np.zeros(3)
            for k in range(3):
                e = np.zeros(3)
                e[k] = h
                fd[k] = -(potential(p + e, obs) - potential(p - e, obs)) / (2 * h)
            assert np.linalg.norm(fd - g) / np.linalg.norm(g) < 1e-4
            checked += 1

    def test_gradient_capped(self):
        obs = [Obstacle.point([0.0, 0.0, 0.0], strength=100.0, decay=500.0)]
        g = obstacle_gradient(np.array([1e-4, 0, 0]), obs)
        assert np.linalg.norm(g) <= 10.0 + 1e-12


class TestQuaternionStep:
    def test_fixed_point(self):
        q, w = quaternion_step(GQ, np.zeros(3), GQ, 1e-9, 150.0, 0.01, 1.0)
        assert quat.geodesic_angle(q, GQ) < 1e-9
        assert np.linalg.norm(w) < 1e-12

    def test_converges_from_quarter_turn(self):
        q0 = quat.multiply(quat.from_axis_angle([1, 0, 0], np.pi / 2), GQ)
        q, w = q0.copy(), np.zeros(3)
        for _ in range(1000):
            q, w = quaternion_step(q, w, GQ, 0.0, 150.0, 0.01, 1.0)
        assert quat.geodesic_angle(q, GQ) < 1e-3

    def test_unit_norm_after_each_step(self):
        rng = np.random.default_rng(11)
        q = quat.normalize(rng.normal(size=4))
        w = rng.normal(size=3)
        for _ in range(200):
            q, w = quaternion_step(q, w, GQ, 0.5, 150.0, 0.01, 1.0)
            assert abs(np.linalg.norm(q) - 1.0) < 1e-12


class TestSerialization:
    def test_model_roundtrip_bit_exact(self, model, tmp_path):
        path = tmp_path / "m.json"
        save_model(model, path)
        loaded = load_model(path)
        assert np.array_equal(loaded.weights, model.weights)
        assert np.array_equal(loaded.quat_weights, model.quat_weights)
        assert loaded.k_gain == model.k_gain
        assert loaded.basis.n == model.basis.n
        assert loaded.basis.phase_span == model.basis.phase_span

    def test_demo_csv_roundtrip(self, tmp_path):
        demo = synth_demo("move_peg", X0, G, duration=1.0)
        path = tmp_path / "demo.csv"
        save_demo_csv(demo, path)
        loaded = load_demo_csv(path)
        assert len(loaded) == len(demo)
        assert all(np.array_equal(a.x, b.x) and np.array_equal(a.q, b.q)
                   and a.t == b.t for a, b in zip(loaded, demo))

    def test_csv_rejects_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError):
            load_demo_csv(path)
