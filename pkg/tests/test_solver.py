import json

import numpy as np
import pytest

from sixdma import receiver as rx
from sixdma.channel import assemble, fixed_pose
from sixdma.scene import ConfigError, ScenarioConfig, generate_scenario, sample_link_paths
from sixdma.solver import (MONOTONE_TOL, SolverConfig, ao_solve, es_baseline, euler_zyz,
                           evaluate, fa_poses, initialize, offline_solve, orientation_grid,
                           run_scheme)

FAST = SolverConfig(max_outer=15)


def world(seed, M=4, K=3, L=3):
    s = generate_scenario(ScenarioConfig(num_aps=M, num_uts=K, paths_per_link=L, seed=seed))
    return s, sample_link_paths(s, np.random.default_rng([seed, 1]))


@pytest.mark.parametrize("kwargs", [
    {"eps1": 0.0}, {"max_outer": 0}, {"mode": "tri"}, {"scheme": "magic"},
    {"offline_samples": 0}, {"es_positions": 10}, {"prv_error": -1.0},
])
def test_solver_config_validation(kwargs):
    with pytest.raises(ConfigError):
        SolverConfig(**kwargs)


@pytest.mark.parametrize("dual", [False, True])
def test_initialize_invariants(small_world, dual):
    s, paths = small_world
    poses = initialize(s, paths, np.random.default_rng(0), dual)
    again = initialize(s, paths, np.random.default_rng(0), dual)
    for m, (p, p2) in enumerate(zip(poses, again)):
        np.testing.assert_array_equal(p.orientation, p2.orientation)
        assert s.regions[m].contains(p.position)
        assert p.orthonormality_error() < 1e-12
        u = p.orientation[:, 0]
        cos = (s.ut_positions - s.ap_positions[m]) @ u / np.linalg.norm(
            s.ut_positions - s.ap_positions[m], axis=1)
        assert np.max(cos) == pytest.approx(1.0, abs=1e-12)
        k = int(np.argmax(cos))
        e = paths.fields[m, k, 0]
        v = p.orientation[:, 1]
        # v is the normalized projection of the LoS field vector
        proj = e - (u @ e) * u
        np.testing.assert_allclose(v, proj / np.linalg.norm(proj), atol=1e-12)
        if dual:
            np.testing.assert_allclose(p.orientation[:, 2], np.cross(u, v), atol=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_ao_solve_monotone(seed):
    s, paths = world(seed)
    poses, W, trace = ao_solve(s, paths, FAST, np.random.default_rng([seed, 2]))
    assert np.all(np.diff(trace.wsr) >= -MONOTONE_TOL)
    assert np.all(np.diff(trace.block_wsr) >= -MONOTONE_TOL)
    assert trace.wsr[-1] > trace.wsr[0]
    H = assemble(poses, paths, s.config.wavelength)
    np.testing.assert_allclose(W, rx.mmse_combiner(H, s.config.noise_power))
    assert evaluate(s, poses, paths)[0] == pytest.approx(trace.wsr[-1], rel=1e-12)
    for inner in trace.inner:
        assert np.all(np.diff(inner["objective"]) >= -1e-12)
    json.dumps(trace.to_dict())


def test_dual_mode_solve():
    s, paths = world(5)
    cfg = SolverConfig(max_outer=5, mode="dual")
    poses, W, trace = ao_solve(s, paths, cfg, np.random.default_rng(1))
    assert W.shape == (8, 3)
    for snap in trace.poses:
        for p in snap:
            assert p.orientation.shape == (3, 3)
            assert p.orthonormality_error() < 1e-10
    assert np.all(np.diff(trace.wsr) >= -MONOTONE_TOL)


def test_offline_single_sample_reduces_to_online():
    s, paths = world(3)
    online, _, t1 = ao_solve(s, paths, FAST, np.random.default_rng(9))
    offline, Ws, t2 = offline_solve(s, [paths], FAST, np.random.default_rng(9))
    for a, b in zip(online, offline):
        np.testing.assert_array_equal(a.position, b.position)
        np.testing.assert_array_equal(a.orientation, b.orientation)
    assert t1.wsr == t2.wsr
    with pytest.raises(ConfigError):
        offline_solve(s, [], FAST)


def test_offline_average_trace_monotone():
    from sixdma.scene import sample_realization
    s, _ = world(4)
    rng = np.random.default_rng(0)
    reals = [sample_realization(s, rng) for _ in range(3)]
    poses, Ws, trace = offline_solve(s, reals, SolverConfig(max_outer=5), rng)
    assert len(Ws) == 3
    assert np.all(np.diff(trace.block_wsr) >= -MONOTONE_TOL)
    mean = np.mean([evaluate(s, poses, r)[0] for r in reals])
    assert mean == pytest.approx(trace.wsr[-1], rel=1e-12)


def test_scheme_freezing():
    s, paths = world(6)
    pos = run_scheme("6dma-position", s, paths, FAST, seed=6)
    for p in pos.poses:
        assert p.orientation.tobytes() == np.eye(3)[:, :2].tobytes()
    ori = run_scheme("6dma-orientation", s, paths, FAST, seed=6)
    for p in ori.poses:
        assert p.position.tobytes() == np.zeros(3).tobytes()
    fa1 = run_scheme("fa", s, paths, FAST, seed=6)
    fa2 = run_scheme("fa", s, paths, FAST, seed=6)
    assert fa1.wsr == fa2.wsr
    # single-block schemes start from or beat the fixed antenna
    assert pos.wsr >= fa1.wsr - MONOTONE_TOL


def test_run_scheme_prv_error_scores_true_channel():
    s, paths = world(2)
    res = run_scheme("6dma", s, paths, SolverConfig(max_outer=5, prv_error=0.2), seed=2)
    assert res.wsr == pytest.approx(evaluate(s, res.poses, paths)[0])
    assert res.trace.wsr[-1] != pytest.approx(res.wsr)
    with pytest.raises(ConfigError):
        run_scheme("nope", s, paths, FAST)


def test_euler_grid():
    np.testing.assert_array_equal(orientation_grid(1), np.eye(3)[None, :, :2])
    frames = orientation_grid(4, dual=True)
    assert frames.shape == (64, 3, 3)
    for F in frames:
        assert np.linalg.norm(F.T @ F - np.eye(3)) < 1e-12
        assert np.linalg.det(F) == pytest.approx(1.0)
    R = euler_zyz(0.3, 0.0, -0.3)
    np.testing.assert_allclose(R, np.eye(3), atol=1e-15)


def test_es_trivial_grid_is_fixed_antenna():
    s, paths = world(1)
    cfg = SolverConfig(es_positions=1, es_orientations=1)
    poses, history = es_baseline(s, paths, cfg)
    for p, f in zip(poses, fa_poses(s)):
        np.testing.assert_array_equal(p.position, f.position)
        np.testing.assert_array_equal(p.orientation, f.orientation)
    assert history == [pytest.approx(evaluate(s, fa_poses(s), paths)[0], rel=1e-10)]


def test_es_monotone_and_capped():
    s, paths = world(2)
    cfg = SolverConfig(es_positions=5 ** 3, es_orientations=4 ** 3, es_max_sweeps=2)
    poses, history = es_baseline(s, paths, cfg)
    assert np.all(np.diff(history) > 0)
    assert len(history) - 1 <= 2 * 2 * 4          # two blocks per AP per sweep
    assert evaluate(s, poses, paths)[0] == pytest.approx(history[-1], rel=1e-9)


def test_es_single_ap_picks_grid_argmax():
    s, paths = world(3, M=1, K=1, L=3)
    cfg = SolverConfig(es_positions=3 ** 3, es_orientations=3 ** 3, es_max_sweeps=1)
    poses, history = es_baseline(s, paths, cfg)
    # brute-force the first block (positions at the fixed orientation)
    grid = s.regions[0].grid(3)
    vals = [evaluate(s, [fixed_pose().replace(position=q)], paths)[0] for q in grid]
    assert history[1 if len(history) > 1 else 0] >= max(vals) - 1e-9
