"""Tests for the discrete-space quantum-trajectory Monte Carlo solver."""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from mirrorqed import (
    SystemParams,
    TrajectoryConfig,
    TrajectoryState,
    build_propagator,
    ensemble_average,
    run_trajectory,
    step,
    trajectory_rng,
)
from mirrorqed.trajectory import NormUnderflow, _advance


def config_for(tau=1.0, phase=math.pi, r_m=-1.0, boxes=9, n_traj=10, t_max=2.0, seed=7):
    params = SystemParams.from_round_trip_phase(tau=tau, phase=phase, r_m=r_m)
    return TrajectoryConfig.from_params(
        params, boxes=boxes, n_trajectories=n_traj, t_max=t_max, master_seed=seed
    )


def dense_no_jump_oracle(config, n_steps):
    """Deterministic no-detection evolution, built independently.

    Uses the full (2N+2)-dimensional Hamiltonian exponentiated with
    scipy.linalg.expm and an index-by-index box shift.
    """
    n = config.boxes
    dim = 2 * n + 2
    ham = np.zeros((dim, dim), dtype=complex)
    ham[1, 1] = config.omega_e
    ham[1, 2] = ham[2, 1] = math.sqrt(config.v_right / config.dt)
    ham[1, 2 * n + 1] = ham[2 * n + 1, 1] = math.sqrt(config.v_left / config.dt)
    unitary = expm(-1j * ham * config.dt)

    def right_index(box):
        return 2 + box

    def left_index(box):
        return 2 * n + 1 - box

    state = np.zeros(dim, dtype=complex)
    state[1] = 1.0
    series = [1.0]
    for _ in range(n_steps):
        state = unitary @ state
        state[right_index(n - 1)] = 0.0  # no detection observed
        state[left_index(0)] = 0.0
        shifted = np.zeros_like(state)
        shifted[0] = state[0]
        shifted[1] = state[1]
        for box in range(1, n - 1):
            shifted[right_index(box)] = state[right_index(box - 1)]
        shifted[right_index(n - 1)] = config.t_m * state[right_index(n - 2)]
        shifted[left_index(n - 2)] = config.r_m * state[right_index(n - 2)]
        for box in range(0, n - 2):
            shifted[left_index(box)] = state[left_index(box + 1)]
        state = shifted / np.linalg.norm(shifted)
        series.append(abs(state[1]) ** 2)
    return np.array(series)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError, match="boxes"):
        TrajectoryConfig(
            boxes=1, dt=0.1, v_right=0.5, v_left=0.5, r_m=0.0, omega_e=1.0,
            n_trajectories=1, t_max=1.0, master_seed=0,
        )
    with pytest.raises(ValueError, match="r_m"):
        TrajectoryConfig(
            boxes=4, dt=0.1, v_right=0.5, v_left=0.5, r_m=-1.5, omega_e=1.0,
            n_trajectories=1, t_max=1.0, master_seed=0,
        )
    with pytest.raises(ValueError, match="tau"):
        TrajectoryConfig.from_params(
            SystemParams(omega_e=1.0, tau=0.0, r_m=0), boxes=4
        )
    with pytest.raises(ValueError, match="real"):
        TrajectoryConfig.from_params(
            SystemParams(omega_e=1.0, tau=1.0, r_m=0.5j), boxes=4
        )


def test_config_from_params_geometry():
    config = config_for(tau=1.0, boxes=25)
    assert config.dt == pytest.approx(1.0 / 48.0, rel=1e-15)
    # dt (N - 1) reproduces the emitter-mirror distance tau / 2
    assert config.dt * (config.boxes - 1) == pytest.approx(0.5, rel=1e-15)
    assert config.v_right == config.v_left == 0.5
    assert config.gamma == 1.0
    assert config.t_m == pytest.approx(0.0)


def test_config_grid():
    config = config_for(tau=1.0, boxes=9, t_max=2.0)
    assert config.n_steps == 32
    assert len(config.times) == 33
    assert config.times[-1] == pytest.approx(2.0)


def test_initial_state():
    config = config_for()
    state = TrajectoryState.initial(config)
    assert state.amplitudes[1] == 1.0
    assert state.norm == 1.0
    assert state.excited_probability == 1.0
    assert state.amplitudes[0] == 0.0  # vacuum empty until a detection


# ---------------------------------------------------------------------------
# Propagator
# ---------------------------------------------------------------------------


def test_propagator_unitary():
    rng = np.random.default_rng(3)
    for _ in range(20):
        params = SystemParams.from_round_trip_phase(
            tau=rng.uniform(0.2, 3.0), phase=rng.uniform(0, 7), r_m=rng.uniform(-1, 1)
        )
        config = TrajectoryConfig.from_params(params, boxes=int(rng.integers(2, 40)))
        u = build_propagator(config).matrix
        assert np.max(np.abs(u.conj().T @ u - np.eye(3))) < 1e-12


def test_propagator_trivial_couplings():
    config = TrajectoryConfig(
        boxes=5, dt=0.1, v_right=0.0, v_left=0.0, r_m=0.0, omega_e=0.0,
        n_trajectories=1, t_max=1.0, master_seed=0,
    )
    assert np.allclose(build_propagator(config).matrix, np.eye(3), atol=1e-15)
    config_phase = TrajectoryConfig(
        boxes=5, dt=0.1, v_right=0.0, v_left=0.0, r_m=0.0, omega_e=2.0,
        n_trajectories=1, t_max=1.0, master_seed=0,
    )
    u = build_propagator(config_phase).matrix
    assert u[0, 0] == pytest.approx(np.exp(-0.2j), abs=1e-14)
    assert u[1, 1] == u[2, 2] == 1.0


def test_propagator_single_step_decay():
    # one step from |e, 0> at omega_e = 0: survival cos^2 sqrt(Gamma dt),
    # consistent with 1 - Gamma dt at small dt
    params = SystemParams(omega_e=0.0, tau=1.0, r_m=-1.0)
    config = TrajectoryConfig.from_params(params, boxes=25)
    propagator = build_propagator(config)
    state = TrajectoryState.initial(config)
    evolved = propagator.matrix @ np.array([1.0, 0.0, 0.0], dtype=complex)
    survival = abs(evolved[0]) ** 2
    assert survival == pytest.approx(math.cos(math.sqrt(config.dt)) ** 2, abs=1e-12)
    assert survival == pytest.approx(1.0 - config.dt, abs=config.dt**2)
    assert state.excited_probability == 1.0


def test_propagator_identity_off_active_subspace():
    config = config_for(boxes=8, r_m=-0.3)
    rng = np.random.default_rng(8)
    # photon amplitude spread over interior boxes only: the coherent part of a
    # step must not touch it (detection cannot fire: outputs are empty)
    state = TrajectoryState.initial(config)
    amps = np.zeros_like(state.amplitudes)
    interior = [4, 5, 6, 12, 13]  # right boxes 2..4 and left boxes 5..4 for N = 8
    amps[interior] = rng.normal(size=len(interior)) + 1j * rng.normal(size=len(interior))
    amps /= np.linalg.norm(amps)
    before = amps.copy()
    advanced, detected = _advance(
        amps[np.newaxis, :].copy(), config, build_propagator(config),
        np.array([0.5]), np.array([0.5]),
    )
    assert not detected[0]
    # contents moved by exactly one box, no amplitude created or changed
    n = config.boxes
    for idx in interior:
        if 2 <= idx <= n:  # right-movers shift up in index
            assert advanced[0][idx + 1] == pytest.approx(before[idx], abs=1e-14)
        elif n + 3 <= idx <= 2 * n:  # left-movers shift up in index too
            assert advanced[0][idx + 1] == pytest.approx(before[idx], abs=1e-14)


# ---------------------------------------------------------------------------
# Step semantics
# ---------------------------------------------------------------------------


def test_step_noop_without_couplings_or_photon():
    config = TrajectoryConfig(
        boxes=6, dt=0.05, v_right=0.0, v_left=0.0, r_m=-1.0, omega_e=0.0,
        n_trajectories=1, t_max=1.0, master_seed=1,
    )
    state = TrajectoryState.initial(config)
    new_state, detected = step(state, config, build_propagator(config), trajectory_rng(1, 0))
    assert not detected
    assert np.array_equal(new_state.amplitudes, state.amplitudes)


def test_step_mirror_reflection_rule():
    # photon in right box N-2 with r_m = -1: the shift sends -1 into left box
    # N-2 and nothing through the mirror
    config = TrajectoryConfig(
        boxes=6, dt=0.05, v_right=0.0, v_left=0.0, r_m=-1.0, omega_e=0.0,
        n_trajectories=1, t_max=1.0, master_seed=1,
    )
    n = config.boxes
    state = TrajectoryState.initial(config)
    state.amplitudes[:] = 0.0
    state.amplitudes[2 + (n - 2)] = 1.0  # right box N-2
    new_state, detected = step(state, config, build_propagator(config), trajectory_rng(1, 0))
    assert not detected
    assert new_state.amplitudes[n + 3] == pytest.approx(-1.0)  # left box N-2
    assert new_state.amplitudes[n + 1] == 0.0  # right box N-1 (transmission zero)
    assert new_state.amplitudes[n + 2] == 0.0  # left input box stays empty


def test_step_transparent_mirror_then_certain_detection():
    config = TrajectoryConfig(
        boxes=6, dt=0.05, v_right=0.0, v_left=0.0, r_m=0.0, omega_e=0.0,
        n_trajectories=1, t_max=1.0, master_seed=1,
    )
    n = config.boxes
    propagator = build_propagator(config)
    rng = trajectory_rng(1, 0)
    state = TrajectoryState.initial(config)
    state.amplitudes[:] = 0.0
    state.amplitudes[2 + (n - 2)] = 1.0
    state, detected = step(state, config, propagator, rng)
    assert not detected
    assert state.amplitudes[n + 1] == pytest.approx(1.0)  # right box N-1, t_m = 1
    # the output box now holds the whole excitation: detection is certain
    state, detected = step(state, config, propagator, rng)
    assert detected
    assert state.amplitudes[0] == 1.0  # photon left the region: vacuum
    assert state.excited_probability == 0.0


def test_step_norm_and_empty_input_box_every_step():
    config = config_for(tau=1.0, phase=math.pi, r_m=-0.5, boxes=9, t_max=3.0, seed=3)
    propagator = build_propagator(config)
    rng = trajectory_rng(config.master_seed, 0)
    state = TrajectoryState.initial(config)
    for _ in range(config.n_steps):
        state, _ = step(state, config, propagator, rng)
        assert abs(state.norm - 1.0) < 1e-12
        assert state.amplitudes[config.boxes + 2] == 0.0  # left input box N-1


def test_advance_norm_underflow_guard():
    config = config_for(boxes=5)
    amps = np.zeros((1, config.state_size), dtype=complex)
    amps[0, config.boxes + 1] = 1.0  # everything in an output box
    # artificial draw eps1 > 1 forces the no-detection branch, emptying the state
    with pytest.raises(NormUnderflow):
        _advance(amps, config, build_propagator(config), np.array([2.0]), np.array([0.5]))


# ---------------------------------------------------------------------------
# Single trajectories
# ---------------------------------------------------------------------------


def test_trajectory_deterministic_replay():
    config = config_for(boxes=9, t_max=3.0, seed=123)
    first = run_trajectory(config, 4)
    second = run_trajectory(config, 4)
    assert np.array_equal(first, second)
    other_index = run_trajectory(config, 5)
    assert not np.array_equal(first, other_index)


def test_rng_block_draws_match_sequential_draws():
    # ensemble pre-draws (n_steps, 2) blocks; step() draws pairs one at a time
    block = trajectory_rng(99, 3).random((17, 2))
    rng = trajectory_rng(99, 3)
    sequential = np.array([rng.random(2) for _ in range(17)])
    assert np.array_equal(block, sequential)


def test_trajectory_follows_no_jump_oracle_until_detection():
    config = config_for(tau=1.0, phase=math.pi, r_m=0.0, boxes=9, t_max=4.0, seed=21)
    oracle = dense_no_jump_oracle(config, config.n_steps)
    for index in range(6):
        series = run_trajectory(config, index)
        zero_steps = np.nonzero(series == 0.0)[0]
        first_zero = zero_steps[0] if len(zero_steps) else len(series)
        pre = slice(0, first_zero)
        assert np.max(np.abs(series[pre] - oracle[pre])) < 1e-10
        # no-jump decay is monotone for a transparent mirror
        assert np.all(np.diff(series[pre]) <= 1e-12)
        # once the photon is detected the emitter cannot re-excite
        assert np.all(series[first_zero:] == 0.0)


# ---------------------------------------------------------------------------
# Ensembles
# ---------------------------------------------------------------------------


def test_ensemble_single_trajectory_matches_run_trajectory():
    config = config_for(boxes=9, n_traj=1, t_max=3.0, seed=11)
    result = ensemble_average(config)
    assert np.array_equal(result.mean, run_trajectory(config, 0))
    assert np.all(result.stderr == 0.0)


def test_ensemble_rows_match_individual_trajectories():
    config = config_for(boxes=7, n_traj=5, t_max=2.0, seed=31)
    result = ensemble_average(config)
    stacked = np.stack([run_trajectory(config, i) for i in range(5)])
    assert np.allclose(result.mean, stacked.mean(axis=0), atol=0, rtol=0)


def test_ensemble_batching_does_not_change_results():
    config = config_for(boxes=7, n_traj=10, t_max=2.0, seed=67)
    full = ensemble_average(config, batch_size=10)
    split = ensemble_average(config, batch_size=3)
    assert np.array_equal(full.mean, split.mean)
    assert np.array_equal(full.stderr, split.stderr)


def test_ensemble_free_space_tracks_exponential():
    params = SystemParams.from_round_trip_phase(tau=1.0, phase=math.pi, r_m=0.0)
    config = TrajectoryConfig.from_params(
        params, boxes=25, n_trajectories=600, t_max=5.0, master_seed=2025
    )
    result = ensemble_average(config)
    exact = np.exp(-result.times)
    gap = np.abs(result.mean - exact)
    assert np.all(gap <= 3.0 * result.stderr + 1e-12)


def test_ensemble_stderr_scale_and_seed_spread():
    # reported standard error must match the spread across master seeds
    params = SystemParams.from_round_trip_phase(tau=1.0, phase=math.pi, r_m=-0.5)
    means = []
    stderrs = []
    for seed in range(10):
        config = TrajectoryConfig.from_params(
            params, boxes=9, n_trajectories=400, t_max=4.0, master_seed=seed
        )
        result = ensemble_average(config)
        means.append(result.mean)
        stderrs.append(result.stderr)
    means = np.stack(means)
    stderrs = np.stack(stderrs)
    assert np.all(stderrs <= math.sqrt(0.25 / 400) + 1e-12)
    empirical = means.std(axis=0, ddof=1)
    reported = stderrs.mean(axis=0)
    busy = reported > 2e-3  # compare where the band is resolved
    ratio = empirical[busy] / reported[busy]
    assert 0.5 < np.median(ratio) < 2.0


def test_ensemble_converged_in_box_count():
    # halving dt (doubling boxes-1) moves the mean by less than the noise band
    params = SystemParams.from_round_trip_phase(tau=1.0, phase=math.pi, r_m=-1.0)
    coarse = ensemble_average(
        TrajectoryConfig.from_params(params, boxes=25, n_trajectories=800,
                                     t_max=5.0, master_seed=5)
    )
    fine = ensemble_average(
        TrajectoryConfig.from_params(params, boxes=49, n_trajectories=800,
                                     t_max=5.0, master_seed=6)
    )
    assert np.allclose(coarse.times, fine.times[::2], rtol=0, atol=1e-12)
    gap = np.abs(coarse.mean - fine.mean[::2])
    band = 3.0 * np.sqrt(coarse.stderr**2 + fine.stderr[::2] ** 2)
    assert np.all(gap <= band + 5e-3)
