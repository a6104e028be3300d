import math

import pytest

from ambuq import (
    ParameterError,
    SimConfig,
    SystemParams,
    derive,
    mean_wait,
    mfpt_critical_profile,
    queue_conditional_pmf,
    queue_stats,
    simulate_hitting_time,
    simulate_jump_occupancy,
    simulate_stationary,
    stationary_profile,
)

REFERENCE = SystemParams(t_call=15, t_service=50, servers=6)
SHORT = SimConfig(seed=11, replications=1, warmup=2500.0, horizon=202500.0)


def zscore(estimate, reference):
    assert estimate.std_error > 0.0
    return (estimate.value - reference) / estimate.std_error


def test_config_validation():
    with pytest.raises(ParameterError):
        SimConfig(seed=1, replications=0)
    with pytest.raises(ParameterError):
        SimConfig(seed=1, warmup=-1.0)
    with pytest.raises(ParameterError):
        SimConfig(seed=1, warmup=100.0, horizon=50.0)
    with pytest.raises(ParameterError):
        SimConfig(seed=1, start_state=-1)
    with pytest.raises(ParameterError):
        SimConfig(seed=1.5)


def test_config_default_resolution():
    resolved = SimConfig(seed=1).resolved(REFERENCE)
    assert resolved.warmup == pytest.approx(50.0 * 50.0)
    assert resolved.horizon == pytest.approx(2500.0 + 5000.0 * 15.0)


def test_hitting_time_single_server():
    params = SystemParams(t_call=2.0, t_service=2.0, servers=1)
    estimate = simulate_hitting_time(params, 0, SimConfig(seed=301, replications=20000))
    assert abs(zscore(estimate, 3 * 2.0)) < 3.0
    assert estimate.n_samples == 20000
    assert estimate.seed == 301


def test_hitting_time_matches_profile():
    params = SystemParams(t_call=16, t_service=50, servers=6)
    profile = mfpt_critical_profile(params)
    estimate = simulate_hitting_time(params, 3, SimConfig(seed=9, replications=4000))
    assert abs(zscore(estimate, profile.times[3])) < 3.0


def test_hitting_time_start_validation():
    with pytest.raises(ParameterError):
        simulate_hitting_time(REFERENCE, 7, SimConfig(seed=1, replications=10))
    with pytest.raises(ParameterError):
        simulate_hitting_time(REFERENCE, -1, SimConfig(seed=1, replications=10))


def test_hitting_time_deterministic_across_runs_and_workers():
    cfg = SimConfig(seed=5, replications=500)
    first = simulate_hitting_time(REFERENCE, 0, cfg)
    second = simulate_hitting_time(REFERENCE, 0, cfg)
    parallel = simulate_hitting_time(REFERENCE, 0, cfg, workers=4)
    assert first == second == parallel
    other = simulate_hitting_time(REFERENCE, 0, SimConfig(seed=6, replications=500))
    assert other.value != first.value


def test_stationary_estimates_match_analytics():
    result = simulate_stationary(REFERENCE, SHORT, t_los=30.0)
    profile = stationary_profile(REFERENCE)
    d = derive(REFERENCE)
    rate = (1.0 - d.rho) * 6 / 50
    checks = {
        "p_occup": profile.p_occup,
        "throughput": REFERENCE.arrival_rate,
        "wait_mean_conditional": mean_wait(REFERENCE),
        "wait_cdf_at_t_los": 1.0 - math.exp(-rate * 30.0),
        "p_busy_per_server": d.rho,
        "mean_queue_len_conditional": queue_stats(REFERENCE).mean_len,
    }
    for n in range(12):
        checks[f"pi_{n}"] = profile.pi(n)
    for k in range(6):
        checks[f"cond_queue_{k}"] = queue_conditional_pmf(REFERENCE, k)
    for name, reference in checks.items():
        estimate = result.estimates[name]
        assert abs(zscore(estimate, reference)) < 3.0, name
        assert estimate.n_samples >= 2


def test_stationary_batches_and_servers():
    result = simulate_stationary(REFERENCE, SHORT, t_los=30.0)
    assert result.estimates["p_occup"].n_samples == 20
    assert len(result.per_server_busy) == 6
    assert len(result.batch_queue_means) == 20
    # all servers see statistically similar load under random assignment
    spread = max(result.per_server_busy) - min(result.per_server_busy)
    assert spread < 0.05


def test_stationary_deterministic_across_workers():
    base = simulate_stationary(REFERENCE, SHORT, t_los=30.0)
    again = simulate_stationary(REFERENCE, SHORT, t_los=30.0)
    threaded = simulate_stationary(REFERENCE, SHORT, t_los=30.0, workers=3)
    assert base.estimates == again.estimates == threaded.estimates
    assert base.per_server_busy == threaded.per_server_busy


def test_stationary_multi_replication_merge():
    cfg = SimConfig(seed=19, replications=3, warmup=1000.0, horizon=51000.0)
    result = simulate_stationary(REFERENCE, cfg, t_los=30.0)
    assert result.estimates["p_occup"].n_samples == 60
    threaded = simulate_stationary(REFERENCE, cfg, t_los=30.0, workers=2)
    assert result.estimates == threaded.estimates


def test_least_index_policy_shares_the_occupancy_path():
    random_run = simulate_stationary(REFERENCE, SHORT, t_los=30.0)
    ranked_run = simulate_stationary(REFERENCE, SHORT, t_los=30.0, assignment="least_index")
    for n in range(12):
        assert random_run.estimates[f"pi_{n}"] == ranked_run.estimates[f"pi_{n}"]
    assert random_run.estimates["wait_mean_conditional"] == ranked_run.estimates["wait_mean_conditional"]
    # but the load concentrates on low-index servers
    assert ranked_run.per_server_busy[0] > ranked_run.per_server_busy[-1] + 0.1
    with pytest.raises(ParameterError):
        simulate_stationary(REFERENCE, SHORT, assignment="round_robin")


def test_fcfs_and_jump_chain_agree():
    fcfs = simulate_stationary(REFERENCE, SHORT, t_los=30.0)
    jump = simulate_jump_occupancy(REFERENCE, SimConfig(seed=23, replications=1, warmup=2500.0, horizon=202500.0))
    for n in range(12):
        a = fcfs.estimates[f"pi_{n}"]
        b = jump[f"pi_{n}"]
        combined = math.hypot(a.std_error, b.std_error)
        assert abs(a.value - b.value) < 3.0 * combined, n


def test_jump_chain_matches_analytics():
    jump = simulate_jump_occupancy(REFERENCE, SimConfig(seed=29, replications=1, warmup=2500.0, horizon=402500.0))
    profile = stationary_profile(REFERENCE)
    for n in range(12):
        assert abs(zscore(jump[f"pi_{n}"], profile.pi(n))) < 3.0, n


def test_unstable_run_warns_and_grows():
    params = SystemParams(t_call=15, t_service=50, servers=3)
    cfg = SimConfig(seed=2, replications=1, warmup=100.0, horizon=20100.0)
    with pytest.warns(UserWarning, match="no steady state"):
        result = simulate_stationary(params, cfg, t_los=30.0)
    assert result.batch_queue_means[-1] > result.batch_queue_means[0]


def test_wait_collection():
    result = simulate_stationary(REFERENCE, SHORT, t_los=30.0, collect_waits=True)
    waits = result.waits
    assert waits is not None and len(waits) > 1000
    assert [idx for idx, _ in waits] == list(range(len(waits)))
    assert all(w >= 0.0 for _, w in waits)
    share_waiting = sum(1 for _, w in waits if w > 0.0) / len(waits)
    assert share_waiting == pytest.approx(stationary_profile(REFERENCE).p_occup, abs=0.02)
    plain = simulate_stationary(REFERENCE, SHORT, t_los=30.0)
    assert plain.waits is None


def test_start_state_seeding():
    cfg = SimConfig(seed=31, replications=1, warmup=500.0, horizon=50500.0, start_state=9)
    result = simulate_stationary(REFERENCE, cfg, t_los=30.0)
    assert abs(zscore(result.estimates["p_occup"], stationary_profile(REFERENCE).p_occup)) < 3.0
