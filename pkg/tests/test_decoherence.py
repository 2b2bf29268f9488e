import numpy as np
import pytest

from qwalk.coin import make_coin
from qwalk.decoherence import (
    DecoherenceSpec,
    ResourceCapError,
    channel_states,
    decohered_run,
    exact_channel_run,
    multicoin_run,
    sweep_csv,
    variance_sweep,
)
from qwalk.dtqw import evolve, line_walk, position_distribution

H = make_coin("hadamard")
SYM = (1 / np.sqrt(2), 1j / np.sqrt(2))
DOWN = (0, 1)


def _exact(p, target, T, start=SYM, W=None):
    s = line_walk(W or T + 1, 0, start)
    return exact_channel_run(s, H, DecoherenceSpec(p, target, "exact"), T)


@pytest.mark.parametrize("field, value", [("p_meas", 1.5), ("target", "spin"), ("mode", "fast"),
                                          ("trajectories", 0)])
def test_spec_validation(field, value):
    kwargs = {"p_meas": 0.1, field: value}
    with pytest.raises(ValueError):
        DecoherenceSpec(**kwargs)


@pytest.mark.parametrize("mode", ["exact", "trajectories"])
def test_zero_measurement_rate_is_the_pure_walk(mode):
    s = line_walk(31, 0, SYM)
    pure = position_distribution(evolve(s, H, 30))
    res = decohered_run(s, H, DecoherenceSpec(0.0, mode=mode, trajectories=3), 30)
    np.testing.assert_allclose(res.distribution.values, pure.values, atol=1e-12)


@pytest.mark.parametrize("target", ["coin", "both"])
def test_full_measurement_gives_binomial_table(target):
    res = _exact(1.0, target, 5, start=DOWN)
    expected = np.zeros(13)
    expected[np.arange(1, 12, 2)] = np.array([1, 5, 10, 10, 5, 1]) / 32
    np.testing.assert_allclose(res.distribution.values, expected, atol=1e-14)


def test_full_measurement_variance_grows_linearly():
    res = _exact(1.0, "coin", 100)
    np.testing.assert_allclose(res.variance.values, res.variance.times, rtol=1e-10)


def test_position_measurement_also_fixes_coin_on_the_line():
    # after a shift the position determines the last coin direction
    a = _exact(1.0, "position", 40)
    b = _exact(1.0, "coin", 40)
    np.testing.assert_allclose(a.distribution.values, b.distribution.values, atol=1e-14)


@pytest.mark.parametrize("target", ["coin", "position", "both"])
def test_density_matrix_stays_valid(target):
    s = line_walk(61, 0, SYM)
    exact_channel_run(s, H, DecoherenceSpec(0.3, target, "exact"), 60, check=True)
    rho = channel_states(s, H, 0.3, target, 60)
    rho.check()
    assert rho.position_probabilities().sum() == pytest.approx(1.0)


def test_trajectories_agree_with_exact_channel():
    s = line_walk(51, 0, SYM)
    res = decohered_run(s, H, DecoherenceSpec(0.2, trajectories=10_000, seed=1), 50)
    second = res.trajectory_moments[:, 1]
    se = second.std(ddof=1) / np.sqrt(second.size)
    exact = _exact(0.2, "coin", 50).distribution
    target = np.dot(exact.values, exact.support.astype(float) ** 2)
    assert abs(second.mean() - target) < 3 * se


def test_trajectories_are_seed_deterministic():
    s = line_walk(21, 0, SYM)
    a = decohered_run(s, H, DecoherenceSpec(0.3, "both", trajectories=50, seed=4), 20)
    b = decohered_run(s, H, DecoherenceSpec(0.3, "both", trajectories=50, seed=4), 20)
    c = decohered_run(s, H, DecoherenceSpec(0.3, "both", trajectories=50, seed=5), 20)
    np.testing.assert_array_equal(a.distribution.values, b.distribution.values)
    assert not np.array_equal(a.distribution.values, c.distribution.values)


def test_channel_cap():
    with pytest.raises(ResourceCapError):
        _exact(0.1, "coin", 10, W=300)


def test_sweep_is_monotone_and_bracketed():
    rows = variance_sweep(line_walk(61, 0, SYM), H, [0, 0.05, 0.2, 1.0], 60)
    variances = [r[2] for r in rows]
    exponents = [r[3] for r in rows]
    assert variances == sorted(variances, reverse=True)
    assert exponents[0] == pytest.approx(2, abs=0.05)
    assert exponents[-1] == pytest.approx(1, abs=1e-6)
    assert sweep_csv(rows).splitlines()[0] == "p_meas,T,variance,exponent"


def _multicoin_oracle(M, T, coin, c0):
    # dictionary over (register tuple, x)
    state = {}
    for regs in np.ndindex(*(2,) * M):
        amp = np.prod([c0[r] for r in regs])
        state[(regs, 0)] = amp
    for t in range(T):
        f = t % M
        nxt = {}
        for (regs, x), a in state.items():
            for r in (0, 1):
                new = regs[:f] + (r,) + regs[f + 1:]
                x2 = x + (1 if r == 0 else -1)
                nxt[(new, x2)] = nxt.get((new, x2), 0) + coin[r, regs[f]] * a
        state = nxt
    probs = {}
    for (_, x), a in state.items():
        probs[x] = probs.get(x, 0.0) + abs(a) ** 2
    return probs


@pytest.mark.parametrize("M, T", [(2, 7), (3, 8)])
def test_multicoin_matches_oracle(M, T):
    res = multicoin_run(0, M, T)
    oracle = _multicoin_oracle(M, T, np.asarray(H), np.array(SYM))
    for x, p in oracle.items():
        assert res.distribution[x] == pytest.approx(p, abs=1e-12)


def test_single_register_is_the_hadamard_walk():
    res = multicoin_run(0, 1, 40)
    pure = position_distribution(evolve(line_walk(41, 0, SYM), H, 40))
    np.testing.assert_allclose(res.distribution.values, pure.values, atol=1e-12)


def test_fresh_coin_each_step_is_binomial():
    c = make_coin("rotation", theta=0.4)
    res = multicoin_run(0, 30, 30, coin=c, coin_state=(1, 0))
    p_right = np.cos(0.4) ** 2
    mean = np.dot(res.distribution.values, res.distribution.support)
    assert mean == pytest.approx(30 * (2 * p_right - 1))
    assert res.variance.values[-1] == pytest.approx(30 * 4 * p_right * (1 - p_right))


def test_multicoin_cap_and_validation():
    with pytest.raises(ResourceCapError):
        multicoin_run(0, 20, 100)
    with pytest.raises(ValueError):
        multicoin_run(0, 0, 10)


def test_channel_valid_over_long_run():
    channel_states(line_walk(151, 0, SYM), H, 0.05, "coin", 150).check()


def test_fresh_coin_walk_equals_fully_measured_channel():
    fresh = multicoin_run(0, 60, 60)
    measured = _exact(1.0, "coin", 60)
    np.testing.assert_allclose(fresh.distribution.values, measured.distribution.values, atol=1e-14)
