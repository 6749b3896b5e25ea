import numpy as np
import pytest

from irsim import core
from irsim.reflection import ReflectionState, random_state
from irsim.scenario import SystemConfig, draw_channels, place_scenario, trial_rng


def small_setup(seed=0, S=2, K=2, Nt=3, M=4):
    cfg = SystemConfig(S=S, K=K, Nt=Nt, M=M)
    rng = trial_rng(100, seed)
    geo = place_scenario(cfg, rng)
    ch = draw_channels(cfg, geo, rng)
    state = random_state(S, M, rng)
    return cfg, ch, state


def test_effective_channel_matches_manual():
    cfg, ch, state = small_setup()
    theta = np.exp(1j * state.phi[1] * state.a[1])
    h = core.effective_channel(ch, theta, 1, 0)
    manual = ((ch.hr[1, 0].conj() * theta) @ ch.G[1] + ch.hd[1, 0].conj()).conj()
    assert np.allclose(h, manual, atol=1e-15)


def test_effective_channels_bs_stacks_rows():
    cfg, ch, state = small_setup()
    theta = np.exp(1j * state.phi[0] * state.a[0])
    H = core.effective_channels_bs(ch, theta, 0)
    for k in range(cfg.K):
        hk = core.effective_channel(ch, theta, 0, k)
        assert np.allclose(H[k], hk.conj(), atol=1e-15)


def test_effective_channel_length_check():
    cfg, ch, state = small_setup()
    with pytest.raises(ValueError):
        core.effective_channel(ch, np.ones(cfg.M + 1), 0, 0)


def test_sinr_single_user_closed_form():
    cfg, ch, state = small_setup(S=1, K=1, Nt=3, M=4)
    theta = np.exp(1j * state.phi[0] * state.a[0])
    h = core.effective_channel(ch, theta, 0, 0)
    p = 0.2
    W = np.sqrt(p) * (h / np.linalg.norm(h))[:, None][None, :, :]
    got = core.sinr(ch, state, W, cfg.sigma2, 0, 0)
    assert abs(got - p * np.linalg.norm(h) ** 2 / cfg.sigma2) / got < 1e-12


def test_sinr_zero_beamformer():
    cfg, ch, state = small_setup()
    W = np.zeros((cfg.S, cfg.Nt, cfg.K), complex)
    assert core.sinr(ch, state, W, cfg.sigma2, 0, 0) == 0.0


def test_sinr_matches_direct_recomputation():
    cfg, ch, state = small_setup(seed=3)
    rng = np.random.default_rng(5)
    W = rng.standard_normal((cfg.S, cfg.Nt, cfg.K)) * 1e-3 \
        + 1j * rng.standard_normal((cfg.S, cfg.Nt, cfg.K)) * 1e-3
    for s in range(cfg.S):
        theta = np.exp(1j * state.phi[s] * state.a[s])
        for k in range(cfg.K):
            h = core.effective_channel(ch, theta, s, k)
            sig = abs(h.conj() @ W[s, :, k]) ** 2
            interf = sum(abs(h.conj() @ W[s, :, j]) ** 2
                         for j in range(cfg.K) if j != k)
            ref = sig / (interf + cfg.sigma2)
            assert abs(core.sinr(ch, state, W, cfg.sigma2, s, k) - ref) / ref < 1e-12


def test_sinr_invariant_to_common_phase():
    cfg, ch, state = small_setup(seed=4)
    rng = np.random.default_rng(6)
    W = (rng.standard_normal((cfg.S, cfg.Nt, cfg.K))
         + 1j * rng.standard_normal((cfg.S, cfg.Nt, cfg.K))) * 1e-3
    base = core.sinr(ch, state, W, cfg.sigma2, 0, 0)
    W2 = W.copy()
    W2[0, :, 0] *= np.exp(1j * 1.234)
    assert abs(core.sinr(ch, state, W2, cfg.sigma2, 0, 0) - base) / base < 1e-12


def test_sum_rate_zero_and_single():
    cfg, ch, state = small_setup()
    W = np.zeros((cfg.S, cfg.Nt, cfg.K), complex)
    assert core.sum_rate(ch, state, W, cfg.sigma2) == 0.0


def test_sum_rate_matches_recomputation():
    cfg, ch, state = small_setup(seed=7)
    rng = np.random.default_rng(8)
    W = (rng.standard_normal((cfg.S, cfg.Nt, cfg.K))
         + 1j * rng.standard_normal((cfg.S, cfg.Nt, cfg.K))) * 1e-3
    expect = sum(np.log2(1 + core.sinr(ch, state, W, cfg.sigma2, s, k))
                 for s in range(cfg.S) for k in range(cfg.K))
    assert abs(core.sum_rate(ch, state, W, cfg.sigma2) - expect) < 1e-12


def test_mse_constant_term():
    cfg, ch, state = small_setup()
    W = np.zeros((cfg.S, cfg.Nt, cfg.K), complex)
    assert abs(core.mse(ch, state, W, 0.0, cfg.sigma2, 0, 0) - 1.0) < 1e-15


def test_mse_optimal_receiver_identity():
    # At the MMSE receive scalar, MSE * (1 + SINR) = 1.
    cfg, ch, state = small_setup(seed=9)
    rng = np.random.default_rng(10)
    W = (rng.standard_normal((cfg.S, cfg.Nt, cfg.K))
         + 1j * rng.standard_normal((cfg.S, cfg.Nt, cfg.K))) * 1e-3
    for s in range(cfg.S):
        theta = np.exp(1j * state.phi[s] * state.a[s])
        for k in range(cfg.K):
            h = core.effective_channel(ch, theta, s, k)
            hw = h.conj() @ W[s]
            nu = hw[k] / ((np.abs(hw) ** 2).sum() + cfg.sigma2)
            gamma = core.sinr(ch, state, W, cfg.sigma2, s, k)
            prod = core.mse(ch, state, W, nu, cfg.sigma2, s, k) * (1 + gamma)
            assert abs(prod - 1.0) < 1e-9


def test_power_accounting():
    W = np.zeros((2, 3, 2), complex)
    assert core.total_power(W) == 0.0
    W[0, 0, 0] = 1.0
    W[1, :, 1] = [0.0, 1.0, 0.0]
    assert abs(core.total_power(W) - 2.0) < 1e-15
    assert abs(core.bs_power(W[0]) - 1.0) < 1e-15
    rng = np.random.default_rng(11)
    W = rng.standard_normal((2, 3, 2)) + 1j * rng.standard_normal((2, 3, 2))
    assert abs(core.total_power(W) - np.sum(np.abs(W) ** 2)) < 1e-12
