"""Shared downlink signal-model math: effective channels, SINR, rate, MSE, power.

All optimizers cache intermediates but are validated against these reference
operations in the tests.
"""

import numpy as np


def effective_channel(channels, theta_s, s, k):
    """Combined BS->user channel h with h^H = h_r^H diag(theta_s) G_s + h_d^H."""
    theta_s = np.asarray(theta_s)
    if theta_s.shape != (channels.num_elements,):
        raise ValueError("theta_s has wrong length")
    hH = (channels.hr[s, k].conj() * theta_s) @ channels.G[s] + channels.hd[s, k].conj()
    return hH.conj()


def effective_channels_bs(channels, theta_s, s):
    """All K effective channels of BS s stacked as a K x Nt matrix."""
    return (channels.hr[s].conj() * theta_s[None, :]) @ channels.G[s] + channels.hd[s].conj()
    # rows are h_k^H; callers wanting h_k itself conjugate.


def sinr(channels, state, W, sigma2, s, k):
    """SINR of user k of BS s under intra-cell interference."""
    theta_s = np.exp(1j * state.phi[s] * state.a[s])
    h = effective_channel(channels, theta_s, s, k)
    gains = np.abs(h.conj() @ W[s]) ** 2          # (K,)
    signal = gains[k]
    interference = gains.sum() - gains[k]
    return signal / (interference + sigma2)


def sum_rate(channels, state, W, sigma2):
    """Total rate sum_s sum_k log2(1 + SINR), bits/s/Hz."""
    total = 0.0
    for s in range(channels.num_bs):
        for k in range(channels.num_users):
            total += np.log2(1.0 + sinr(channels, state, W, sigma2, s, k))
    return total


def mse(channels, state, W, nu, sigma2, s, k):
    """Mean square error of user k of BS s for receive scalar nu."""
    theta_s = np.exp(1j * state.phi[s] * state.a[s])
    h = effective_channel(channels, theta_s, s, k)
    hw = h.conj() @ W[s]                          # (K,) of h^H w_j
    quad = np.abs(nu) ** 2 * (np.abs(hw) ** 2).sum()
    cross = -2.0 * np.real(np.conj(nu) * hw[k])
    return quad + cross + np.abs(nu) ** 2 * sigma2 + 1.0


def total_power(W):
    """Total transmit power sum_s sum_k ||w_{s,k}||^2, watts."""
    return float(sum(np.sum(np.abs(Ws) ** 2) for Ws in W))


def bs_power(W_s):
    return float(np.sum(np.abs(W_s) ** 2))
