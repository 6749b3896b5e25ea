"""Sum-rate maximization via WMMSE reformulation and block coordinate descent.

Closed-form updates for the receive scalars, MSE weights, and per-BS
beamformers (bisection on the power multiplier), plus a per-element sweep
that jointly picks the served BS and its phase in closed form.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import core
from .reflection import ReflectionState, wrap_phase, random_state

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Closed-form block updates
# ---------------------------------------------------------------------------

def update_nu(channels, theta, W, sigma2):
    """Optimal MMSE receive scalars for all users; (S, K) complex."""
    S, K = channels.num_bs, channels.num_users
    nu = np.zeros((S, K), dtype=complex)
    for s in range(S):
        H = core.effective_channels_bs(channels, theta[s], s)   # rows h_k^H
        HW = H @ W[s]                                           # (K, K)
        denom = (np.abs(HW) ** 2).sum(axis=1) + sigma2
        nu[s] = HW.diagonal() / denom
    return nu


def mse_matrix(channels, theta, W, nu, sigma2):
    """MSE of every user; (S, K) real."""
    S, K = channels.num_bs, channels.num_users
    out = np.zeros((S, K))
    for s in range(S):
        H = core.effective_channels_bs(channels, theta[s], s)
        HW = H @ W[s]
        quad = np.abs(nu[s]) ** 2 * ((np.abs(HW) ** 2).sum(axis=1) + sigma2)
        cross = -2.0 * np.real(np.conj(nu[s]) * HW.diagonal())
        out[s] = quad + cross + 1.0
    return out


def update_mu(mse_vals):
    """Optimal MSE weights mu = 1 / MSE."""
    return 1.0 / np.asarray(mse_vals, dtype=float)


def update_w(channels, theta, nu, mu, P_s, s, power_tol=1e-8):
    """Closed-form beamformer with water-level multiplier for one BS.

    Returns (W_s, lambda_s): lambda_s = 0 when the unconstrained minimizer
    fits the budget, otherwise the bisection root making the power equal P_s.
    """
    H = core.effective_channels_bs(channels, theta[s], s)       # rows h_k^H
    hbar = nu[s][:, None] * H.conj()                            # rows hbar_k
    A = np.einsum("k,ki,kj->ij", mu[s], hbar, hbar.conj())
    Nt = A.shape[0]

    evals, U = np.linalg.eigh(A)
    evals = np.clip(evals, 0.0, None)
    # hbar_k lies in range(A); drop numerically-null eigendirections so the
    # lam = 0 (pseudo-inverse) evaluation stays finite for K < Nt.
    keep = evals > 1e-13 * max(evals[-1], 1e-300)
    evals, U = evals[keep], U[:, keep]
    proj = U.conj().T @ (mu[s][None, :] * hbar.T)               # columns mu_k U^H hbar_k

    def power(lam):
        denom = (evals + lam)[:, None]
        return float(np.sum(np.abs(proj) ** 2 / denom ** 2))

    def beams(lam):
        denom = (evals + lam)[:, None]
        return U @ (proj / denom)                                # Nt x K

    if not evals.size:
        return np.zeros((Nt, mu.shape[1]), dtype=complex), 0.0
    lam = 0.0
    p0 = power(lam)
    if p0 <= P_s:
        return beams(lam), lam
    lo, hi = lam, 1.0
    while power(hi) > P_s:
        hi *= 2.0
        if hi > 1e30:
            raise RuntimeError("power bisection upper bound not found")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if power(mid) > P_s:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * max(1.0, hi) and abs(power(hi) - P_s) <= power_tol * P_s:
            break
    return beams(hi), hi


# ---------------------------------------------------------------------------
# Element quadratics and the joint phase / selection sweep
# ---------------------------------------------------------------------------

@dataclass
class ElementQuadratics:
    """Per-BS quadratic model of the weighted-MSE objective in theta_s:
    the theta-dependent part equals sum_s Re(theta^H B_s theta) - 2 Re(theta^H c_s)."""

    B: np.ndarray            # (S, M, M) Hermitian PSD
    c: np.ndarray            # (S, M) complex


def build_element_quadratics(channels, W, nu, mu):
    S, K, M = channels.num_bs, channels.num_users, channels.num_elements
    B = np.zeros((S, M, M), dtype=complex)
    c = np.zeros((S, M), dtype=complex)
    for s in range(S):
        GW = channels.G[s] @ W[s]                                # (M, K)
        d = channels.hr[s].conj()[:, None, :] * GW.T[None, :, :]  # (K, K, M)
        b = channels.hd[s].conj() @ W[s]                         # (K, K)
        for k in range(K):
            w_k = mu[s, k] * np.abs(nu[s, k]) ** 2
            B[s] += w_k * np.einsum("jm,jn->mn", d[k].conj(), d[k])
            c[s] += mu[s, k] * (nu[s, k] * d[k, k].conj()
                                - np.abs(nu[s, k]) ** 2 * (b[k][:, None] * d[k].conj()).sum(axis=0))
    return ElementQuadratics(B=B, c=c)


def element_objective(quad, theta):
    """sum_s theta_s^H B_s theta_s - 2 Re(theta_s^H c_s)."""
    total = 0.0
    for s in range(quad.B.shape[0]):
        total += np.real(theta[s].conj() @ quad.B[s] @ theta[s])
        total -= 2.0 * np.real(theta[s].conj() @ quad.c[s])
    return total


def zeta_values(quad, theta, m):
    """zeta_{s,m} = sum_{n != m} B_s(m, n) theta_{s,n} - c_s(m), all s."""
    S = quad.B.shape[0]
    z = np.empty(S, dtype=complex)
    for s in range(S):
        z[s] = quad.B[s, m] @ theta[s] - quad.B[s, m, m] * theta[s, m] - quad.c[s, m]
    return z


def element_scores(zeta):
    """Reduction of the per-element objective for each candidate BS choice:
    |zeta|(1 + cos angle(zeta)), the algebraic rearrangement of the
    enumeration objective (kept for cross-checks; the enumeration itself is
    the production path)."""
    return np.abs(zeta) + np.real(zeta)


def update_element(quad, theta, m):
    """Jointly pick the served BS and phase of element m; updates theta in
    place and returns (s_star, phi, a_m column)."""
    z = zeta_values(quad, theta, m)
    # Literal enumeration of the selection objective: serving s_star costs
    # sum_{s != s_star} Re(zeta_s) - |zeta_{s_star}|.
    re = np.real(z)
    costs = re.sum() - re - np.abs(z)
    s_star = int(np.argmin(costs))          # ties -> smallest index
    phi = wrap_phase(np.pi + np.angle(z[s_star]))
    theta[:, m] = 1.0
    theta[s_star, m] = np.exp(1j * phi)
    a_col = np.zeros(quad.B.shape[0], dtype=int)
    a_col[s_star] = 1
    return s_star, phi, a_col


def update_element_fixed_bs(quad, theta, m, s):
    """Phase-only update when the serving BS of element m is pinned."""
    z = zeta_values(quad, theta, m)
    phi = wrap_phase(np.pi + np.angle(z[s]))
    theta[:, m] = 1.0
    theta[s, m] = np.exp(1j * phi)
    return phi


def element_sweep(quad, theta, phi, A, fixed_A=None, tol=1e-5, max_sweeps=20):
    """Cyclic per-element sweep until the quadratic objective stalls.

    With ``fixed_A`` only phases of already-assigned elements are updated.
    Mutates theta, phi, A and returns the final objective.
    """
    M = theta.shape[1]
    obj = element_objective(quad, theta)
    for _ in range(max_sweeps):
        prev = obj
        for m in range(M):
            if fixed_A is None:
                s_star, ph, a_col = update_element(quad, theta, m)
                A[:, m] = a_col
                phi[s_star, m] = ph
            else:
                served = np.flatnonzero(fixed_A[:, m] == 1)
                if served.size == 0:
                    theta[:, m] = 1.0
                    continue
                s = int(served[0])
                phi[s, m] = update_element_fixed_bs(quad, theta, m, s)
        obj = element_objective(quad, theta)
        if abs(prev - obj) <= tol * (1.0 + abs(prev)):
            break
    return obj


# ---------------------------------------------------------------------------
# Algorithm driver
# ---------------------------------------------------------------------------

def mmse_init_beamformers(channels, theta, P, sigma2):
    """Per-BS MMSE beamformers, each column scaled to an equal power split."""
    S, K = channels.num_bs, channels.num_users
    Nt = channels.num_antennas
    W = np.zeros((S, Nt, K), dtype=complex)
    for s in range(S):
        H = core.effective_channels_bs(channels, theta[s], s)   # rows h_k^H
        h = H.conj().T                                          # Nt x K
        A = h @ h.conj().T + (K * sigma2 / P) * np.eye(Nt)
        V = np.linalg.solve(A, h)
        norms = np.linalg.norm(V, axis=0)
        norms[norms == 0] = 1.0
        W[s] = V / norms * np.sqrt(P / K)
    return W


def wmmse_objective(channels, theta, W, nu, mu, sigma2):
    """Reformulated objective sum (mu * MSE - log2 mu)."""
    mses = mse_matrix(channels, theta, W, nu, sigma2)
    return float(np.sum(mu * mses - np.log2(mu)))


@dataclass
class SumRateResult:
    W: np.ndarray
    state: ReflectionState
    rate_trace: list
    objective_trace: list
    converged: bool
    iterations: int

    @property
    def sum_rate(self):
        return self.rate_trace[-1]

    def rows(self, seed):
        """CSV rows (seed, outer_iter, sum_rate_bps_hz, objective_32a)."""
        return [(seed, it, r, o) for it, (r, o) in
                enumerate(zip(self.rate_trace, self.objective_trace))]


def run_algorithm2(channels, cfg, init=None, fixed_A=None, rng=None,
                   tol=1e-4, max_outer=100, sweep_tol=1e-5, max_sweeps=20,
                   optimize_reflection=True):
    """WMMSE BCD for sum-rate maximization.

    ``init`` may supply a ReflectionState; otherwise phases are uniform and
    each element's serving BS is drawn uniformly over the S+1 feasible
    patterns.  ``fixed_A`` pins the selection matrix (baseline schemes);
    ``optimize_reflection=False`` additionally pins the phases, reducing the
    loop to beamformer-only WMMSE at a fixed reflection.
    """
    S, K, M = channels.num_bs, channels.num_users, channels.num_elements
    P, sigma2 = cfg.P, cfg.sigma2
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    if init is None:
        st = random_state(S, M, rng) if M else ReflectionState(
            np.full((S, 0), 2 * np.pi), np.zeros((S, 0), dtype=int))
        phi, A = st.phi.copy(), st.a.copy()
    else:
        phi, A = init.phi.copy(), init.a.copy()
    if fixed_A is not None:
        A = np.asarray(fixed_A, dtype=int).copy()
    theta = np.exp(1j * phi * A)

    W = mmse_init_beamformers(channels, theta, P, sigma2)

    rate_trace = []
    obj_trace = []
    converged = False
    it = 0
    for it in range(1, max_outer + 1):
        nu = update_nu(channels, theta, W, sigma2)
        mu = update_mu(mse_matrix(channels, theta, W, nu, sigma2))
        rate_trace.append(float(np.sum(np.log2(mu))))
        obj_trace.append(wmmse_objective(channels, theta, W, nu, mu, sigma2))
        if len(obj_trace) > 1 and abs(obj_trace[-2] - obj_trace[-1]) <= tol * abs(obj_trace[-2]):
            converged = True
            break
        for s in range(S):
            W[s], _ = update_w(channels, theta, nu, mu, P, s)
        if M and optimize_reflection:
            quad = build_element_quadratics(channels, W, nu, mu)
            element_sweep(quad, theta, phi, A, fixed_A=fixed_A,
                          tol=sweep_tol, max_sweeps=max_sweeps)

    state = ReflectionState(phi, A)
    return SumRateResult(W=W, state=state, rate_trace=rate_trace,
                         objective_trace=obj_trace, converged=converged,
                         iterations=it)
