"""Binary service-selection optimization via 1-norm relaxation, a
difference-of-convex penalty, and majorization-minimization with projected
gradient subproblem solves."""

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class SelectionQuadratics:
    """Quadratic model of the QoS-slack objective in the relaxed selection
    variables.  Per BS s the objective contribution is
    a^T E_s a - a^T D_s a + Re(a^T beta_s) (constants dropped)."""

    E: np.ndarray            # (S, M, M) Hermitian PSD
    D: np.ndarray            # (S, M, M) Hermitian PSD
    beta: np.ndarray         # (S, M) complex
    dt: np.ndarray           # (S, K, K, M) selection-weighted channel terms
    bt: np.ndarray           # (S, K, K) offsets
    gamma: np.ndarray        # (K,)


def build_selection_quadratics(channels, W, phi, gamma, sigma2=None):
    """Assemble the selection quadratics from fixed beamformers and phases.

    dt_{s,k,j} = diag(exp(j phi_s) - 1) d_{s,k,j} and bt = 1^T d + b, so that
    for binary a the slack term theta^T d + b equals a^T dt + bt.
    """
    S, K, M = channels.num_bs, channels.num_users, channels.num_elements
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), (K,))
    E = np.zeros((S, M, M), dtype=complex)
    D = np.zeros((S, M, M), dtype=complex)
    beta = np.zeros((S, M), dtype=complex)
    dt_all = np.zeros((S, K, K, M), dtype=complex)
    bt_all = np.zeros((S, K, K), dtype=complex)
    for s in range(S):
        GW = channels.G[s] @ W[s]                       # (M, K)
        d = channels.hr[s].conj()[:, None, :] * GW.T[None, :, :]   # (K, K, M)
        b = channels.hd[s].conj() @ W[s]                # (K, K)
        weight = np.exp(1j * phi[s]) - 1.0              # (M,)
        dt = d * weight[None, None, :]
        bt = d.sum(axis=2) + b
        dt_all[s], bt_all[s] = dt, bt
        for k in range(K):
            E[s] += (1.0 + gamma[k]) * np.outer(dt[k, k], dt[k, k].conj())
            beta[s] += 2.0 * dt[k, k] * np.conj(bt[k, k])
            for j in range(K):
                D[s] += gamma[k] * np.outer(dt[k, j], dt[k, j].conj())
                if j != k:
                    beta[s] -= 2.0 * gamma[k] * dt[k, j] * np.conj(bt[k, j])
    return SelectionQuadratics(E=E, D=D, beta=beta, dt=dt_all, bt=bt_all,
                               gamma=np.array(gamma))


def selection_objective(quad, A):
    """Relaxed quadratic objective sum_s a^T E a - a^T D a + Re(a^T beta)."""
    A = np.asarray(A, dtype=float)
    total = 0.0
    for s in range(quad.E.shape[0]):
        a = A[s]
        total += np.real(a @ quad.E[s] @ a) - np.real(a @ quad.D[s] @ a)
        total += np.real(a @ quad.beta[s])
    return total


def qos_objective_via_model(quad, A):
    """QoS-slack sum evaluated through the reflection model for binary A
    (up to the constants dropped in the quadratic form)."""
    A = np.asarray(A, dtype=float)
    S, K = quad.bt.shape[:2]
    total = 0.0
    for s in range(S):
        vals = quad.dt[s] @ A[s] + quad.bt[s]           # (K, K)
        mag = np.abs(vals) ** 2
        for k in range(K):
            total += mag[k, k] - quad.gamma[k] * (mag[k].sum() - mag[k, k])
    return total


def binary_violation(A):
    """DC gap sum_s (1^T a_s - a_s^T a_s); zero iff every entry is binary."""
    A = np.asarray(A, dtype=float)
    return float(np.sum(A) - np.sum(A * A))


def penalized_objective(quad, A, tau):
    return selection_objective(quad, A) - tau * binary_violation(A)


def surrogate_objective(quad, A, A_t, tau):
    """First-order minorant of the penalized objective at expansion point A_t.

    The convex pieces (the E quadratic and the concave penalty's -a^T a term)
    are linearized; equals penalized_objective at A = A_t.
    """
    A = np.asarray(A, dtype=float)
    A_t = np.asarray(A_t, dtype=float)
    total = 0.0
    for s in range(quad.E.shape[0]):
        a, at = A[s], A_t[s]
        Eat = np.real(quad.E[s] @ at)
        total += at @ Eat + 2.0 * (a - at) @ Eat
        total -= np.real(a @ quad.D[s] @ a)
        total += np.real(a @ quad.beta[s])
        total -= tau * (a.sum() - at @ at - 2.0 * at @ (a - at))
    return total


def project_column(v):
    """Projection of v in R^S onto {0 <= a <= 1, 1^T a <= 1}."""
    w = np.clip(v, 0.0, 1.0)
    if w.sum() <= 1.0:
        return w
    lo, hi = 0.0, float(np.max(v))
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if np.clip(v - mid, 0.0, 1.0).sum() > 1.0:
            lo = mid
        else:
            hi = mid
    return np.clip(v - hi, 0.0, 1.0)


def project_feasible(A):
    out = np.empty_like(A, dtype=float)
    for m in range(A.shape[1]):
        out[:, m] = project_column(A[:, m])
    return out


@dataclass
class MmState:
    """Relaxed selection iterate, penalty weight, and iteration index."""

    A: np.ndarray
    tau: float
    t: int = 0

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if np.any(A < -1e-9) or np.any(A > 1 + 1e-9):
            raise ValueError("relaxed selection outside [0, 1]")
        if np.any(A.sum(axis=0) > 1 + 1e-9):
            raise ValueError("column mass exceeds 1")
        if self.tau < 0:
            raise ValueError("penalty must be nonnegative")
        self.A = A


def mm_step(quad, state, pg_tol=1e-6, pg_max_iter=500):
    """One MM iteration: maximize the minorant over the column polytopes.

    The subproblem is concave (linear minus the PSD D quadratic) and solved
    by projected gradient ascent to first-order stationarity.
    """
    A_t = state.A
    tau = state.tau
    S, M = A_t.shape
    ReD = np.real(quad.D)
    lin = np.empty((S, M))
    for s in range(S):
        lin[s] = (2.0 * np.real(quad.E[s] @ A_t[s]) + 2.0 * tau * A_t[s]
                  - tau + np.real(quad.beta[s]))
    lip = 2.0 * max(max(np.linalg.norm(ReD[s], 2) for s in range(S)), 1e-12)
    step = 1.0 / lip

    A = A_t.copy()
    converged = False
    for _ in range(pg_max_iter):
        grad = np.empty_like(A)
        for s in range(S):
            grad[s] = -2.0 * ReD[s] @ A[s] + lin[s]
        A_new = project_feasible(A + step * grad)
        if np.linalg.norm(A_new - A) / step < pg_tol:
            A = A_new
            converged = True
            break
        A = A_new
    if not converged:
        log.warning("MM subproblem hit the projected-gradient iteration cap")
    return MmState(A=A, tau=tau, t=state.t + 1)


def round_selection(A, threshold=0.5):
    """Per column: keep the largest entry if above threshold, else no service."""
    A = np.asarray(A, dtype=float)
    out = np.zeros_like(A, dtype=int)
    for m in range(A.shape[1]):
        s = int(np.argmax(A[:, m]))
        if A[s, m] > threshold:
            out[s, m] = 1
    return out


def exchange_polish(quad, A_bin, max_passes=10):
    """Greedy one-column exchanges on a binary selection until no single
    reassignment (including dropping service) improves the objective."""
    A = np.array(A_bin, dtype=int)
    S, M = A.shape
    best = selection_objective(quad, A)
    for _ in range(max_passes):
        improved = False
        for m in range(M):
            col = A[:, m].copy()
            for choice in range(S + 1):
                A[:, m] = 0
                if choice < S:
                    A[choice, m] = 1
                val = selection_objective(quad, A)
                if val > best + 1e-15 * (1.0 + abs(best)):
                    best = val
                    col = A[:, m].copy()
                    improved = True
            A[:, m] = col
        if not improved:
            break
    return A


@dataclass
class SelectionResult:
    A: np.ndarray
    relaxed: np.ndarray
    iterations: int
    violation: float
    rounded_fallback: bool = False


def run_selection(quad, A_init, tau0=None, violation_tol=1e-3,
                  obj_tol=1e-8, max_tau_rounds=12, mm_iters_per_round=100):
    """Drive MM with a geometric penalty schedule until the iterate is
    (near-)binary, then round to a feasible selection matrix."""
    A = project_feasible(np.asarray(A_init, dtype=float))
    if tau0 is None:
        tau0 = 0.01 * np.linalg.norm(quad.E.sum(axis=0), 2)
        if tau0 <= 0:
            tau0 = 1.0
    state = MmState(A=A, tau=float(tau0))
    total_iters = 0
    fallback = False
    for _ in range(max_tau_rounds):
        prev = penalized_objective(quad, state.A, state.tau)
        for _ in range(mm_iters_per_round):
            state = mm_step(quad, state)
            total_iters += 1
            cur = penalized_objective(quad, state.A, state.tau)
            if abs(cur - prev) <= obj_tol * (1.0 + abs(prev)):
                break
            prev = cur
        if binary_violation(state.A) <= violation_tol:
            break
        state = MmState(A=state.A, tau=state.tau * 5.0, t=state.t)
    else:
        fallback = binary_violation(state.A) > violation_tol
        if fallback:
            log.warning("selection never reached a binary point; rounding anyway")
    A_bin = exchange_polish(quad, round_selection(state.A))
    return SelectionResult(A=A_bin, relaxed=state.A, iterations=total_iters,
                           violation=binary_violation(state.A),
                           rounded_fallback=fallback)
