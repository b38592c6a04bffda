"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

Backend selection happens once, at import time.  The jitted path is used
when numba is importable and ``SYNC_TOOLKIT_NO_NUMBA`` is unset (or "0");
setting the variable to anything else forces the numpy fallback.  Both
paths evaluate the same arithmetic on the same grids; they may differ in
floating-point summation order at the few-ulp level, so determinism is
guaranteed per backend, not across backends.

``benchmarks/bench_kernels.py`` times the two paths against each other.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without the extra
    _njit = None
    _HAVE_NUMBA = False


def _disabled_by_env() -> bool:
    return os.environ.get("SYNC_TOOLKIT_NO_NUMBA", "").strip() not in ("", "0")


USE_NUMBA = _HAVE_NUMBA and not _disabled_by_env()


def backend() -> str:
    """Name of the kernel backend selected at import ("numba" or "numpy")."""
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# pair bookkeeping: pairs (i, j), i < j, in lexicographic order
# ---------------------------------------------------------------------------

_PAIR_CACHE: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def n_pairs(n: int) -> int:
    return n * (n - 1) // 2


def pair_arrays(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(iu, ju, pidx): pair endpoints and the symmetric (n, n) pair-index lookup.

    pidx[i, j] is the lexicographic index of the unordered pair {i, j};
    the diagonal holds -1.
    """
    cached = _PAIR_CACHE.get(n)
    if cached is None:
        iu, ju = np.triu_indices(n, k=1)
        iu = iu.astype(np.int64)
        ju = ju.astype(np.int64)
        pidx = np.full((n, n), -1, dtype=np.int64)
        pidx[iu, ju] = np.arange(len(iu), dtype=np.int64)
        pidx[ju, iu] = pidx[iu, ju]
        iu.setflags(write=False)
        ju.setflags(write=False)
        pidx.setflags(write=False)
        cached = (iu, ju, pidx)
        _PAIR_CACHE[n] = cached
    return cached


def pair_index(i: int, j: int, n: int) -> int:
    if i == j:
        raise ValueError("pair index requires i != j")
    i, j = (i, j) if i < j else (j, i)
    return i * (2 * n - i - 1) // 2 + (j - i - 1)


# ---------------------------------------------------------------------------
# diffusive coupling:  row i of the result is  c * sum_k a_ik (x_k - x_i)
# ---------------------------------------------------------------------------

def _coupling_term_np(A, X, c):
    return c * (A @ X - A.sum(axis=1)[:, None] * X)


def _coupling_term_loops(A, X, c):
    n, m = X.shape
    out = np.zeros((n, m))
    for i in range(n):
        for k in range(n):
            a = A[i, k]
            if a != 0.0:
                for q in range(m):
                    out[i, q] += a * (X[k, q] - X[i, q])
    return c * out


# ---------------------------------------------------------------------------
# pairwise squared errors and the max-spread error over a trajectory
# ---------------------------------------------------------------------------

def _xi_series_np(states, iu, ju):
    d = states[:, iu, :] - states[:, ju, :]
    return np.einsum("tpm,tpm->tp", d, d)


def _xi_series_loops(states, iu, ju):
    T, _, m = states.shape
    P = iu.shape[0]
    out = np.empty((T, P))
    for t in range(T):
        for p in range(P):
            s = 0.0
            for q in range(m):
                dv = states[t, iu[p], q] - states[t, ju[p], q]
                s += dv * dv
            out[t, p] = s
    return out


def _e_hat_series_np(states):
    spread = states.max(axis=1) - states.min(axis=1)
    return np.sqrt(np.einsum("tm,tm->t", spread, spread))


def _e_hat_series_loops(states):
    T, n, m = states.shape
    out = np.empty(T)
    for t in range(T):
        acc = 0.0
        for q in range(m):
            lo = states[t, 0, q]
            hi = lo
            for i in range(1, n):
                v = states[t, i, q]
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
            acc += (hi - lo) * (hi - lo)
        out[t] = np.sqrt(acc)
    return out


# ---------------------------------------------------------------------------
# per-pair contraction rates and row-dominance margins
#
#   delta_p = alpha_p - (a_ij + a_ji + 0.5 * sum_{k != i,j} (a_jk + a_ik))
#   gamma_p = 2 |delta_p| - sum_{k != i,j} |a_jk - a_ik|
# ---------------------------------------------------------------------------

def _delta_gamma_np(A, alpha, iu, ju):
    rowsum = A.sum(axis=1)
    cross = A[iu, ju] + A[ju, iu]
    delta = alpha - (cross + 0.5 * (rowsum[iu] + rowsum[ju] - cross))
    absdiff = np.abs(A[ju, :] - A[iu, :]).sum(axis=1)
    absdiff -= np.abs(A[ju, iu]) + np.abs(A[iu, ju])
    gamma = 2.0 * np.abs(delta) - absdiff
    return delta, gamma


def _delta_gamma_loops(A, alpha, iu, ju):
    P = iu.shape[0]
    n = A.shape[0]
    delta = np.empty(P)
    gamma = np.empty(P)
    for p in range(P):
        i = iu[p]
        j = ju[p]
        s = 0.0
        d = 0.0
        for k in range(n):
            if k == i or k == j:
                continue
            s += A[j, k] + A[i, k]
            d += abs(A[j, k] - A[i, k])
        dp = alpha[p] - (A[i, j] + A[j, i] + 0.5 * s)
        delta[p] = dp
        gamma[p] = 2.0 * abs(dp) - d
    return delta, gamma


# ---------------------------------------------------------------------------
# comparison matrix assembly: diagonal 2*delta, off-diagonal positive parts
#
# row (i, j): coefficient eta(a_jk - a_ik) on pair (i, k) and
# eta(a_ik - a_jk) on pair (j, k), k != i, j, with eta the positive part.
# ---------------------------------------------------------------------------

def _assemble_comparison_np(A, delta, iu, ju, pidx):
    P = iu.shape[0]
    n = A.shape[0]
    karr = np.arange(n)
    d = A[ju, :] - A[iu, :]                         # (P, n): a_jk - a_ik
    valid = (karr[None, :] != iu[:, None]) & (karr[None, :] != ju[:, None])
    cols_i = np.where(valid, pidx[iu[:, None], karr[None, :]], P)
    cols_j = np.where(valid, pidx[ju[:, None], karr[None, :]], P)
    pos = np.where(valid, np.clip(d, 0.0, None), 0.0)
    neg = np.where(valid, np.clip(-d, 0.0, None), 0.0)
    E = np.zeros((P, P + 1))
    rows = np.repeat(np.arange(P), n)
    np.add.at(E, (rows, cols_i.ravel()), pos.ravel())
    np.add.at(E, (rows, cols_j.ravel()), neg.ravel())
    E = E[:, :P]
    E[np.arange(P), np.arange(P)] = 2.0 * delta
    return E


def _assemble_comparison_loops(A, delta, iu, ju, pidx):
    P = iu.shape[0]
    n = A.shape[0]
    E = np.zeros((P, P))
    for p in range(P):
        i = iu[p]
        j = ju[p]
        for k in range(n):
            if k == i or k == j:
                continue
            dv = A[j, k] - A[i, k]
            if dv > 0.0:
                E[p, pidx[i, k]] += dv
            elif dv < 0.0:
                E[p, pidx[j, k]] -= dv
        E[p, p] = 2.0 * delta[p]
    return E


# ---------------------------------------------------------------------------
# RK4 steppers for linear comparison systems
#
# The "const" variants integrate u' = E u + b with frozen coefficients over
# n uniform steps (one schedule segment); the "sampled" variants take
# per-step stage samples (t, t + h/2, t + h) prepared by the caller.
# Full-resolution output; callers subsample.
# ---------------------------------------------------------------------------

def _rk4_const_linear_impl(E, b, u0, h, n_steps):
    d = u0.shape[0]
    out = np.empty((n_steps + 1, d))
    out[0] = u0
    u = u0.copy()
    for s in range(n_steps):
        k1 = E @ u + b
        k2 = E @ (u + 0.5 * h * k1) + b
        k3 = E @ (u + 0.5 * h * k2) + b
        k4 = E @ (u + h * k3) + b
        u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[s + 1] = u
    return out


def _rk4_sampled_linear_impl(Es, bs, hs, u0):
    n = hs.shape[0]
    d = u0.shape[0]
    out = np.empty((n + 1, d))
    out[0] = u0
    u = u0.copy()
    for s in range(n):
        h = hs[s]
        k1 = Es[s, 0] @ u + bs[s, 0]
        k2 = Es[s, 1] @ (u + 0.5 * h * k1) + bs[s, 1]
        k3 = Es[s, 1] @ (u + 0.5 * h * k2) + bs[s, 1]
        k4 = Es[s, 2] @ (u + h * k3) + bs[s, 2]
        u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[s + 1] = u
    return out


def _rk4_const_principal_impl(E, U0, h, n_steps):
    U = U0.copy()
    norms = np.empty(n_steps + 1)
    norms[0] = np.abs(U).sum(axis=1).max()
    for s in range(n_steps):
        K1 = E @ U
        K2 = E @ (U + 0.5 * h * K1)
        K3 = E @ (U + 0.5 * h * K2)
        K4 = E @ (U + h * K3)
        U = U + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4)
        norms[s + 1] = np.abs(U).sum(axis=1).max()
    return norms, U


def _rk4_sampled_principal_impl(Es, hs, U0):
    n = hs.shape[0]
    U = U0.copy()
    norms = np.empty(n + 1)
    norms[0] = np.abs(U).sum(axis=1).max()
    for s in range(n):
        h = hs[s]
        K1 = Es[s, 0] @ U
        K2 = Es[s, 1] @ (U + 0.5 * h * K1)
        K3 = Es[s, 1] @ (U + 0.5 * h * K2)
        K4 = Es[s, 2] @ (U + h * K3)
        U = U + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4)
        norms[s + 1] = np.abs(U).sum(axis=1).max()
    return norms, U


# ---------------------------------------------------------------------------
# backend binding
# ---------------------------------------------------------------------------

if _HAVE_NUMBA:
    _jit = _njit(cache=True)
    _coupling_term_nb = _jit(_coupling_term_loops)
    _xi_series_nb = _jit(_xi_series_loops)
    _e_hat_series_nb = _jit(_e_hat_series_loops)
    _delta_gamma_nb = _jit(_delta_gamma_loops)
    _assemble_comparison_nb = _jit(_assemble_comparison_loops)
    _rk4_const_linear_nb = _jit(_rk4_const_linear_impl)
    _rk4_sampled_linear_nb = _jit(_rk4_sampled_linear_impl)
    _rk4_const_principal_nb = _jit(_rk4_const_principal_impl)
    _rk4_sampled_principal_nb = _jit(_rk4_sampled_principal_impl)

IMPLEMENTATIONS = {
    "numpy": {
        "coupling_term": _coupling_term_np,
        "xi_series": _xi_series_np,
        "e_hat_series": _e_hat_series_np,
        "delta_gamma": _delta_gamma_np,
        "assemble_comparison": _assemble_comparison_np,
        "rk4_const_linear": _rk4_const_linear_impl,
        "rk4_sampled_linear": _rk4_sampled_linear_impl,
        "rk4_const_principal": _rk4_const_principal_impl,
        "rk4_sampled_principal": _rk4_sampled_principal_impl,
    }
}
if _HAVE_NUMBA:
    IMPLEMENTATIONS["numba"] = {
        "coupling_term": _coupling_term_nb,
        "xi_series": _xi_series_nb,
        "e_hat_series": _e_hat_series_nb,
        "delta_gamma": _delta_gamma_nb,
        "assemble_comparison": _assemble_comparison_nb,
        "rk4_const_linear": _rk4_const_linear_nb,
        "rk4_sampled_linear": _rk4_sampled_linear_nb,
        "rk4_const_principal": _rk4_const_principal_nb,
        "rk4_sampled_principal": _rk4_sampled_principal_nb,
    }

_ACTIVE = IMPLEMENTATIONS["numba" if USE_NUMBA else "numpy"]


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def coupling_term(A, X, c):
    """c * sum_k a_ik (x_k - x_i) stacked over nodes; A (n, n), X (n, m)."""
    return _ACTIVE["coupling_term"](_f64(A), _f64(X), float(c))


def xi_series(states):
    """(T, P) squared pairwise distances from a (T, n, m) state stack."""
    n = states.shape[1]
    iu, ju, _ = pair_arrays(n)
    return _ACTIVE["xi_series"](_f64(states), iu, ju)


def e_hat_series(states):
    """Componentwise max-spread error sqrt(sum_q (max_i x_iq - min_i x_iq)^2)."""
    return _ACTIVE["e_hat_series"](_f64(states))


def delta_gamma(A, alpha):
    """Per-pair contraction rates and row-dominance margins at one instant."""
    n = A.shape[0]
    iu, ju, _ = pair_arrays(n)
    return _ACTIVE["delta_gamma"](_f64(A), _f64(alpha), iu, ju)


def assemble_comparison(A, delta):
    """Comparison matrix: diagonal 2*delta, nonnegative off-diagonal parts."""
    n = A.shape[0]
    iu, ju, pidx = pair_arrays(n)
    return _ACTIVE["assemble_comparison"](_f64(A), _f64(delta), iu, ju, pidx)


def rk4_const_linear(E, b, u0, h, n_steps):
    return _ACTIVE["rk4_const_linear"](_f64(E), _f64(b), _f64(u0), float(h), int(n_steps))


def rk4_sampled_linear(Es, bs, hs, u0):
    return _ACTIVE["rk4_sampled_linear"](_f64(Es), _f64(bs), _f64(hs), _f64(u0))


def rk4_const_principal(E, h, n_steps, U0=None):
    E = _f64(E)
    if U0 is None:
        U0 = np.eye(E.shape[0])
    return _ACTIVE["rk4_const_principal"](E, _f64(U0), float(h), int(n_steps))


def rk4_sampled_principal(Es, hs, U0):
    return _ACTIVE["rk4_sampled_principal"](_f64(Es), _f64(hs), _f64(U0))
