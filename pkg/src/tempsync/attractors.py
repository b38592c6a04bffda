"""Dissipativity transforms, pullback trajectory estimation, and the coupled
comparison matrix for per-node attracting trajectories.

This is the sufficient-condition machinery behind the ultimate-boundedness
assumption that certificates rely on: one-sided Lipschitz rates l(t) with an
exponential envelope turn into a dissipativity pair (alpha, beta), bounded
forcing then yields a single globally defined pullback/forward attracting
trajectory per node, and row dominance of the coupled matrix
C(t) = diag(l_i(t)) + 2 [a_ik(t)] certifies that the coupled network keeps
those trajectories.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .integrate import SolverConfig, rk4_span
from .model import NetworkSystem


class HypothesisError(ValueError):
    """Adjacency sign hypothesis violated on the sampling grid."""


def _as_time_fn(v) -> Callable[[float], float]:
    if np.isscalar(v):
        vv = float(v)
        return lambda t: vv
    return v


def dissipativity_from_onesided(l, f_at_zero_sq, gamma: float, eps: float):
    """Dissipativity pair from a one-sided Lipschitz rate.

    Given 2<x - y, f(t,x) - f(t,y)> <= l(t)|x - y|^2 with envelope
    exp(int l) <= K exp(-gamma (t - t0)), returns contracts
    alpha(t) = 2 eps + l(t), beta(t) = (2/eps)|f(t, 0)|^2 and the degraded
    rate gamma - 2 eps, valid for any eps in (0, gamma/2).
    """
    if not (0.0 < eps < gamma / 2.0):
        raise ValueError("eps must lie in (0, gamma/2)")
    lf = _as_time_fn(l)
    f0 = _as_time_fn(f_at_zero_sq)

    def alpha(t):
        return 2.0 * eps + lf(t)

    def beta(t):
        v = (2.0 / eps) * f0(t)
        if v < 0:
            raise ValueError(f"|f(t,0)|^2 must be nonnegative, got {f0(t)} at t={t}")
        return v

    return alpha, beta, gamma - 2.0 * eps


@dataclass(frozen=True)
class DissipativityData:
    """One-sided rate l with exponential envelope (K, gamma) and the derived
    dissipativity pair."""

    l: Callable[[float], float]
    K: float
    gamma: float
    alpha: Callable[[float], float]
    beta_diss: Callable[[float], float]
    gamma_bar_diss: float

    @classmethod
    def build(cls, l, f_at_zero_sq, K: float, gamma: float, eps: float) -> "DissipativityData":
        if K < 1:
            raise ValueError("K must be at least 1")
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        alpha, beta, gb = dissipativity_from_onesided(l, f_at_zero_sq, gamma, eps)
        return cls(_as_time_fn(l), float(K), float(gamma), alpha, beta, gb)

    def envelope_holds_on(self, grid) -> bool:
        """Check exp(int_s^t l) <= K exp(-gamma (t - s)) for grid pairs s <= t."""
        grid = np.asarray(grid, dtype=float)
        lv = np.array([self.l(t) for t in grid])
        I = np.concatenate([[0.0], np.cumsum(0.5 * (lv[1:] + lv[:-1]) * np.diff(grid))])
        g = I + self.gamma * grid
        run_min = np.minimum.accumulate(g)
        return bool(np.max(g - run_min) <= math.log(self.K) + 1e-12)


def fit_sl2_envelope(l, grid, inflate: float = 1.01):
    """Least-squares (K, gamma) envelope for exp(int l), then certify it.

    Fits int_{t0}^t l ~ log K - gamma (t - t0) on the grid, inflates K by
    the given factor and verifies the pointwise inequality over all grid
    pairs s <= t.  Returns (K, gamma, certified).
    """
    grid = np.asarray(grid, dtype=float)
    lf = _as_time_fn(l)
    lv = np.array([lf(t) for t in grid])
    I = np.concatenate([[0.0], np.cumsum(0.5 * (lv[1:] + lv[:-1]) * np.diff(grid))])
    dt = grid - grid[0]
    slope, intercept = np.polyfit(dt, I, 1)
    gamma = -slope
    K = max(1.0, math.exp(intercept)) * inflate
    if gamma <= 0:
        return K, gamma, False
    g = I + gamma * dt
    run_min = np.minimum.accumulate(g)
    certified = bool(np.max(g - run_min) <= math.log(K) + 1e-12)
    return K, gamma, certified


@dataclass
class PullbackEstimate:
    state: np.ndarray
    gap: float
    depth: float
    converged: bool


def pullback_trajectory(rhs, t: float, s_max: float, x0, cfg: SolverConfig | None = None,
                        tol: float = 1e-8) -> PullbackEstimate:
    """Estimate the value at time t of the bounded entire attracting solution.

    Integrates x' = rhs from t - s to t starting at x0 for doubling depths
    s = 1, 2, 4, ..., capped at s_max, until two successive estimates differ
    by less than tol.  Non-convergence is reported through the returned gap,
    not raised.
    """
    if s_max <= 0:
        raise ValueError("s_max must be positive")
    cfg = cfg or SolverConfig()
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    depths = []
    s = 1.0
    while s < s_max:
        depths.append(s)
        s *= 2.0
    depths.append(float(s_max))
    prev = None
    gap = math.inf
    for s in depths:
        est = rk4_span(rhs, t - s, x0, t, cfg.dt)
        if prev is not None:
            gap = float(np.max(np.abs(est - prev)))
            if gap < tol:
                return PullbackEstimate(est, gap, s, True)
        prev = est
    return PullbackEstimate(prev, gap, depths[-1], False)


def ultimate_bound(K: float, gamma_bar: float, mu: float) -> float:
    """Uniform ultimate bound K mu / (1 - exp(-gamma_bar)) on squared norms."""
    if K < 1:
        raise ValueError("K must be at least 1")
    if gamma_bar <= 0:
        raise ValueError("gamma_bar must be positive")
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    return K * mu / (1.0 - math.exp(-gamma_bar))


@dataclass
class CoupledComparisonCheck:
    """Row-dominance check of C(t) = diag(l_i(t)) + 2 [a_ik(t)]."""

    matrix: Callable[[float], np.ndarray]
    verdict: bool
    gamma: float
    n_nodes: int
    grid: tuple[float, float, float]

    def to_json_dict(self) -> dict:
        t0, t1, step = self.grid
        return {
            "gamma": self.gamma,
            "verdict": self.verdict,
            "nodes": self.n_nodes,
            "grid": {"t0": t0, "t1": t1, "step": step},
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")


def coupled_comparison_check(system: NetworkSystem, L: Sequence, grid) -> CoupledComparisonCheck:
    """Certify per-node attracting trajectories through row dominance.

    L holds one one-sided rate per node (scalars or contracts t -> l_i(t)).
    Requires a_ij(t) >= 0 on the grid (checked; raises otherwise).  The
    verdict is True iff sup l_i < 0 and the margin
    gamma = inf over (t, i) of |l_i(t)| - 2 sum_k a_ik(t) is positive, in
    which case squared per-node differences of any two runs decay at least
    like exp(-gamma (t - t0)).
    """
    n = system.n_nodes
    if len(L) != n:
        raise ValueError(f"need one rate per node, got {len(L)} for {n} nodes")
    rates = [_as_time_fn(l) for l in L]
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise ValueError("grid must contain at least one time")
    c = system.global_coupling

    def matrix(t):
        A = c * system.schedule.sample(t)
        C = 2.0 * A
        for i in range(n):
            C[i, i] = rates[i](t)
        return C

    gamma = math.inf
    sup_l = -math.inf
    for t in grid:
        A = c * system.schedule.sample(t)
        if (A < 0).any():
            i, k = np.argwhere(A < 0)[0]
            raise HypothesisError(
                f"a_{i + 1}{k + 1}(t) = {A[i, k]:.6g} < 0 at t={t}; the coupled "
                "comparison requires nonnegative weights"
            )
        lv = np.array([r(t) for r in rates])
        sup_l = max(sup_l, float(lv.max()))
        margins = -lv - 2.0 * A.sum(axis=1)
        gamma = min(gamma, float(margins.min()))
    verdict = sup_l < 0.0 and gamma > 0.0
    step = float(grid[1] - grid[0]) if grid.size > 1 else 0.0
    return CoupledComparisonCheck(
        matrix, verdict, gamma, n, (float(grid[0]), float(grid[-1]), step)
    )
