"""Linear comparison system for pairwise errors and synchronization certificates.

The vector of squared pairwise errors is dominated by the solution of the
linear system u' = E(t) u + beta(t), where E has the per-pair contraction
rates 2*delta_ij on the diagonal and positive parts of adjacency
cross-differences off the diagonal.  Row dominance of E yields the decay
estimate ||U(t, s)||_inf <= exp(-gamma_bar (t - s)) for the principal matrix
solution, which converts into quantitative verdicts: full-network
synchronization up to a constant, cluster synchronization, and persistence
margins under perturbation.

Every "for almost every t" condition is checked on a finite grid; verdicts
therefore carry a "grid-verified" assumption rather than a proof claim.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels as kern
from .integrate import SolverConfig, integrate
from .model import ClusterSpec, NetworkSystem, PairBoundSet, _ConstPiece


class InfeasibleTopologyError(ValueError):
    """The static-network pair hypothesis fails; carries the 1-based pair."""

    def __init__(self, pair, value):
        i, j = pair
        super().__init__(
            f"pair hypothesis 2(a_ij+a_ji) + sum(a_jk+a_ik-|a_jk-a_ik|) = "
            f"{value:.6g} <= 0 for pair ({i + 1}, {j + 1})"
        )
        self.pair = (i + 1, j + 1)
        self.value = value


# ---------------------------------------------------------------------------
# pointwise evaluation
# ---------------------------------------------------------------------------

def evaluate_comparison(system: NetworkSystem, bounds: PairBoundSet, t: float):
    """(E(t), delta(t), gamma(t)) for the full pair set at one instant.

    The effective adjacency is global_coupling * A(t).  E's diagonal equals
    2*delta; when delta_ij < 0 the row-dominance margin of row (i, j) is
    exactly gamma_ij.
    """
    if bounds.n_nodes != system.n_nodes:
        raise ValueError("bounds and system disagree on the number of nodes")
    n = system.n_nodes
    A = system.global_coupling * system.schedule.sample(t)
    iu, ju, _ = kern.pair_arrays(n)
    alpha = np.array([bounds.alpha(i, j, t) for i, j in zip(iu, ju)])
    delta, gamma = kern.delta_gamma(A, alpha)
    E = kern.assemble_comparison(A, delta)
    return E, delta, gamma


def _sd_arrays(A, iu, ju, cols):
    """Coupling sums S and restricted cross-difference sums D per pair.

    delta = alpha - S;  gamma = 2|delta| - D with the difference sum taken
    over the node subset ``cols`` (all nodes for the full-network margin).
    """
    rowsum = A.sum(axis=1)
    cross = A[iu, ju] + A[ju, iu]
    S = cross + 0.5 * (rowsum[iu] + rowsum[ju] - cross)
    sub = np.abs(A[ju][:, cols] - A[iu][:, cols]).sum(axis=1)
    D = sub - np.abs(A[ju, iu]) - np.abs(A[iu, ju])
    return S, D


def _grid_delta_gamma(system, bounds, times, nodes):
    """delta and gamma sampled on a time grid for pairs within ``nodes``.

    delta keeps the full coupling sum over all N nodes; gamma restricts the
    cross-difference sum to ``nodes`` (the cluster margin).  Piecewise
    constant schedules and time-constant bounds are evaluated once per
    segment.
    """
    c = system.global_coupling
    nodes = np.asarray(nodes, dtype=np.int64)
    iu_loc, ju_loc, _ = kern.pair_arrays(len(nodes))
    iu = nodes[iu_loc]
    ju = nodes[ju_loc]
    P = len(iu)
    T = len(times)
    delta = np.empty((T, P))
    gamma = np.empty((T, P))

    def alpha_at(t):
        return np.array([bounds.alpha(i, j, t) for i, j in zip(iu, ju)])

    segs = system.schedule.segments_between(times[0], times[-1] + 1e-12)
    starts = np.array([a for a, _, _ in segs])
    seg_of = np.clip(np.searchsorted(starts, times, side="right") - 1, 0, len(segs) - 1)
    for s, (a, b, piece) in enumerate(segs):
        idx = np.nonzero(seg_of == s)[0]
        if idx.size == 0:
            continue
        if isinstance(piece, _ConstPiece):
            A = c * piece.matrix
            S, D = _sd_arrays(A, iu, ju, nodes)
            if bounds.time_constant:
                d = alpha_at(times[idx[0]]) - S
                delta[idx] = d
                gamma[idx] = 2.0 * np.abs(d) - D
            else:
                for k in idx:
                    d = alpha_at(times[k]) - S
                    delta[k] = d
                    gamma[k] = 2.0 * np.abs(d) - D
        else:
            for k in idx:
                t = times[k]
                A = c * piece(t)
                S, D = _sd_arrays(A, iu, ju, nodes)
                d = alpha_at(t) - S
                delta[k] = d
                gamma[k] = 2.0 * np.abs(d) - D
    return delta, gamma, (iu, ju)


# ---------------------------------------------------------------------------
# window bounds mu1, mu2
# ---------------------------------------------------------------------------

def _sliding_unit_window_sup(times, values) -> float:
    """sup over tau of the trapezoid integral of values over [tau, tau+1]."""
    if times[-1] - times[0] < 1.0 - 1e-9:
        raise ValueError("grid must span at least one unit time window")
    F = np.concatenate(
        [[0.0], np.cumsum(0.5 * (values[1:] + values[:-1]) * np.diff(times))]
    )
    upper = times + 1.0
    ok = upper <= times[-1] + 1e-12
    Fu = np.interp(np.minimum(upper[ok], times[-1]), times, F)
    return float(np.max(Fu - F[ok]))


def compute_mu1(bounds: PairBoundSet, window_grid, pairs=None) -> float:
    """Sliding unit-window bound on the stacked heterogeneity vector.

    mu1 = sup_tau int_tau^{tau+1} |(2 beta_ij(s))_pairs| ds with the
    Euclidean norm over the listed pairs (all pairs by default).  Constant
    bounds short-circuit to the exact value |2 beta|.
    """
    if pairs is None:
        iu, ju, _ = kern.pair_arrays(bounds.n_nodes)
        pairs = list(zip(iu.tolist(), ju.tolist()))
    times = np.asarray(window_grid, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise ValueError("window_grid must contain at least two times")

    def norm_at(t):
        v = np.array([2.0 * bounds.beta(i, j, t) for i, j in pairs])
        return float(np.sqrt(np.dot(v, v)))

    if bounds.time_constant:
        return norm_at(times[0])
    g = np.array([norm_at(t) for t in times])
    return _sliding_unit_window_sup(times, g)


def compute_mu2(system: NetworkSystem, cluster: ClusterSpec, rho: float, window_grid) -> float:
    """Cross-cluster adjacency mismatch bound.

    2 rho^2 * max over (i, j in J, k outside J) of the sliding unit-window
    integral of |a_jk(s) - a_ik(s)| on the effective adjacency.  Zero when
    the cluster has no external nodes or every external column is identical
    across cluster rows.
    """
    cluster.validate_for(system.n_nodes)
    if rho <= 0:
        raise ValueError("rho must be positive")
    J = list(cluster.indices)
    outside = [k for k in range(system.n_nodes) if k not in cluster.indices]
    if not outside:
        return 0.0
    times = np.asarray(window_grid, dtype=float)
    c = system.global_coupling
    samples = np.stack([c * system.schedule.sample(t) for t in times])
    worst = 0.0
    for a_i in range(len(J)):
        for b_i in range(a_i + 1, len(J)):
            i, j = J[a_i], J[b_i]
            for k in outside:
                series = np.abs(samples[:, j, k] - samples[:, i, k])
                if not series.any():
                    continue
                worst = max(worst, _sliding_unit_window_sup(times, series))
    return 2.0 * rho * rho * worst


# ---------------------------------------------------------------------------
# comparison system and its solutions
# ---------------------------------------------------------------------------

class ComparisonSystem:
    """The dominating linear system u' = E(t) u + beta(t) on the pair cone.

    Off-diagonal entries of E(t) are nonnegative for every t, so solutions
    started in the positive cone stay there.  Built from a network via
    :meth:`from_network`, or manually from dim and callables.
    """

    def __init__(self, dim, E, beta_vec, breakpoints=None, piecewise_constant=False):
        self.dim = int(dim)
        self._E = E
        self._beta = beta_vec
        self._breakpoints = (
            np.asarray(breakpoints, dtype=float) if breakpoints is not None else None
        )
        self.piecewise_constant = bool(piecewise_constant)
        self._system = None
        self._bounds = None

    @classmethod
    def from_network(cls, system: NetworkSystem, bounds: PairBoundSet) -> "ComparisonSystem":
        if bounds.n_nodes != system.n_nodes:
            raise ValueError("bounds and system disagree on the number of nodes")
        n = system.n_nodes
        iu, ju, _ = kern.pair_arrays(n)

        def E(t):
            A = system.global_coupling * system.schedule.sample(t)
            alpha = np.array([bounds.alpha(i, j, t) for i, j in zip(iu, ju)])
            delta, _ = kern.delta_gamma(A, alpha)
            return kern.assemble_comparison(A, delta)

        def beta_vec(t):
            return np.array([2.0 * bounds.beta(i, j, t) for i, j in zip(iu, ju)])

        cs = cls(
            kern.n_pairs(n),
            E,
            beta_vec,
            piecewise_constant=(
                system.schedule.is_piecewise_constant and bounds.time_constant
            ),
        )
        cs._system = system
        cs._bounds = bounds
        return cs

    def E(self, t: float) -> np.ndarray:
        return np.asarray(self._E(t), dtype=float).reshape(self.dim, self.dim)

    def beta_vec(self, t: float) -> np.ndarray:
        return np.asarray(self._beta(t), dtype=float).reshape(self.dim)

    def _segments(self, t0, t1):
        """(a, b, E_fn, beta_fn, is_const) covering [t0, t1], split at breaks."""
        out = []
        if self._system is not None:
            c = self._system.global_coupling
            n = self._system.n_nodes
            iu, ju, _ = kern.pair_arrays(n)
            bounds = self._bounds
            for a, b, piece in self._system.schedule.segments_between(t0, t1):
                def E_fn(t, piece=piece):
                    A = c * np.asarray(piece(t), dtype=float)
                    alpha = np.array(
                        [bounds.alpha(i, j, t) for i, j in zip(iu, ju)]
                    )
                    delta, _ = kern.delta_gamma(A, alpha)
                    return kern.assemble_comparison(A, delta)

                is_const = isinstance(piece, _ConstPiece) and bounds.time_constant
                out.append((a, b, E_fn, self.beta_vec, is_const))
            return out
        cuts = [t0, t1]
        if self._breakpoints is not None:
            cuts += [float(b) for b in self._breakpoints if t0 < b < t1]
        cuts = sorted(set(cuts))
        for a, b in zip(cuts[:-1], cuts[1:]):
            out.append((a, b, self.E, self.beta_vec, self.piecewise_constant))
        return out


@dataclass
class ComparisonTrajectory:
    times: np.ndarray
    u: np.ndarray


def comparison_solve(cs: ComparisonSystem, t0: float, xi0, t_end: float,
                     cfg: SolverConfig | None = None) -> ComparisonTrajectory:
    """Integrate the comparison system from a nonnegative initial vector.

    Fixed-step RK4 split at breakpoints; the output is clipped at zero,
    which only tightens nothing (the exact solution stays in the cone, and
    clipping can only raise the dominating process).
    """
    cfg = cfg or SolverConfig()
    u0 = np.asarray(xi0, dtype=float).reshape(cs.dim)
    if (u0 < 0).any():
        raise ValueError("initial comparison state must be nonnegative")
    # recording mirrors the trajectory integrator: every record_stride-th
    # step plus every segment end, so dominance can be checked samplewise
    times = [t0]
    rows = [u0]
    u = u0
    count = 0
    for a, b, E_fn, b_fn, is_const in cs._segments(t0, t_end):
        n_steps = max(1, int(np.ceil((b - a) / cfg.dt - 1e-12)))
        h = (b - a) / n_steps
        if is_const:
            out = kern.rk4_const_linear(E_fn(a), b_fn(a), u, h, n_steps)
        else:
            d = cs.dim
            Es = np.empty((n_steps, 3, d, d))
            bs = np.empty((n_steps, 3, d))
            for s in range(n_steps):
                t = a + s * h
                te = b if s + 1 == n_steps else t + h
                Es[s, 0] = E_fn(t)
                Es[s, 1] = E_fn(t + 0.5 * h)
                Es[s, 2] = E_fn(te)
                bs[s, 0] = b_fn(t)
                bs[s, 1] = b_fn(t + 0.5 * h)
                bs[s, 2] = b_fn(te)
            out = kern.rk4_sampled_linear(Es, bs, np.full(n_steps, h), u)
        u = out[-1]
        for s in range(1, n_steps + 1):
            count += 1
            if count % cfg.record_stride == 0 or s == n_steps:
                t = b if s == n_steps else a + s * h
                if t > times[-1]:
                    times.append(t)
                    rows.append(out[s])
    return ComparisonTrajectory(np.asarray(times), np.maximum(np.asarray(rows), 0.0))


@dataclass
class DecayCheck:
    gamma_bar: float
    verified: bool
    max_ratio: float
    anchors: list


def dominance_decay_check(cs: ComparisonSystem, grid, max_anchors: int = 8,
                          tol: float = 1e-6, substeps: int = 4) -> DecayCheck:
    """Row-dominance margin and numerical verification of the decay bound.

    gamma_bar is the grid infimum of the per-row margins -(row sum of E(t)),
    which equals min-pair gamma_ij whenever the diagonal is negative.
    verified is True only when gamma_bar > 0 and the propagated principal
    matrix solution satisfies ||U(t, s)||_inf <= exp(-gamma_bar (t-s))(1+tol)
    on sampled anchor pairs.  The bound is tight to first order for the
    dominant row, so propagation subdivides each grid interval (``substeps``)
    to keep the integration error well below tol.  Row dominance is
    sufficient, not necessary: a stable system can still return
    verified=False.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("grid must contain at least two times")
    segs = cs._segments(grid[0], grid[-1] + 1e-12)
    starts = np.array([a for a, *_ in segs])
    seg_of = np.clip(np.searchsorted(starts, grid, side="right") - 1, 0, len(segs) - 1)

    gamma_bar = np.inf
    for s, (a, b, E_fn, _, is_const) in enumerate(segs):
        idx = np.nonzero(seg_of == s)[0]
        if idx.size == 0:
            continue
        sample_at = [grid[idx[0]]] if is_const else grid[idx]
        for t in sample_at:
            margins = -cs_row_sums(E_fn(t))
            gamma_bar = min(gamma_bar, float(margins.min()))
    if gamma_bar <= 0:
        return DecayCheck(gamma_bar, False, np.inf, [])

    anchor_idx = np.unique(
        np.linspace(0, len(grid) - 2, min(max_anchors, len(grid) - 1)).astype(int)
    )
    max_ratio = 0.0
    verified = True
    for ai in anchor_idx:
        ts = grid[ai:]
        norms = _propagate_principal_norms(segs, starts, ts, substeps)
        bound = np.exp(-gamma_bar * (ts - ts[0]))
        ratio = float(np.max(norms / bound))
        max_ratio = max(max_ratio, ratio)
        if ratio > 1.0 + tol:
            verified = False
    return DecayCheck(gamma_bar, verified, max_ratio, [float(grid[i]) for i in anchor_idx])


def cs_row_sums(E: np.ndarray) -> np.ndarray:
    return E.sum(axis=1)


def _propagate_principal_norms(segs, starts, record_times, substeps=1):
    """Inf-norms of U(t, record_times[0]) at every recorded time.

    The integration timeline is the record grid merged with segment
    boundaries (so no RK4 step straddles a coefficient discontinuity), each
    interval subdivided ``substeps`` times for accuracy.
    """
    t0, t1 = record_times[0], record_times[-1]
    timeline = set(float(t) for t in record_times)
    for a, *_ in segs:
        if t0 < a < t1:
            timeline.add(float(a))
    timeline = np.array(sorted(timeline))
    seg_idx = np.clip(
        np.searchsorted(starts, timeline[:-1], side="right") - 1, 0, len(segs) - 1
    )
    sub = max(1, int(substeps))
    norms_tl = np.empty(len(timeline))
    norms_tl[0] = np.nan
    U = None
    d = 0
    pos = 0
    chunk = max(1, 512 // sub)  # bounds the (steps, 3, d, d) stage buffer
    while pos < len(timeline) - 1:
        s = seg_idx[pos]
        end = pos
        while end < len(timeline) - 1 and seg_idx[end] == s:
            end += 1
        a, b, E_fn, _, is_const = segs[s]
        tseg = timeline[pos:end + 1]
        if U is None:
            d = E_fn(tseg[0]).shape[0]
            U = np.eye(d)
            norms_tl[0] = 1.0
        hs = np.diff(tseg)
        if is_const and hs.size and np.allclose(hs, hs[0]):
            seg_norms, U = kern.rk4_const_principal(
                E_fn(tseg[0]), hs[0] / sub, hs.size * sub, U0=U
            )
            norms_tl[pos + 1:end + 1] = seg_norms[sub::sub]
        else:
            E_const = E_fn(tseg[0]) if is_const else None
            for lo in range(0, hs.size, chunk):
                hi = min(lo + chunk, hs.size)
                n_sub = (hi - lo) * sub
                Es = np.empty((n_sub, 3, d, d))
                hsub = np.repeat(hs[lo:hi] / sub, sub)
                if E_const is not None:
                    Es[:] = E_const
                else:
                    for q in range(lo, hi):
                        base = tseg[q]
                        hq = hs[q] / sub
                        for r in range(sub):
                            t = base + r * hq
                            row = (q - lo) * sub + r
                            Es[row, 0] = E_fn(t)
                            Es[row, 1] = E_fn(t + 0.5 * hq)
                            Es[row, 2] = E_fn(t + hq)
                seg_norms, U = kern.rk4_sampled_principal(Es, hsub, U)
                norms_tl[pos + 1 + lo:pos + 1 + hi] = seg_norms[sub::sub]
        pos = end
    mask = np.isin(timeline, record_times)
    return norms_tl[mask]


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    status: str                      # "holds" | "fails"
    condition: str | None = None     # "delta" | "gamma"
    pair: tuple[int, int] | None = None  # 0-based node indices
    t: float | None = None

    @property
    def holds(self) -> bool:
        return self.status == "holds"

    def render(self) -> str:
        if self.holds:
            return "holds"
        i, j = self.pair
        return f"fails({self.condition},({i + 1},{j + 1}),t={self.t:.6g})"


@dataclass
class GridSpec:
    t0: float
    t1: float
    step: float

    def to_dict(self) -> dict:
        return {"t0": self.t0, "t1": self.t1, "step": self.step}


@dataclass
class SyncCertificate:
    n_nodes: int
    grid: GridSpec
    delta_min: np.ndarray
    delta_max: np.ndarray
    gamma_bar: float
    mu1: float
    rho: float
    bound_M: float
    epsilon: float
    verdict: Verdict
    asymptotic_bound: float | None
    settle_time: float | None
    assumptions: list[str] = field(default_factory=list)
    mu2: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "verdict": self.verdict.render(),
            "verdict_detail": {
                "status": self.verdict.status,
                "condition": self.verdict.condition,
                "pair": [p + 1 for p in self.verdict.pair] if self.verdict.pair else None,
                "t": self.verdict.t,
            },
            "gamma_bar": self.gamma_bar,
            "mu1": self.mu1,
            "mu2": self.mu2,
            "bound_M": self.bound_M,
            "epsilon": self.epsilon,
            "asymptotic_bound": self.asymptotic_bound,
            "settle_time": self.settle_time,
            "grid": self.grid.to_dict(),
            "assumptions": list(self.assumptions),
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")


@dataclass
class ClusterCertificate(SyncCertificate):
    cluster: ClusterSpec | None = None
    gamma_bar_J: float = math.nan
    combined_mu: float = math.nan

    def to_json_dict(self) -> dict:
        doc = super().to_json_dict()
        doc["cluster"] = [i + 1 for i in self.cluster.indices]
        doc["gamma_bar_J"] = self.gamma_bar_J
        doc["combined_mu"] = self.combined_mu
        return doc


def suggest_bound_M(mu1: float) -> float:
    """Heuristic headroom over mu1; tighter M trades against the margin threshold."""
    return 2.0 * mu1 if mu1 > 0 else 1.0


def estimate_rho(system: NetworkSystem, x0, t0: float, t_burn: float,
                 cfg: SolverConfig | None = None) -> float:
    """1.5 x the largest node norm seen over a burn-in run from x0."""
    cfg = cfg or SolverConfig(record_stride=10)
    traj = integrate(system, t0, x0, t0 + t_burn, cfg)
    norms = np.sqrt((traj.states ** 2).sum(axis=2))
    return 1.5 * float(norms.max())


def _certify(system, bounds, nodes, horizon, bound_M, epsilon, t0, grid_step,
             margin, cluster=None):
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if horizon <= 0 or grid_step <= 0 or horizon < grid_step:
        raise ValueError("horizon and grid step must define a nonempty grid")
    n_grid = int(round(horizon / grid_step))
    times = t0 + grid_step * np.arange(n_grid + 1)
    times[-1] = t0 + horizon

    delta, gamma, (iu, ju) = _grid_delta_gamma(system, bounds, times, nodes)

    mu_step = min(grid_step, 1e-2)
    n_mu = int(round(horizon / mu_step))
    mu_times = t0 + mu_step * np.arange(n_mu + 1)
    pairs = list(zip(iu.tolist(), ju.tolist()))
    mu1 = compute_mu1(bounds, mu_times, pairs=pairs)

    n_sub = len(nodes)
    N = system.n_nodes
    if cluster is not None and n_sub < N:
        mu2 = compute_mu2(system, cluster, bounds.rho, mu_times)
    else:
        mu2 = 0.0 if cluster is not None else None
    combined = mu1 if mu2 is None else mu1 + mu2 * (N - n_sub) * math.sqrt(
        2.0 * n_sub * (n_sub - 1)
    )
    if bound_M <= combined:
        raise ValueError(
            f"bound_M={bound_M} must exceed the heterogeneity level {combined}"
        )
    threshold = -math.log1p(-combined / bound_M)
    gamma_bar = float(gamma.min())

    verdict = Verdict("holds")
    bad = np.argwhere(delta > -margin)
    if bad.size:
        k, p = bad[np.lexsort((bad[:, 1], bad[:, 0]))][0]
        verdict = Verdict("fails", "delta", (int(iu[p]), int(ju[p])), float(times[k]))
    elif gamma_bar < threshold + margin:
        flat = np.argmin(gamma)  # first minimiser in (time, pair) lexicographic order
        k, p = np.unravel_index(flat, gamma.shape)
        verdict = Verdict("fails", "gamma", (int(iu[p]), int(ju[p])), float(times[k]))

    if verdict.holds:
        asymptotic = epsilon + bound_M
        settle = math.log(4.0 * bounds.rho ** 2 / epsilon) / gamma_bar
    else:
        asymptotic = None
        settle = None

    assumptions = [
        f"rho={bounds.rho!r}",
        f"grid-verified on [{times[0]!r}, {times[-1]!r}] with step {grid_step!r}",
        "margins taken as infima over the finite horizon, not over all times",
    ]
    if bounds.global_bounds:
        assumptions.append("pair bounds are radius-independent")

    common = dict(
        n_nodes=N,
        grid=GridSpec(float(times[0]), float(times[-1]), float(grid_step)),
        delta_min=delta.min(axis=0),
        delta_max=delta.max(axis=0),
        mu1=mu1,
        rho=bounds.rho,
        bound_M=float(bound_M),
        epsilon=float(epsilon),
        verdict=verdict,
        asymptotic_bound=asymptotic,
        settle_time=settle,
        assumptions=assumptions,
    )
    if cluster is None:
        return SyncCertificate(gamma_bar=gamma_bar, mu2=None, **common)
    return ClusterCertificate(
        gamma_bar=gamma_bar,
        mu2=mu2,
        cluster=cluster,
        gamma_bar_J=gamma_bar,
        combined_mu=combined,
        **common,
    )


def check_full_sync(system: NetworkSystem, bounds: PairBoundSet, horizon: float,
                    bound_M: float, epsilon: float, *, t0: float = 0.0,
                    grid_step: float = 1e-2, margin: float = 1e-9,
                    boundedness_witness=None) -> SyncCertificate:
    """Full-network synchronization certificate.

    Holds when every pair keeps delta_ij(t) <= -margin on the grid and the
    grid margin infimum gamma_bar clears -log(1 - mu1/bound_M) + margin; the
    reported tail bound on squared pairwise errors is epsilon + bound_M once
    t - t0 exceeds settle_time = log(4 rho^2 / epsilon) / gamma_bar.

    boundedness_witness, when given (a coupled row-dominance check result or its JSON
    dict), is recorded in the certificate assumptions as the boundedness
    justification behind rho.
    """
    if bounds.n_nodes != system.n_nodes:
        raise ValueError("bounds and system disagree on the number of nodes")
    cert = _certify(
        system, bounds, list(range(system.n_nodes)), horizon, bound_M,
        epsilon, t0, grid_step, margin,
    )
    if boundedness_witness is not None:
        doc = (boundedness_witness.to_json_dict()
               if hasattr(boundedness_witness, "to_json_dict")
               else dict(boundedness_witness))
        cert.assumptions.append(
            f"boundedness witness: gamma={doc.get('gamma')!r}, verdict={doc.get('verdict')!r}, "
            f"nodes={doc.get('nodes')!r}"
        )
    return cert


def check_cluster_sync(system: NetworkSystem, bounds: PairBoundSet,
                       cluster: ClusterSpec, horizon: float, bound_M: float,
                       epsilon: float, *, t0: float = 0.0,
                       grid_step: float = 1e-2, margin: float = 1e-9) -> ClusterCertificate:
    """Cluster synchronization certificate for the node subset J.

    delta keeps the full coupling sums; the margin restricts the
    cross-difference sums to J.  The heterogeneity level combines mu1 over
    J-pairs with the external mismatch term mu2 (N - n) sqrt(2 n (n - 1)).
    With J equal to the full node set the certificate coincides exactly with
    the full-network one.
    """
    cluster.validate_for(system.n_nodes)
    return _certify(
        system, bounds, list(cluster.indices), horizon, bound_M, epsilon,
        t0, grid_step, margin, cluster=cluster,
    )


@dataclass
class RefinedBounds:
    asymptotic_bound: float            # epsilon + bound_M / c
    linf_bound: float | None           # epsilon + |beta|_inf / (c gamma_bar)
    sharp_sync: bool


def refined_bounds(cert: SyncCertificate, c: float, beta_inf: float | None = None) -> RefinedBounds:
    """Tail bounds under a global coupling factor c >= 1.

    Always reports epsilon + bound_M / c; when the essential sup of the
    stacked heterogeneity vector is supplied, also epsilon +
    beta_inf / (c gamma_bar).  Which of the two is tighter depends on the
    shape of beta; both are reported and neither is preferred.  beta_inf = 0
    flags sharp synchronization.
    """
    if not cert.verdict.holds:
        raise ValueError("refined bounds require a certificate that holds")
    if c < 1:
        raise ValueError("the global-coupling refinement requires c >= 1")
    out = RefinedBounds(cert.epsilon + cert.bound_M / c, None, False)
    if beta_inf is not None:
        if beta_inf < 0:
            raise ValueError("beta_inf must be nonnegative")
        out.linf_bound = cert.epsilon + beta_inf / (c * cert.gamma_bar)
        out.sharp_sync = beta_inf == 0.0
    return out


@dataclass
class PersistenceMargins:
    heterogeneity_bound: Callable[[float], float]
    adjacency_margin: float


def persistence_margins(cert: SyncCertificate, rho: float, n_nodes: int) -> PersistenceMargins:
    """Perturbation tolerances inherited from a sharp baseline certificate.

    A node-field perturbation of sup size delta keeps the squared pairwise
    errors within 4 rho delta sqrt(N(N-1)/2) / gamma_bar; adjacency
    perturbations of sup norm below gamma_bar / 4 preserve sharp
    synchronization.
    """
    if not cert.verdict.holds:
        raise ValueError("persistence margins require a certificate that holds")
    if cert.mu1 != 0.0:
        raise ValueError("persistence margins require a sharp baseline (mu1 = 0)")
    gb = cert.gamma_bar
    factor = 4.0 * rho * math.sqrt(n_nodes * (n_nodes - 1) / 2.0) / gb
    return PersistenceMargins(lambda d: factor * d, gb / 4.0)


def static_threshold(A_static, l_rho: float, tol: float = 1e-9) -> float:
    """Smallest global coupling making a static network certifiable.

    Requires the pair hypothesis 2(a_ij + a_ji) + sum_k (a_jk + a_ik -
    |a_jk - a_ik|) > 0 for every pair (raises naming the first violating
    pair otherwise), then bisects to width tol for the least c with
    delta_ij(c) < 0 and gamma_ij(c) > 0 for all pairs.  Both inequality
    families are monotone in c beyond the threshold.
    """
    A = np.array(A_static, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A_static must be a square matrix")
    np.fill_diagonal(A, 0.0)
    n = A.shape[0]
    iu, ju, _ = kern.pair_arrays(n)
    S, D = _sd_arrays(A, iu, ju, np.arange(n))
    hyp = 2.0 * S - D
    bad = np.nonzero(hyp <= 0)[0]
    if bad.size:
        p = int(bad[0])
        raise InfeasibleTopologyError((int(iu[p]), int(ju[p])), float(hyp[p]))

    def satisfied(c: float) -> bool:
        d = l_rho - c * S
        g = 2.0 * np.abs(d) - c * D
        return bool((d < 0).all() and (g > 0).all())

    if satisfied(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    for _ in range(200):
        if satisfied(hi):
            break
        lo, hi = hi, hi * 2.0
    else:  # pragma: no cover - hypothesis > 0 guarantees termination
        raise RuntimeError("no finite coupling threshold found")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if satisfied(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
