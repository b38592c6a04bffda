"""Numerical integration of the coupled network and pairwise error extraction.

The integration grid is split exactly at every schedule breakpoint so no
step straddles a discontinuity of A(t); solutions are absolutely continuous
across switches, so restarting the one-step method at each breakpoint
preserves its order.  Fixed-step RK4 is the default; an embedded
Runge-Kutta-Fehlberg 4(5) pair provides adaptive stepping for stiff runs.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kern
from .model import NetworkSystem


class IntegrationError(RuntimeError):
    """Integration failed; carries the last time with a valid state."""

    def __init__(self, message: str, t_last: float, node: int | None = None):
        super().__init__(message)
        self.t_last = t_last
        self.node = node


@dataclass(frozen=True)
class SolverConfig:
    """method "rk4" (fixed step dt) or "rk45" (adaptive, rtol/atol)."""

    method: str = "rk4"
    dt: float = 1e-3
    rtol: float = 1e-6
    atol: float = 1e-9
    record_stride: int = 1

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ValueError("method must be 'rk4' or 'rk45'")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("rtol and atol must be positive")
        if self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")

    def digest(self) -> str:
        return (
            f"{self.method},dt={self.dt!r},rtol={self.rtol!r},"
            f"atol={self.atol!r},stride={self.record_stride}"
        )


@dataclass
class Trajectory:
    """Sampled solution: times (T,), states (T, n, m)."""

    times: np.ndarray
    states: np.ndarray
    provenance: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return self.states.shape[1]

    @property
    def state_dim(self) -> int:
        return self.states.shape[2]

    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, path) -> None:
        n, m = self.states.shape[1:]
        header = ["t"] + [f"x_{i + 1}_{q + 1}" for i in range(n) for q in range(m)]
        flat = self.states.reshape(len(self.times), n * m)
        _write_csv(path, header, self.times, flat)


@dataclass
class ErrorSeries:
    """Squared pairwise errors (lexicographic pairs) and the max-spread error."""

    times: np.ndarray
    xi: np.ndarray
    e_hat: np.ndarray
    n_nodes: int

    def to_csv(self, path) -> None:
        n = self.n_nodes
        iu, ju, _ = kern.pair_arrays(n)
        header = ["t"] + [f"xi_{i + 1}_{j + 1}" for i, j in zip(iu, ju)] + ["e_hat"]
        body = np.column_stack([self.xi, self.e_hat])
        _write_csv(path, header, self.times, body)


def _write_csv(path, header, times, body) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for t, row in zip(times, body):
            cells = [format(t, ".17g")] + [format(v, ".17g") for v in row]
            fh.write(",".join(cells) + "\n")


def coupled_rhs(system: NetworkSystem, t: float, x: np.ndarray) -> np.ndarray:
    """Right-hand side of the coupled network on the flat state vector.

    Block i is f_i(t, x_i) + c * sum_k a_ik(t)(x_k - x_i); A is sampled with
    the right-continuous convention at breakpoints.  Raises on a non-finite
    output, naming the offending time and node.
    """
    n, m = system.n_nodes, system.state_dim
    X = np.asarray(x, dtype=float).reshape(n, m)
    A = system.schedule.sample(t)
    out = _full_rhs(system, A, t, X)
    return out.reshape(n * m)


def _full_rhs(system: NetworkSystem, A: np.ndarray, t: float, X: np.ndarray) -> np.ndarray:
    F = system.eval_nodes(t, X)
    if not np.isfinite(F).all():
        bad = int(np.nonzero(~np.isfinite(F).all(axis=1))[0][0])
        raise IntegrationError(
            f"node {bad} produced a non-finite field value at t={t}", t, node=bad
        )
    return F + kern.coupling_term(A, X, system.global_coupling)


class _Recorder:
    def __init__(self, stride: int, t0: float, x0: np.ndarray):
        self.stride = stride
        self.count = 0
        self.times = [t0]
        self.states = [x0.copy()]

    def step_done(self, t: float, X: np.ndarray, force: bool = False) -> None:
        self.count += 1
        if force or self.count % self.stride == 0:
            if t > self.times[-1]:
                self.times.append(t)
                self.states.append(X.copy())

    def build(self, provenance: dict) -> Trajectory:
        return Trajectory(
            np.asarray(self.times), np.asarray(self.states), provenance
        )


def _check_finite(t: float, X: np.ndarray) -> None:
    if not np.isfinite(X).all():
        raise IntegrationError(f"state became non-finite at t={t}", t)


def _rk4_segment(system, piece, a, b, dt, rec):
    """Fixed RK4 over [a, b] with a uniform step <= dt that lands on b."""
    n_steps = max(1, int(np.ceil((b - a) / dt - 1e-12)))
    h = (b - a) / n_steps
    X = rec.states[-1].copy()
    t = a
    for s in range(n_steps):
        A0 = piece(t)
        Am = piece(t + 0.5 * h)
        A1 = piece(t + h)
        k1 = _full_rhs(system, A0, t, X)
        k2 = _full_rhs(system, Am, t + 0.5 * h, X + 0.5 * h * k1)
        k3 = _full_rhs(system, Am, t + 0.5 * h, X + 0.5 * h * k2)
        k4 = _full_rhs(system, A1, t + h, X + h * k3)
        X = X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = a + (s + 1) * h if s + 1 < n_steps else b
        _check_finite(t, X)
        rec.step_done(t, X, force=(s + 1 == n_steps))
    return X


# Runge-Kutta-Fehlberg 4(5) tableau; the 5th-order solution is propagated.
_RKF_C = np.array([0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2])
_RKF_A = [
    np.array([]),
    np.array([1 / 4]),
    np.array([3 / 32, 9 / 32]),
    np.array([1932 / 2197, -7200 / 2197, 7296 / 2197]),
    np.array([439 / 216, -8.0, 3680 / 513, -845 / 4104]),
    np.array([-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40]),
]
_RKF_B5 = np.array([16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55])
_RKF_B4 = np.array([25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0])


def _rk45_segment(system, piece, a, b, cfg, rec, h_start):
    t = a
    X = rec.states[-1].copy()
    h = min(h_start, b - a)
    k = [None] * 6
    while t < b - 1e-14 * max(1.0, abs(b)):
        h = min(h, b - t)
        if h < 1e-13 * max(1.0, abs(t)):
            raise IntegrationError(f"step size underflow at t={t}", t)
        for s in range(6):
            ts = t + _RKF_C[s] * h
            Xs = X.copy()
            for q in range(s):
                if _RKF_A[s][q] != 0.0:
                    Xs += h * _RKF_A[s][q] * k[q]
            k[s] = _full_rhs(system, piece(ts), ts, Xs)
        X5 = X + h * sum(_RKF_B5[s] * k[s] for s in range(6))
        X4 = X + h * sum(_RKF_B4[s] * k[s] for s in range(6))
        scale = cfg.atol + cfg.rtol * np.maximum(np.abs(X), np.abs(X5))
        err = np.sqrt(np.mean(((X5 - X4) / scale) ** 2))
        if err <= 1.0 or h <= 1e-12:
            t_new = t + h
            _check_finite(t_new, X5)
            X = X5
            t = t_new
            rec.step_done(t, X, force=(t >= b - 1e-14 * max(1.0, abs(b))))
        factor = 0.9 * err ** -0.2 if err > 0 else 5.0
        h = h * min(5.0, max(0.2, factor))
    return X, h


def integrate(system: NetworkSystem, t0: float, x0, t_end: float, cfg: SolverConfig) -> Trajectory:
    """Integrate the coupled network from (t0, x0) to t_end.

    x0 is the (n, m) stack of initial node states (a flat vector of length
    n*m is also accepted).  The solver grid contains every schedule
    breakpoint in [t0, t_end].
    """
    if t_end <= t0:
        raise ValueError("t_end must exceed t0")
    n, m = system.n_nodes, system.state_dim
    X0 = np.asarray(x0, dtype=float).reshape(n, m).copy()
    if not np.isfinite(X0).all():
        raise ValueError("initial state must be finite")
    segments = system.schedule.segments_between(t0, t_end)
    rec = _Recorder(cfg.record_stride, t0, X0)
    h = cfg.dt
    for a, b, piece in segments:
        if cfg.method == "rk4":
            _rk4_segment(system, piece, a, b, cfg.dt, rec)
        else:
            _, h = _rk45_segment(system, piece, a, b, cfg, rec, h)
    x0_digest = hashlib.sha1(np.ascontiguousarray(X0).tobytes()).hexdigest()[:12]
    provenance = {"t0": t0, "x0_digest": x0_digest, "config": cfg.digest()}
    return rec.build(provenance)


def pairwise_errors(traj: Trajectory) -> ErrorSeries:
    """Squared pairwise distances xi and the componentwise max-spread error.

    xi is ordered lexicographically by (i, j), i < j, and is nonnegative by
    construction; e_hat(t) aggregates the per-component spread
    max_ij |x_iq - x_jq| in the Euclidean norm over components.
    """
    if len(traj.times) == 0:
        raise ValueError("trajectory is empty")
    xi = kern.xi_series(traj.states)
    eh = kern.e_hat_series(traj.states)
    return ErrorSeries(traj.times.copy(), xi, eh, traj.n_nodes)


def rk4_span(rhs, t0: float, x0, t1: float, dt: float) -> np.ndarray:
    """Plain fixed-step RK4 for a single ODE x' = rhs(t, x); returns x(t1)."""
    x = np.asarray(x0, dtype=float).copy()
    if t1 == t0:
        return x
    n_steps = max(1, int(np.ceil((t1 - t0) / dt - 1e-12)))
    h = (t1 - t0) / n_steps
    t = t0
    for _ in range(n_steps):
        k1 = np.asarray(rhs(t, x), dtype=float)
        k2 = np.asarray(rhs(t + 0.5 * h, x + 0.5 * h * k1), dtype=float)
        k3 = np.asarray(rhs(t + 0.5 * h, x + 0.5 * h * k2), dtype=float)
        k4 = np.asarray(rhs(t + h, x + h * k3), dtype=float)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
    return x
