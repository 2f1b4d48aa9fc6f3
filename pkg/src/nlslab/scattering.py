"""Numerical asymptotic-completeness probe.

Works in the interaction picture v(t) = U(-t) u(t): scattering shows up as
v(t) forming a Cauchy sequence in H^1, and the scattering state u_+ is read
off as v(T_max).  The inverse problem (prescribed asymptote) is solved by
Picard iteration of the truncated final-value Duhamel equation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import Field
from .models import Model, FreeModel, g_of_rho
from .propagation import TrajectoryRecord, free_propagate
from .spectral import h1_norm


def h1_distance(a: Field, b: Field) -> float:
    return h1_norm(a.with_values(a.values - b.values))


def interaction_picture(traj: TrajectoryRecord) -> list[Field]:
    """v(t_i) = U(-t_i) u(t_i) for every recorded snapshot."""
    return [free_propagate(u, -t) for t, u in zip(traj.times, traj.snapshots)]


@dataclass
class ScatterReport:
    times: list[float]
    selected: list[int]          # frame indices entering the Cauchy matrix
    cauchy_matrix: np.ndarray    # d[i, j] = ||v(t_i) - v(t_j); H1||, symmetric
    u_plus: Field
    tail_sup: float
    distances_to_final: np.ndarray
    verdict: str                 # "converged" | "not_converged"
    decay_fit: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "times": list(self.times),
            "selected": list(self.selected),
            "tail_sup": self.tail_sup,
            "verdict": self.verdict,
            "decay_fit": self.decay_fit,
            "cauchy_matrix": self.cauchy_matrix.tolist(),
        }


def scatter_verdict(traj: TrajectoryRecord, threshold: float,
                    min_final_time: float = 10.0) -> ScatterReport:
    """Convergence verdict for the interaction-picture sequence.

    u_plus is v(T_max); the run is 'converged' when
    sup_{t >= T_max/2} ||v(t) - v(T_max); H1|| <= threshold.  Also fits an
    empirical power-law decay of the distance to the final state (reported
    only; no rate is asserted).
    """
    if not traj.times or traj.times[-1] < min_final_time:
        raise ValueError(
            f"trajectory must reach t >= {min_final_time}, got "
            f"{traj.times[-1] if traj.times else None}")
    v = interaction_picture(traj)
    times = list(traj.times)
    t_max = times[-1]
    u_plus = v[-1]

    dist = np.array([h1_distance(vi, u_plus) for vi in v])
    tail = [d for t, d in zip(times, dist) if t >= t_max / 2.0]
    tail_sup = float(max(tail))

    # Cauchy matrix over the tail frames (t >= T_max/2) plus the first frame
    idx = [i for i, t in enumerate(times) if t >= t_max / 2.0]
    if idx[0] != 0:
        idx = [0] + idx
    m = len(idx)
    cauchy = np.zeros((m, m))
    for a in range(m):
        for b in range(a + 1, m):
            d = h1_distance(v[idx[a]], v[idx[b]])
            cauchy[a, b] = cauchy[b, a] = d

    fit = {}
    mask = [(t, d) for t, d in zip(times, dist)
            if 0 < t < t_max and d > 0]
    if len(mask) >= 3:
        lt = np.log([t for t, _ in mask])
        ld = np.log([d for _, d in mask])
        slope, intercept = np.polyfit(lt, ld, 1)
        fit = {"power": float(slope), "amplitude": float(np.exp(intercept))}

    return ScatterReport(
        times=times, selected=idx, cauchy_matrix=cauchy, u_plus=u_plus,
        tail_sup=tail_sup, distances_to_final=dist,
        verdict="converged" if tail_sup <= threshold else "not_converged",
        decay_fit=fit)


@dataclass
class WaveOperatorResult:
    u_at_T: Field
    iterations: int
    defect: float               # last successive-iterate H1 difference
    converged: bool
    horizon: float
    tail_estimate: float        # measured size of the Duhamel integrand at the horizon


def wave_operator_solve(u_plus: Field, T: float, model: Model, tol: float,
                        dt: float = 0.05, horizon: float | None = None,
                        max_iter: int = 60, max_retries: int = 3) -> WaveOperatorResult:
    """Construct u(T) with prescribed free asymptote u_plus.

    Iterates the truncated final-value Duhamel map
    u(t) = U(t) u_plus + i int_t^{T_h} U(t - t') g(rho(t')) u(t') dt'
    on a uniform time grid of [T, T_h] with trapezoid quadrature, in the
    interaction picture (so each sweep costs O(steps) free propagations).
    On non-contraction the start time is pushed later and the solve retried.
    """
    if isinstance(model, FreeModel):
        return WaveOperatorResult(free_propagate(u_plus, T), 0, 0.0, True, T, 0.0)

    T_h = horizon if horizon is not None else T + 20.0
    t_start = T
    last_defect = np.inf
    for attempt in range(max_retries + 1):
        result = _picard_sweeps(u_plus, t_start, T_h, model, dt, tol, max_iter)
        if result is not None:
            u_start, iters, defect, tail = result
            if t_start > T:
                # march backwards from the contraction window to T
                from .propagation import strang_step
                u = u_start
                nback = int(round((t_start - T) / dt))
                for _ in range(nback):
                    u = strang_step(u, -dt, model)
                u_start = u
            return WaveOperatorResult(u_start, iters, defect, True, T_h, tail)
        t_start = t_start + 0.5 * (T_h - t_start)
    return WaveOperatorResult(free_propagate(u_plus, T), max_iter,
                              float(last_defect), False, T_h, np.nan)


def _picard_sweeps(u_plus, T, T_h, model, dt, tol, max_iter):
    steps = max(int(round((T_h - T) / dt)), 2)
    times = T + (T_h - T) * np.arange(steps + 1) / steps
    h = times[1] - times[0]
    # iterate on v_j = U(-t_j) u(t_j); the Duhamel map becomes a suffix sum
    v = [u_plus for _ in times]
    prev_defect = np.inf
    for it in range(1, max_iter + 1):
        u = [free_propagate(vj, t) for vj, t in zip(v, times)]
        w = []
        for uj in u:
            g = g_of_rho(model, uj.with_values(uj.rho))
            w.append(free_propagate(
                uj.with_values(np.real(g.values) * uj.values), 0.0))
        # interaction-picture integrand U(-t') g u at each node
        w = [free_propagate(wj, -t) for wj, t in zip(w, times)]
        new_v = [None] * len(times)
        acc = 0.5 * h * w[-1].values  # trapezoid suffix from the horizon
        new_v[-1] = u_plus
        for j in range(len(times) - 2, -1, -1):
            acc = acc + 0.5 * h * w[j].values
            new_v[j] = u_plus.with_values(u_plus.values + 1j * acc)
            acc = acc + 0.5 * h * w[j].values
        defect = h1_distance(new_v[0], v[0])
        v = new_v
        if defect <= tol:
            tail = float(np.max(np.abs(w[-1].values)))
            return free_propagate(v[0], times[0]), it, defect, tail
        if it > 3 and defect > prev_defect:
            return None  # not contracting
        prev_defect = defect
    return None
