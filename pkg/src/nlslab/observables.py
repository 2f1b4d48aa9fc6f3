"""Densities, currents, conserved functionals and space-time norms.

Conventions: rho = |u|^2, current j = Im(conj(u) grad u) (which is also the
momentum density), stress tensor
T_kl = Re(d_k conj(u) d_l u) - delta_kl ((1/4) Lap rho - rho g + G),
energy E = int (1/2)|grad u|^2 + G(rho).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import Field
from .models import Model, G_of_rho, g_of_rho
from .propagation import TrajectoryRecord, free_propagate
from .spectral import gradient, laplacian, lp_norm, l2_norm, sobolev_norm


@dataclass
class ObservableFrame:
    t: float
    rho: Field
    j: list[Field]
    mass: float
    momentum: np.ndarray
    energy: float
    stress: np.ndarray | None = None  # (n, n) array of grids when requested


def current(u: Field) -> list[Field]:
    grads = gradient(u)
    return [u.with_values(np.imag(np.conj(u.values) * g.values)) for g in grads]


def energy(u: Field, model: Model) -> float:
    grads = gradient(u)
    kinetic = 0.5 * sum(l2_norm(g) ** 2 for g in grads)
    G = G_of_rho(model, u.with_values(u.rho))
    return float(kinetic + u.grid.cell_volume * np.sum(np.real(G.values)))


def stress_tensor(u: Field, model: Model) -> np.ndarray:
    """T_kl as an (n, n) array of real grid arrays."""
    grid = u.grid
    rho = u.with_values(u.rho)
    grads = gradient(u)
    lap_rho = np.real(laplacian(rho).values)
    g = np.real(g_of_rho(model, rho).values)
    G = np.real(G_of_rho(model, rho).values)
    iso = 0.25 * lap_rho - np.real(rho.values) * g + G
    n = grid.n
    T = np.zeros((n, n) + grid.shape)
    for k in range(n):
        for l in range(n):
            T[k, l] = np.real(np.conj(grads[k].values) * grads[l].values)
            if k == l:
                T[k, l] -= iso
    return T


def frame(t: float, u: Field, model: Model, with_stress: bool = False) -> ObservableFrame:
    grid = u.grid
    rho = u.with_values(u.rho)
    j = current(u)
    mass = grid.cell_volume * float(np.sum(np.real(rho.values)))
    momentum = np.array([grid.cell_volume * float(np.sum(np.real(c.values)))
                         for c in j])
    return ObservableFrame(
        t=t, rho=rho, j=j, mass=mass, momentum=momentum,
        energy=energy(u, model),
        stress=stress_tensor(u, model) if with_stress else None,
    )


def continuity_residual(traj: TrajectoryRecord, index: int, model: Model) -> dict:
    """L2 residuals of mass and momentum conservation at a recorded frame.

    Time derivatives use centered differences of the neighbouring recorded
    frames, spatial derivatives are spectral; both residuals are second
    order in the recording interval.
    """
    if index < 1 or index > len(traj.times) - 2:
        raise IndexError("centered residual needs interior frame index")
    tm, t0, tp = traj.times[index - 1], traj.times[index], traj.times[index + 1]
    um, u0, up = traj.snapshots[index - 1:index + 2]
    dt2 = tp - tm

    rho_dot = (up.rho - um.rho) / dt2
    j0 = current(u0)
    from .spectral import divergence
    div_j = np.real(divergence(j0).values)
    scalar_res = l2_norm(u0.with_values(rho_dot + div_j))

    jm, jp = current(um), current(up)
    grid = u0.grid
    rho0 = u0.with_values(u0.rho)
    grads = gradient(u0)
    g0 = np.real(g_of_rho(model, rho0).values)
    grad_lap_rho = gradient(u0.with_values(np.real(laplacian(rho0).values)))
    grad_g = gradient(u0.with_values(g0 + 0.0j))
    vec_sq = 0.0
    for l in range(grid.n):
        j_dot = (np.real(jp[l].values) - np.real(jm[l].values)) / dt2
        # momentum flux in force form: valid for local and Hartree couplings
        # (for local g it coincides pointwise with the stress divergence)
        div_flux = np.real(divergence(
            [u0.with_values(np.real(np.conj(grads[k].values) * grads[l].values))
             for k in range(grid.n)]).values)
        force = -0.25 * np.real(grad_lap_rho[l].values) \
            + np.real(rho0.values) * np.real(grad_g[l].values)
        vec_sq += l2_norm(u0.with_values(j_dot + div_flux + force)) ** 2
    return {"scalar_res": float(scalar_res), "vector_res": float(np.sqrt(vec_sq))}


def spacetime_norm(traj: TrajectoryRecord, q: float, r: float,
                   sigma: float = 0.0) -> float:
    """L^q-in-time composition of the per-frame Hdot^sigma_r norm.

    Trapezoid rule in time; q = inf takes the max over recorded frames.
    """
    if not traj.times:
        raise ValueError("empty trajectory")
    vals = np.array([sobolev_norm(u, sigma, r) for u in traj.snapshots])
    if np.isinf(q):
        return float(vals.max())
    times = np.array(traj.times)
    return float(np.trapezoid(vals ** q, times) ** (1.0 / q))


def strichartz_ratio(v: Field, q: float, r: float,
                     window: tuple[float, float], samples: int = 201) -> float:
    """Measured constant of the free-evolution space-time bound.

    Ratio ||U(t) v||_{L^q((t0,t1), L^r)} / ||v||_2; the pair (q, r) must be
    admissible for the grid dimension.  Zero input gives 0 by convention.
    """
    from fractions import Fraction
    from .exponents import is_admissible, INF

    def to_rat(x):
        return INF if np.isinf(x) else Fraction(x).limit_denominator(10 ** 6)

    ok, detail = is_admissible(v.grid.n, to_rat(q), to_rat(r))
    if not ok:
        raise ValueError(f"(q, r) = ({q}, {r}) not admissible: {detail}")
    norm0 = l2_norm(v)
    if norm0 == 0.0:
        return 0.0
    times = np.linspace(window[0], window[1], samples)
    vals = np.array([lp_norm(free_propagate(v, t), r) for t in times])
    if np.isinf(q):
        st = float(vals.max())
    else:
        st = float(np.trapezoid(vals ** q, times) ** (1.0 / q))
    return st / norm0
