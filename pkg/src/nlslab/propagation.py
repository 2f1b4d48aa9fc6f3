"""Time evolution: exact free propagator and Strang split-step integrator.

The free flow U(t) multiplies the spectrum by exp(-i t |k|^2 / 2).  One
Strang step is U(dt/2) . phase . U(dt/2) where the phase substep multiplies
by exp(-i g(|u|^2) dt); |u| is invariant under the pure-phase flow, so the
nonlinear substep is exact (for Hartree the potential V*rho is frozen over
the substep, which preserves second order).  Every substep is unitary, so
the L2 mass is conserved to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import Field, boundary_mass_fraction
from .models import Model, FreeModel, g_of_rho
from .spectral import apply_multiplier

BOUNDARY_MASS_LIMIT = 1e-6


class BlowUpError(RuntimeError):
    """Raised when the sup norm exceeds the configured threshold."""

    def __init__(self, t: float, sup_norm: float):
        super().__init__(f"blow-up at t = {t}: sup|u| = {sup_norm}")
        self.t = t
        self.sup_norm = sup_norm


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    t0: float
    t1: float
    record_stride: int = 1
    blowup_threshold: float = 1e6

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t0 < self.t1:
            raise ValueError("need t0 < t1")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")

    @property
    def steps(self) -> int:
        return int(round((self.t1 - self.t0) / self.dt))


@dataclass
class TrajectoryRecord:
    """Strided snapshots of a propagation run plus per-snapshot observer data."""

    times: list[float] = field(default_factory=list)
    snapshots: list[Field] = field(default_factory=list)
    observations: list[dict] = field(default_factory=list)
    boundary_mass_warning: bool = False
    max_boundary_mass: float = 0.0

    def append(self, t: float, u: Field, obs: dict):
        self.times.append(t)
        self.snapshots.append(u)
        self.observations.append(obs)

    @property
    def record_interval(self) -> float:
        return self.times[1] - self.times[0] if len(self.times) > 1 else 0.0


def free_propagate(u: Field, t: float) -> Field:
    """Exact free flow U(t) = exp(i (t/2) Lap)."""
    if t == 0:
        return u
    return apply_multiplier(u, np.exp(-0.5j * t * u.grid.k_sq))


def _phase_step(u: Field, dt: float, model: Model) -> Field:
    if isinstance(model, FreeModel):
        return u
    g = g_of_rho(model, u.with_values(u.rho))
    return u.with_values(u.values * np.exp(-1j * dt * np.real(g.values)))


def strang_step(u: Field, dt: float, model: Model,
                blowup_threshold: float | None = None, t: float = 0.0) -> Field:
    """One second-order Strang step of length dt (dt < 0 runs backwards)."""
    half = free_propagate(u, dt / 2.0)
    kicked = _phase_step(half, dt, model)
    out = free_propagate(kicked, dt / 2.0)
    if blowup_threshold is not None:
        sup = float(np.max(np.abs(out.values)))
        if sup > blowup_threshold:
            raise BlowUpError(t + dt, sup)
    return out


def propagate(u0: Field, config: StepperConfig, model: Model,
              observers: list | None = None) -> TrajectoryRecord:
    """Advance u0 over [t0, t1], recording every record_stride steps.

    Observers are callables (t, u) -> dict; their outputs are collected per
    recorded snapshot.  Blow-up aborts by raising BlowUpError (the partial
    trajectory is attached to the exception as `.trajectory`).  The run
    monitors the outer-shell mass fraction and flags the trajectory when it
    exceeds 1e-6 (periodic wrap-around would invalidate the R^n emulation).
    """
    observers = observers or []
    record = TrajectoryRecord()

    def observe(t, u):
        frac = boundary_mass_fraction(u)
        record.max_boundary_mass = max(record.max_boundary_mass, frac)
        if frac > BOUNDARY_MASS_LIMIT:
            record.boundary_mass_warning = True
        obs = {}
        for fn in observers:
            obs.update(fn(t, u))
        record.append(t, u, obs)

    u = u0
    t = config.t0
    observe(t, u)
    try:
        for step in range(1, config.steps + 1):
            u = strang_step(u, config.dt, model,
                            blowup_threshold=config.blowup_threshold, t=t)
            t = config.t0 + step * config.dt
            if step % config.record_stride == 0 or step == config.steps:
                observe(t, u)
    except BlowUpError as err:
        err.trajectory = record
        raise
    return record
