"""Quadratic Morawetz diagnostics.

Central objects: the auxiliary quantity J = (1/2)<rho, h * rho>, its time
derivative M = -<rho, grad h * j>, and the rate decomposition
dM/dt = K + P + R with

* K = (1/2) <grad rho, lap h * grad rho>   (kinetic, always >= 0 for |x|),
* P = <rho, lap h * (rho g - G)>  for local models, or
  P = <rho, grad h * (rho grad(V * rho))>  for Hartree models,
* R the remainder (two-convolution form; identically 0 in one dimension).

Integrating the rate over a time window must reproduce M(t2) - M(t1); the
report carries that residual together with the quantitative bound ratios and
the fitted Riesz proportionality constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import Field, ensure_same_grid
from .models import (FreeModel, HartreeKernel, Model, PowerLaw, g_of_rho,
                     rho_g_minus_G)
from .propagation import TrajectoryRecord
from .spectral import (gradient, inner, kernel_apply, kernel_sample_offsets,
                       l2_norm, sobolev_norm)
from .weights import AbsX, WeightFields, radial_power_kernel, weight_fields

IMAG_RESIDUE_TOL = 1e-10


@dataclass
class MorawetzSample:
    t: float
    J: float
    M: float
    K: float
    Ppot: float
    R: float

    @property
    def rate(self) -> float:
        return self.K + self.Ppot + self.R

    def to_dict(self) -> dict:
        return {"t": self.t, "j_quad": self.J, "m_quad": self.M,
                "k_term": self.K, "p_term": self.Ppot, "r_term": self.R,
                "rate": self.rate}


@dataclass
class MorawetzReport:
    samples: list[MorawetzSample]
    identity_residual: float
    boundary_values: tuple[float, float]   # M(t1), M(t2)
    bound_ratio_228: float
    bound_ratio_a11: float
    fitted_c_223: float
    fitted_c_max_dev: float

    def to_dict(self) -> dict:
        return {
            "identity_residual": self.identity_residual,
            "m_first": self.boundary_values[0],
            "m_last": self.boundary_values[1],
            "bound_ratio_228": self.bound_ratio_228,
            "bound_ratio_a11": self.bound_ratio_a11,
            "fitted_c": self.fitted_c_223,
            "fitted_c_max_dev": self.fitted_c_max_dev,
            "samples": [s.to_dict() for s in self.samples],
        }


def _real(z: complex, scale: float = 1.0) -> float:
    if abs(z.imag) > IMAG_RESIDUE_TOL * max(abs(z.real), scale, 1.0):
        raise ArithmeticError(f"imaginary residue too large: {z}")
    return z.real


def quad_J(rho: Field, w: WeightFields) -> float:
    """J = (1/2) <rho, h * rho>."""
    if rho.grid != w.grid:
        raise ValueError("weight grid mismatch")
    return _real(0.5 * inner(rho, w.conv_h(rho)))


def quad_M(rho: Field, j: list[Field], w: WeightFields) -> float:
    """M = dJ/dt = -<rho, grad h * j>."""
    grid = ensure_same_grid(rho, *j)
    if grid != w.grid:
        raise ValueError("weight grid mismatch")
    total = 0.0 + 0.0j
    for a, ja in enumerate(j):
        total += inner(rho, w.conv_grad(ja)[a])
    return -_real(total)


def remainder_R(u: Field, w: WeightFields) -> float:
    """Remainder R, two-convolution form.

    R = <rho, hess h * (grad conj(u) grad u)> - <conj(u) grad u, hess h * conj(u) grad u>;
    each tensor component costs one kernel convolution.  Vanishes identically
    in one dimension (the delta-tagged hessian makes both terms equal).
    """
    grid = u.grid
    rho = u.with_values(u.rho)
    grads = gradient(u)
    ug = [u.with_values(np.conj(u.values) * g.values) for g in grads]
    total = 0.0 + 0.0j
    for i in range(grid.n):
        for j in range(grid.n):
            gg = u.with_values(np.conj(grads[i].values) * grads[j].values)
            total += inner(rho, w.conv_hess(i, j, gg))
            total -= inner(ug[i], w.conv_hess(i, j, ug[j]))
    scale = l2_norm(u) ** 2 + sum(l2_norm(g) ** 2 for g in grads)
    return _real(total, scale)


def nls_rate(u: Field, model: Model, w: WeightFields) -> tuple[float, float, float]:
    """(K, Ppot, R) with K = (1/2)<grad rho, lap h * grad rho>,
    Ppot = <rho, lap h * (rho g - G)>, R = remainder_R."""
    rho = u.with_values(u.rho)
    grho = gradient(rho)
    K = 0.5 * sum(_real(inner(ga, w.conv_lap(ga))) for ga in grho)
    if isinstance(model, FreeModel):
        P = 0.0
    else:
        P = _real(inner(rho, w.conv_lap(rho_g_minus_G(model, rho))))
    return K, P, remainder_R(u, w)


def _grad_v_kernels(kernel: HartreeKernel, grid) -> list[np.ndarray]:
    """Components of grad V sampled on the difference lattice (wrapped order)."""
    offs = kernel_sample_offsets(grid)
    r = np.sqrt(sum(np.asarray(c) ** 2 for c in offs) + 0.0)
    safe = np.maximum(r, 1e-300)
    ratio = np.where(r > 0, kernel.profile_derivative(safe) / safe, 0.0)
    full = np.zeros((2 * grid.N,) * grid.n)
    return [kernel.coupling * ratio * c + full for c in offs]


def hartree_rate(u: Field, kernel: HartreeKernel,
                 w: WeightFields) -> tuple[float, float, float]:
    """(K, Phar, R) with Phar = <rho, grad h * (rho grad(V * rho))>.

    grad(V * rho) is computed as (grad V) * rho with the analytic kernel
    gradient sampled on the difference lattice, so the discrete Phar matches
    the symmetrized triple-sum form exactly.
    """
    grid = u.grid
    rho = u.with_values(u.rho)
    grho = gradient(rho)
    K = 0.5 * sum(_real(inner(ga, w.conv_lap(ga))) for ga in grho)

    gv = _grad_v_kernels(kernel, grid)
    total = 0.0 + 0.0j
    for a in range(grid.n):
        force = kernel_apply(gv[a], rho)  # (d_a V) * rho
        flux = rho.with_values(np.real(rho.values) * np.real(force.values))
        total += inner(rho, w.conv_grad(flux)[a])
    return K, _real(total), remainder_R(u, w)


def integrated_identity(traj: TrajectoryRecord, model: Model,
                        w: WeightFields) -> MorawetzReport:
    """Windowed Morawetz report over a recorded trajectory.

    identity_residual = |int rate dt - (M(t2) - M(t1))| with trapezoid time
    quadrature; bound_ratio_228 normalizes the integrated rate by
    2 ||u||_2^3 sup_t ||grad u||_2 (the |x| weight has ||grad h||_inf = 1);
    bound_ratio_a11 is the max of |M| / (||u||_2^2 ||u; Hdot^{1/2}||^2);
    fitted_c_223 is the least-squares constant in
    <grad rho, lap h * grad rho> = c ||rho; Hdot^{(3-n)/2}||^2 across frames.
    """
    if len(traj.times) < 3:
        raise ValueError("need at least 3 recorded frames")
    from .observables import current

    n = w.grid.n
    samples = []
    a_vals, b_vals, a11 = [], [], []
    sup_grad = 0.0
    mass_norm = None
    for t, u in zip(traj.times, traj.snapshots):
        rho = u.with_values(u.rho)
        j = current(u)
        if isinstance(model, HartreeKernel):
            K, P, R = hartree_rate(u, model, w)
        else:
            K, P, R = nls_rate(u, model, w)
        M = quad_M(rho, j, w)
        samples.append(MorawetzSample(t=t, J=quad_J(rho, w), M=M,
                                      K=K, Ppot=P, R=R))
        a_vals.append(2.0 * K)
        b_vals.append(sobolev_norm(rho, (3.0 - n) / 2.0) ** 2)
        gn = np.sqrt(sum(l2_norm(g) ** 2 for g in gradient(u)))
        sup_grad = max(sup_grad, gn)
        if mass_norm is None:
            mass_norm = l2_norm(u)
        half = sobolev_norm(u, 0.5) ** 2
        denom = l2_norm(u) ** 2 * half
        a11.append(abs(M) / denom if denom > 0 else 0.0)

    times = np.array(traj.times)
    rates = np.array([s.rate for s in samples])
    integral = float(np.trapezoid(rates, times))
    residual = abs(integral - (samples[-1].M - samples[0].M))

    denom228 = 2.0 * mass_norm ** 3 * sup_grad
    ratio228 = integral / denom228 if denom228 > 0 else 0.0

    a = np.array(a_vals)
    b = np.array(b_vals)
    c = float(np.dot(a, b) / np.dot(b, b)) if np.dot(b, b) > 0 else 0.0
    if c != 0.0:
        dev = float(np.max(np.abs(a - c * b) / np.abs(c * b)))
    else:
        dev = 0.0

    return MorawetzReport(
        samples=samples, identity_residual=residual,
        boundary_values=(samples[0].M, samples[-1].M),
        bound_ratio_228=ratio228, bound_ratio_a11=float(max(a11)),
        fitted_c_223=c, fitted_c_max_dev=dev)


def h12_bound_check(u: Field) -> float:
    """|<rho, grad|x| * Im conj(u) grad u>| / (||u||_2^2 ||u; Hdot^{1/2}||^2)."""
    from .observables import current
    norm2 = l2_norm(u)
    if norm2 == 0.0:
        return 0.0
    half = sobolev_norm(u, 0.5) ** 2
    if half == 0.0:
        return 0.0
    w = weight_fields(AbsX(), u.grid)
    rho = u.with_values(u.rho)
    return abs(quad_M(rho, current(u), w)) / (norm2 ** 2 * half)


def original_morawetz_rate(u: Field, model: Model) -> tuple[Field, Field, Field]:
    """The three terms of the pointwise (original) Morawetz rate for h = |x|.

    term1 = hess h * (grad conj(u) grad u)
    term2 = -(1/4) biharmonic(|x|) * rho
            (= 2 pi rho in n = 3 by the delta identity;
             (1/4)(n-1)(n-3) |x|^{-3} * rho otherwise)
    term3 = (n-1) |x|^{-1} * (rho g - G)
    Only defined for n >= 2.
    """
    grid = u.grid
    if grid.n < 2:
        raise ValueError("original Morawetz rate requires n >= 2")
    n = grid.n
    w = weight_fields(AbsX(), grid)
    rho = u.with_values(u.rho)
    grads = gradient(u)

    t1 = np.zeros(grid.shape, dtype=complex)
    for i in range(n):
        for j in range(n):
            gg = u.with_values(np.conj(grads[i].values) * grads[j].values)
            t1 += w.conv_hess(i, j, gg).values
    term1 = u.with_values(np.real(t1))

    if n == 3:
        term2 = u.with_values(2.0 * np.pi * np.real(rho.values))
    else:
        kern = radial_power_kernel(grid, -3.0, 0.25 * (n - 1) * (n - 3))
        term2 = u.with_values(np.real(kernel_apply(kern, rho).values))

    if isinstance(model, FreeModel):
        term3 = u.with_values(np.zeros(grid.shape))
    else:
        kern = radial_power_kernel(grid, -1.0, float(n - 1))
        src = rho_g_minus_G(model, rho)
        term3 = u.with_values(np.real(kernel_apply(kern, src).values))
    return term1, term2, term3


def bilinear_rate(u1: Field, u2: Field, model: Model,
                  w: WeightFields) -> tuple[tuple[float, float, float], float]:
    """Bilinear rate: bracket cross terms (c1, c2, c3) and remainder R12.

    c1 = (1/2)<grad rho1, lap h * grad rho2>,
    c2 = (1/2)<rho1, lap h * (rho2 g2 - G2)>, c3 = the (1 <-> 2) mirror;
    the full rate is c1 + c2 + c3 + R12.  With u1 = u2 this reduces to the
    single-field decomposition: c1 = K, c2 + c3 = Ppot, R12 = R.
    """
    grid = ensure_same_grid(u1, u2)
    rho1, rho2 = u1.with_values(u1.rho), u2.with_values(u2.rho)
    g1, g2 = gradient(rho1), gradient(rho2)
    c1 = 0.5 * sum(_real(inner(a, w.conv_lap(b))) for a, b in zip(g1, g2))
    if isinstance(model, FreeModel):
        c2 = c3 = 0.0
    else:
        c2 = 0.5 * _real(inner(rho1, w.conv_lap(rho_g_minus_G(model, rho2))))
        c3 = 0.5 * _real(inner(rho2, w.conv_lap(rho_g_minus_G(model, rho1))))

    d1, d2 = gradient(u1), gradient(u2)
    ug1 = [u1.with_values(np.conj(u1.values) * g.values) for g in d1]
    ug2 = [u2.with_values(np.conj(u2.values) * g.values) for g in d2]
    total = 0.0 + 0.0j
    for i in range(grid.n):
        for j in range(grid.n):
            gg2 = u2.with_values(np.conj(d2[i].values) * d2[j].values)
            gg1 = u1.with_values(np.conj(d1[i].values) * d1[j].values)
            total += 0.5 * inner(rho1, w.conv_hess(i, j, gg2))
            total += 0.5 * inner(rho2, w.conv_hess(i, j, gg1))
            total -= inner(ug1[i], w.conv_hess(i, j, ug2[j]))
    # the bilinear remainder is the real part of the bracket; for distinct
    # fields the individual cross terms carry cancelling imaginary parts
    return (c1, c2, c3), float(np.real(total))


@dataclass
class FocusingMargin:
    grad_term: float
    potential_term: float
    margin: float
    empirical_ratio: float

    def __iter__(self):
        return iter((self.grad_term, self.potential_term, self.margin))


def focusing_margin(u: Field, p: float) -> FocusingMargin:
    """One-dimensional focusing margin dM/dt = ||rho'||_2^2 - ((p-1)/(p+1)) int rho^{(p+3)/2}.

    Requires n = 1 and p >= 5 (so the critical index sigma_c = 1/2 - 2/(p-1)
    is nonnegative).  empirical_ratio is (potential/grad) divided by
    ||u; Hdot^{sigma_c}||^{p-1}, the quantity whose boundedness encodes the
    small-data positivity of the margin.
    """
    if u.grid.n != 1:
        raise ValueError("focusing margin is a one-dimensional diagnostic")
    if p < 5:
        raise ValueError("need p >= 5 so that sigma_c >= 0")
    rho = u.with_values(u.rho)
    grad_term = sum(l2_norm(g) ** 2 for g in gradient(rho))
    vals = np.maximum(np.real(rho.values), 0.0)
    pot = (p - 1.0) / (p + 1.0) * u.grid.cell_volume \
        * float(np.sum(vals ** ((p + 3.0) / 2.0)))
    sigma_c = 0.5 - 2.0 / (p - 1.0)
    crit = sobolev_norm(u, sigma_c) ** (p - 1.0)
    ratio = (pot / grad_term / crit) if grad_term > 0 and crit > 0 else 0.0
    return FocusingMargin(grad_term=float(grad_term), potential_term=pot,
                          margin=float(grad_term) - pot, empirical_ratio=ratio)


def pointwise_lemma_margin(u: Field) -> tuple[float, float]:
    """(max rho^{3/2}, (3/4) int rho^{1/2} |rho'|) for a one-dimensional field."""
    if u.grid.n != 1:
        raise ValueError("pointwise lemma is one-dimensional")
    rho = np.maximum(np.real(u.rho), 0.0)
    lhs = float(np.max(rho) ** 1.5)
    rp = np.real(gradient(u.with_values(u.rho))[0].values)
    rhs = 0.75 * u.grid.cell_volume * float(np.sum(np.sqrt(rho) * np.abs(rp)))
    return lhs, rhs


def pointwise_1d_bound(traj: TrajectoryRecord) -> float:
    """Ratio of the sixth-power space-time sup bound in one dimension.

    LHS = ||u; L^6(I, L^inf)||^3, RHS = (3/4) ||u||_2 (int ||rho'||_2^2 dt)^{1/2};
    returns LHS/RHS (0 for the zero field).  The constant 3/4 is sharp enough
    that the ratio must stay <= 1.
    """
    from .observables import spacetime_norm
    grid = traj.snapshots[0].grid
    if grid.n != 1:
        raise ValueError("pointwise bound is one-dimensional")
    lhs = spacetime_norm(traj, 6.0, np.inf) ** 3
    times = np.array(traj.times)
    vals = np.array([
        sum(l2_norm(g) ** 2 for g in gradient(u.with_values(u.rho)))
        for u in traj.snapshots])
    rhs = 0.75 * l2_norm(traj.snapshots[0]) * float(np.sqrt(np.trapezoid(vals, times)))
    return lhs / rhs if rhs > 0 else 0.0
