"""Interaction models: local power nonlinearities and Hartree kernels.

A model supplies the real coupling function g(rho) entering
i du/dt = -(1/2) Lap u + g(rho) u, its antiderivative G(rho), and the
combination rho*g - G that appears in the Morawetz rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import Field, GridSpec
from .spectral import linear_convolve

NEGATIVE_RHO_TOL = 1e-14


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class PowerLaw:
    """Sum of power terms sum_i lam_i rho^{(p_i - 1)/2}, exponents p_i > 1."""

    terms: tuple[tuple[float, float], ...]  # (coupling, exponent), ascending p

    def __post_init__(self):
        if not self.terms:
            raise ModelError("power law needs at least one term")
        ps = [p for _, p in self.terms]
        if any(p <= 1 for p in ps):
            raise ModelError("all exponents must exceed 1")
        if any(p2 <= p1 for p1, p2 in zip(ps, ps[1:])):
            raise ModelError("exponents must be strictly increasing")
        object.__setattr__(
            self, "terms", tuple((float(l), float(p)) for l, p in self.terms))

    @property
    def defocusing(self) -> bool:
        return all(lam >= 0 for lam, _ in self.terms)


@dataclass(frozen=True)
class HartreeKernel:
    """Nonlocal coupling g(rho) = coupling * (V * rho).

    family 'gaussian': V(x) = exp(-a |x|^2), parameter a > 0.
    family 'inverse_power': V(x) = (|x|^2 + eps^2)^{-gamma/2},
    parameters gamma in (0, n) and eps > 0 (the regularization keeps V
    bounded; eps is recorded in run metadata).
    Both families are radial nonincreasing for positive coupling.
    """

    family: str
    a: float = 1.0
    gamma: float = 1.0
    eps: float = 0.1
    coupling: float = 1.0

    def __post_init__(self):
        if self.family not in ("gaussian", "inverse_power"):
            raise ModelError(f"unknown Hartree family {self.family!r}")
        if self.family == "gaussian" and not self.a > 0:
            raise ModelError("gaussian width parameter must be positive")
        if self.family == "inverse_power":
            if not self.gamma > 0:
                raise ModelError("inverse-power exponent must be positive")
            if not self.eps > 0:
                raise ModelError("inverse-power regularization must be positive")

    @property
    def radial_nonincreasing(self) -> bool:
        return self.coupling > 0

    def profile(self, r: np.ndarray) -> np.ndarray:
        """v(r) with V(x) = coupling * v(|x|)."""
        r = np.asarray(r, dtype=float)
        if self.family == "gaussian":
            return np.exp(-self.a * r ** 2)
        return (r ** 2 + self.eps ** 2) ** (-self.gamma / 2.0)

    def profile_derivative(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.family == "gaussian":
            return -2.0 * self.a * r * np.exp(-self.a * r ** 2)
        return -self.gamma * r * (r ** 2 + self.eps ** 2) ** (-self.gamma / 2.0 - 1)

    def sampled(self, grid: GridSpec) -> Field:
        """V sampled on the grid (without the coupling factor)."""
        return Field(grid, self.profile(grid.r_abs))


@dataclass(frozen=True)
class FreeModel:
    """g = 0: free Schroedinger dynamics."""


Model = PowerLaw | HartreeKernel | FreeModel


def _clipped_rho(rho: Field) -> np.ndarray:
    vals = np.real(rho.values)
    low = vals.min()
    scale = max(vals.max(), 1.0)
    if low < -NEGATIVE_RHO_TOL * scale:
        raise ModelError(f"density has negative values (min {low})")
    return np.maximum(vals, 0.0)


def _power(rho: np.ndarray, expo: float) -> np.ndarray:
    # continuous extension rho^a = 0 at rho = 0 for any a > 0
    if expo == 0:
        return np.ones_like(rho)
    with np.errstate(divide="ignore"):
        out = np.where(rho > 0, rho, 1.0) ** expo
    return np.where(rho > 0, out, 0.0)


def g_of_rho(model: Model, rho: Field) -> Field:
    """Coupling g(rho), pointwise for power laws, V * rho for Hartree."""
    if isinstance(model, FreeModel):
        return rho.with_values(np.zeros(rho.grid.shape))
    vals = _clipped_rho(rho)
    if isinstance(model, PowerLaw):
        out = np.zeros_like(vals)
        for lam, p in model.terms:
            out += lam * _power(vals, (p - 1) / 2.0)
        return rho.with_values(out)
    V = model.sampled(rho.grid)
    conv = linear_convolve(V, rho.with_values(vals))
    return rho.with_values(model.coupling * np.real(conv.values))


def G_of_rho(model: Model, rho: Field) -> Field:
    """Potential energy density G(rho) = int_0^rho g.

    For Hartree models G is replaced by the quadratic density
    (1/2) rho (V * rho), whose integral is the conserved interaction energy.
    """
    if isinstance(model, FreeModel):
        return rho.with_values(np.zeros(rho.grid.shape))
    vals = _clipped_rho(rho)
    if isinstance(model, PowerLaw):
        out = np.zeros_like(vals)
        for lam, p in model.terms:
            out += 2.0 * lam / (p + 1.0) * _power(vals, (p + 1) / 2.0)
        return rho.with_values(out)
    g = g_of_rho(model, rho)
    return rho.with_values(0.5 * vals * np.real(g.values))


def rho_g_minus_G(model: Model, rho: Field) -> Field:
    """rho g(rho) - G(rho); for power laws sum_i lam_i (p-1)/(p+1) rho^{(p+1)/2}."""
    if isinstance(model, FreeModel):
        return rho.with_values(np.zeros(rho.grid.shape))
    vals = _clipped_rho(rho)
    if isinstance(model, PowerLaw):
        out = np.zeros_like(vals)
        for lam, p in model.terms:
            out += lam * (p - 1.0) / (p + 1.0) * _power(vals, (p + 1) / 2.0)
        return rho.with_values(out)
    g = g_of_rho(model, rho)
    G = G_of_rho(model, rho)
    return rho.with_values(vals * np.real(g.values) - np.real(G.values))


def radial_monotone_check(kernel: HartreeKernel, n: int,
                          samples: int = 64, seed: int = 0) -> dict:
    """Check the radial-nonincreasing hypothesis of the Hartree positivity.

    Samples v'(r) on a log-spaced radius grid (max must be <= 0 for a
    nonincreasing kernel) and evaluates the two-point positivity integrand
    (directional second-difference of grad h against grad V) on random point
    pairs via midpoint quadrature of the line integral.
    """
    radii = np.logspace(-3, 2, 200)
    vprime = kernel.coupling * kernel.profile_derivative(radii)
    max_vprime = float(vprime.max())

    rng = np.random.default_rng(seed)
    thetas = np.linspace(0.0, 1.0, 65)[:-1] + 1.0 / 128.0  # midpoints
    lo, hi = np.inf, -np.inf
    for _ in range(samples):
        x = rng.normal(size=n)
        y = rng.normal(size=n)
        rx = max(float(np.linalg.norm(x)), 1e-9)
        # line-integral form of gradV(x).(grad h(x+y) - grad h(y)):
        # (v'(|x|)/|x|) * int_0^1 x^T hess h(y + t x) x dt with h = |x|,
        # x^T hess h(z) x = (|x|^2 - (x.z/|z|)^2)/|z|
        if n == 1:
            # hess h = 2 delta: the pair quantity is v'(|x|) sign contrast
            quad = 2.0 * float(abs(x[0]))
        else:
            pts = y[None, :] + thetas[:, None] * x[None, :]
            rr = np.maximum(np.linalg.norm(pts, axis=1), 1e-9)
            quad = float(np.mean((np.dot(x, x) - ((pts @ x) / rr) ** 2) / rr))
        val = kernel.coupling * float(kernel.profile_derivative(rx)) / rx * quad
        lo, hi = min(lo, val), max(hi, val)
    return {
        "max_vprime": max_vprime,
        "nonincreasing": max_vprime <= 0.0,
        "min_pair_quantity": lo,
        "max_pair_quantity": hi,
        "positivity_ok": max_vprime <= 0.0 and hi <= 1e-12,
    }
