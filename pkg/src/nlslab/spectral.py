"""Spectral transforms, Fourier multipliers, convolutions and norms.

The forward transform is the unitary ("ortho"-normalized) FFT, so Parseval
holds exactly on the lattice: sum |f|^2 = sum |fhat|^2.  All quadrature is
the plain rectangle rule dx^n * sum, which is spectrally accurate for smooth
periodic integrands.

Homogeneous-space convention: for negative powers of omega = (-Delta)^{1/2}
the zero Fourier mode is set to zero.  This is the definition of every
Hdot^sigma norm in this package.
"""

from __future__ import annotations

import numpy as np

from .fields import Field, GridSpec, ensure_same_grid


def spectral_transform(f: Field, direction: str = "forward") -> Field:
    """Unitary FFT of a field (direction 'forward' or 'inverse')."""
    if direction == "forward":
        return f.with_values(np.fft.fftn(f.values, norm="ortho"))
    if direction == "inverse":
        return f.with_values(np.fft.ifftn(f.values, norm="ortho"))
    raise ValueError(f"unknown direction {direction!r}")


def apply_multiplier(f: Field, multiplier: np.ndarray) -> Field:
    """Apply a Fourier multiplier m(k) to a field."""
    fhat = np.fft.fftn(f.values)
    return f.with_values(np.fft.ifftn(multiplier * fhat))


def fractional_omega(f: Field, s: float) -> Field:
    """Fractional power omega^s = (-Delta)^{s/2} as the multiplier |k|^s.

    s = 0 returns the field unchanged; for s < 0 the zero mode is zeroed
    (homogeneous-space convention).
    """
    if s == 0:
        return f
    grid = f.grid
    k_abs = grid.k_abs
    mult = np.zeros(grid.shape)
    nz = k_abs > 0
    mult[nz] = k_abs[nz] ** s
    # |0|^s = 0 for s > 0 already; for s < 0 the zero mode stays zeroed.
    return apply_multiplier(f, mult)


def gradient(f: Field) -> list[Field]:
    """Spectral gradient, one component field per axis."""
    fhat = np.fft.fftn(f.values)
    out = []
    for ka in f.grid.k:
        out.append(f.with_values(np.fft.ifftn(1j * ka * fhat)))
    return out


def divergence(components: list[Field]) -> Field:
    """Spectral divergence of a vector of component fields."""
    grid = ensure_same_grid(*components)
    acc = np.zeros(grid.shape, dtype=complex)
    for ka, comp in zip(grid.k, components):
        acc = acc + 1j * ka * np.fft.fftn(comp.values)
    return Field(grid, np.fft.ifftn(acc))


def laplacian(f: Field) -> Field:
    return apply_multiplier(f, -f.grid.k_sq)


def linear_convolve(a: Field, b: Field) -> Field:
    """Zero-padded (linear, non-circular) convolution scaled by dx^n.

    Approximates the convolution on R^n for fields supported well inside the
    box.  Both inputs are treated as zero outside [-L, L)^n.
    """
    grid = ensure_same_grid(a, b)
    N, n = grid.N, grid.n
    pad_shape = (2 * N,) * n
    A = np.zeros(pad_shape, dtype=complex)
    B = np.zeros(pad_shape, dtype=complex)
    core = tuple(slice(0, N) for _ in range(n))
    A[core] = a.values
    B[core] = b.values
    full = np.fft.ifftn(np.fft.fftn(A) * np.fft.fftn(B))
    # index i+j of the full product corresponds to x = -2L + (i+j) dx;
    # the grid point x_j' sits at index j' + N/2.
    out = full[tuple(slice(N // 2, N // 2 + N) for _ in range(n))]
    return Field(grid, out * grid.cell_volume)


def kernel_sample_offsets(grid: GridSpec) -> list[np.ndarray]:
    """Difference-lattice coordinates (x_i - x_j values) in wrapped FFT order.

    Returns one broadcastable coordinate array per axis on the doubled grid,
    covering offsets m*dx for m in [-N, N).
    """
    m = np.fft.fftfreq(2 * grid.N, d=1.0 / (2 * grid.N))
    ax = grid.dx * m
    return list(np.meshgrid(*([ax] * grid.n), indexing="ij", sparse=True))


def kernel_apply(kernel_wrapped: np.ndarray, f: Field) -> Field:
    """Convolve f against a kernel sampled on the full difference lattice.

    `kernel_wrapped` has shape (2N,)^n in wrapped FFT order (as produced by
    evaluating a closed form on `kernel_sample_offsets`).  Because every
    pairwise grid-point difference is represented, the result is the exact
    discrete sum dx^n * sum_i k(x_j - x_i) f(x_i) with no box truncation of
    the kernel.
    """
    grid = f.grid
    N, n = grid.N, grid.n
    if kernel_wrapped.shape != (2 * N,) * n:
        raise ValueError("kernel shape does not match doubled grid")
    F = np.zeros((2 * N,) * n, dtype=complex)
    F[tuple(slice(0, N) for _ in range(n))] = f.values
    conv = np.fft.ifftn(np.fft.fftn(F) * np.fft.fftn(kernel_wrapped))
    out = conv[tuple(slice(0, N) for _ in range(n))]
    return Field(grid, out * grid.cell_volume)


def inner(a: Field, b: Field) -> complex:
    """L2 scalar product <a, b> = dx^n * sum conj(a) b."""
    grid = ensure_same_grid(a, b)
    return complex(grid.cell_volume * np.vdot(a.values, b.values))


def lp_norm(f: Field, r: float) -> float:
    """L^r quadrature norm; r = inf gives the max norm."""
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    if np.isinf(r):
        return float(np.max(np.abs(f.values)))
    return float((f.grid.cell_volume * np.sum(np.abs(f.values) ** r)) ** (1.0 / r))


def l2_norm(f: Field) -> float:
    return float(np.sqrt(f.grid.cell_volume * np.sum(np.abs(f.values) ** 2)))


def sobolev_norm(f: Field, sigma: float, r: float = 2) -> float:
    """Homogeneous Sobolev norm || omega^sigma f ||_r."""
    return lp_norm(fractional_omega(f, sigma), r)


def h1_norm(f: Field) -> float:
    """Inhomogeneous H^1 norm (||f||_2^2 + ||grad f||_2^2)^{1/2}."""
    g2 = sum(l2_norm(c) ** 2 for c in gradient(f))
    return float(np.sqrt(l2_norm(f) ** 2 + g2))
