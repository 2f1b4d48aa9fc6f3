"""Deterministic random field ensembles.

The generator is a splitmix64 state advance (64-bit add of the golden-ratio
constant followed by two xor-shift-multiply mixes), chosen because it is
trivially portable: the stream depends only on the seed, never on platform,
numpy version or call history elsewhere in the process.  Uniform doubles are
built from the top 53 bits and turned into normals by Box-Muller.

Fields are band-limited (only Fourier modes with every |m_a| <= modes are
populated) with independent complex-normal coefficients, then rescaled so the
inhomogeneous H^1 norm equals the requested amplitude exactly.
"""

from __future__ import annotations

import numpy as np

from .fields import Field, GridSpec
from .spectral import h1_norm

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    """splitmix64 stream: state += gamma; output = mix(state)."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def next_double(self) -> float:
        # top 53 bits -> uniform in [0, 1)
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def next_normal_pair(self) -> tuple[float, float]:
        u1 = self.next_double()
        while u1 == 0.0:
            u1 = self.next_double()
        u2 = self.next_double()
        r = np.sqrt(-2.0 * np.log(u1))
        return (float(r * np.cos(2.0 * np.pi * u2)),
                float(r * np.sin(2.0 * np.pi * u2)))

    def next_complex_normal(self) -> complex:
        a, b = self.next_normal_pair()
        return complex(a, b)


def random_field(seed: int, grid: GridSpec, modes: int = 4,
                 amplitude: float = 1.0) -> Field:
    """Band-limited complex-normal field with exact H^1 norm `amplitude`."""
    if modes < 1:
        raise ValueError("modes must be >= 1")
    if modes >= grid.N // 2:
        raise ValueError("modes must stay below the Nyquist index N/2")
    rng = SplitMix64(seed)
    spec = np.zeros(grid.shape, dtype=complex)
    rng_index = np.fft.fftfreq(grid.N, d=1.0 / grid.N).astype(int)
    # fill coefficients in a fixed (sorted mode) order for reproducibility
    axes = [np.where(np.abs(rng_index) <= modes)[0] for _ in range(grid.n)]
    order = [sorted(ax, key=lambda i: (rng_index[i], i)) for ax in axes]
    for index in np.ndindex(*[len(o) for o in order]):
        pos = tuple(order[a][index[a]] for a in range(grid.n))
        spec[pos] = rng.next_complex_normal()
    values = np.fft.ifftn(spec, norm="ortho")
    f = Field(grid, values)
    norm = h1_norm(f)
    if norm == 0.0:
        raise ValueError("degenerate random draw")
    return f.with_values(values * (amplitude / norm))


def random_ensemble(seed: int, count: int, grid: GridSpec, modes: int = 4,
                    amplitude: float = 1.0) -> list[Field]:
    """`count` independent fields; member i uses the derived seed mix(seed, i)."""
    out = []
    for i in range(count):
        member_seed = SplitMix64((seed ^ (i * _GAMMA)) & _MASK).next_u64()
        out.append(random_field(member_seed, grid, modes, amplitude))
    return out
