"""Discrete Fourier analysis between a lattice box and its matched torus grid.

Normalization: the forward transform carries no prefactor,

    F(x) = sum_k e^{-2*pi*i k.x} f(k),

while the inverse carries the quadrature weight 1/M^n realizing the torus
integral,

    f(k) = (1/M^n) sum_j e^{2*pi*i k.x_j} F(x_j).

On the cyclic model the pair is exactly inverse and the Plancherel identity
holds at roundoff.
"""

from __future__ import annotations

import numpy as np

from .grids import LatticeBox, LatticeSequence, TorusFunction, TorusGrid, require_matched


def forward_fourier(f: LatticeSequence, grid: TorusGrid) -> TorusFunction:
    """Transform a lattice sequence to its frequency function on the grid.

    Computed by FFT using the bijection k <-> k mod M, which is exact for
    odd M = 2N+1.
    """
    require_matched(f.box, grid)
    shaped = f.box.to_fft_layout(f.values)
    return TorusFunction(grid, np.fft.fftn(shaped).ravel())


def inverse_fourier(F: TorusFunction, box: LatticeBox) -> LatticeSequence:
    """Quadrature realization of the inversion integral; exact inverse of
    :func:`forward_fourier` on the cyclic model."""
    require_matched(box, F.grid)
    shaped = np.fft.ifftn(F.values.reshape(F.grid.shape))
    return LatticeSequence(box, box.from_fft_layout(shaped).ravel())


def plancherel_defect(f: LatticeSequence) -> float:
    """| sum_k |f(k)|^2 - (1/M^n) sum_j |F(x_j)|^2 |, a roundoff-level quantity."""
    grid = f.box.matched_grid()
    F = forward_fourier(f, grid)
    lattice_side = float(np.sum(np.abs(f.values) ** 2))
    torus_side = float(np.sum(np.abs(F.values) ** 2) * grid.weight)
    return abs(lattice_side - torus_side)
