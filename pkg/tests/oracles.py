"""Independent reference implementations the library is checked against.

Everything here is direct summation with explicitly built phase matrices (or
stencil arithmetic), deliberately avoiding the FFT code paths under test.
"""

import numpy as np


def phase_matrix(box, grid):
    """e^{2 pi i k.x} over (box point, grid node)."""
    return np.exp(2j * np.pi * (box.points.astype(float) @ grid.nodes.T))


def dft_forward(f_values, box, grid):
    """F(x_j) = sum_k e^{-2 pi i k.x_j} f(k) by direct summation."""
    return np.conj(phase_matrix(box, grid)).T @ f_values


def dft_inverse(F_values, box, grid):
    """f(k) = (1/M^n) sum_j e^{2 pi i k.x_j} F(x_j) by direct summation."""
    return phase_matrix(box, grid) @ F_values / grid.size


def quantize_direct(samples, f_values, box, grid):
    """Op(sigma) f by the double sum, row by row."""
    fhat = dft_forward(f_values, box, grid)
    E = phase_matrix(box, grid)
    return (E * samples * fhat[None, :]).sum(axis=1) / grid.size


def operator_matrix_by_columns(apply_fn, box):
    """Dense matrix of a black-box linear operator by probing basis vectors."""
    cols = []
    for i in range(box.size):
        e = np.zeros(box.size, dtype=complex)
        e[i] = 1.0
        cols.append(apply_fn(e))
    return np.stack(cols, axis=1)


def second_derivative_stencil(fn, x, h=1e-3):
    """Fourth-order central stencil for d^2/dx^2 of a scalar closed form."""
    return (-fn(x + 2 * h) + 16 * fn(x + h) - 30 * fn(x)
            + 16 * fn(x - h) - fn(x - 2 * h)) / (12 * h**2)


def falling_factorial(values, length):
    out = np.ones_like(np.asarray(values, dtype=float))
    for m in range(length):
        out = out * (values - m)
    return out


def torus_fourier_coefficient(values, grid, freq):
    """c_l = (1/M^n) sum_j e^{-2 pi i l.x_j} h(x_j) by direct quadrature."""
    phases = np.exp(-2j * np.pi * (grid.nodes @ np.asarray(freq, dtype=float)))
    return np.sum(phases * values) / grid.size


def falling_coefficient_at_zero(values, grid, alpha):
    """D^(alpha) h(0) = sum_l prod_j l_j (l_j - 1) ... c_l, summed directly."""
    N = (grid.M - 1) // 2
    total = 0.0 + 0.0j
    for flat in range(grid.M**grid.n):
        l = []
        rest = flat
        for _ in range(grid.n):
            l.append(rest % grid.M - N)
            rest //= grid.M
        mult = 1.0
        for j, a in enumerate(alpha):
            mult *= falling_factorial(np.array(l[j], dtype=float), a)
        if mult != 0.0:
            total += mult * torus_fourier_coefficient(values, grid, l)
    return total
