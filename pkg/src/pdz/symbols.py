"""Symbols sigma(k, x) on box x grid, amplitudes a(k, l, x), and the
difference/derivative operators acting on them.

Conventions fixed here and relied on everywhere else:

* ``Delta^alpha`` iterates the first differences ``Delta_j t(k) = t(k+v_j) - t(k)``
  with cyclic wrap at the box edge (the spectral and pointwise definitions
  then agree exactly on the cyclic model).
* ``D^(beta)`` is the falling-factorial derivative: per axis,
  ``D^(l) = D (D-1) ... (D-l+1)`` with ``D = (1/2 pi i) d/dx`` and
  ``D^(0) = I``.  On a character ``e^{2 pi i d x}`` it acts by
  ``d (d-1) ... (d-l+1)``, so it annihilates nonnegative-frequency
  trigonometric polynomials of degree < l; that exactness is what makes
  finite expansions in the calculus module terminate.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainMismatchError, NonFiniteValueError
from .grids import LatticeBox, TorusFunction, TorusGrid, require_matched

#: Largest total expansion order supported by the multi-index machinery.
ORDER_CAP = 12

_FACTORIALS = tuple(math.factorial(i) for i in range(ORDER_CAP + 1))


# ---------------------------------------------------------------------------
# multi-indices


def check_multi_index(alpha, n: int) -> tuple[int, ...]:
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != n:
        raise DomainMismatchError(f"multi-index {alpha} has length {len(alpha)}, need {n}")
    if any(a < 0 for a in alpha):
        raise DomainMismatchError(f"multi-index {alpha} has negative entries")
    if sum(alpha) > ORDER_CAP:
        raise DomainMismatchError(f"|alpha| = {sum(alpha)} exceeds the order cap {ORDER_CAP}")
    return alpha


def multi_factorial(alpha) -> int:
    out = 1
    for a in alpha:
        out *= _FACTORIALS[a]
    return out


def multi_indices_of_degree(n: int, degree: int) -> list[tuple[int, ...]]:
    """All alpha >= 0 of length n with |alpha| = degree, lexicographic."""
    if n == 1:
        return [(degree,)]
    out = []
    for first in range(degree + 1):
        for rest in multi_indices_of_degree(n - 1, degree - first):
            out.append((first,) + rest)
    return out


def multi_indices_below(n: int, order: int) -> list[tuple[int, ...]]:
    """All alpha with |alpha| < order, by degree then lexicographic."""
    if order > ORDER_CAP + 1:
        raise DomainMismatchError(f"expansion order {order} exceeds the cap {ORDER_CAP}")
    out = []
    for d in range(order):
        out.extend(multi_indices_of_degree(n, d))
    return out


# ---------------------------------------------------------------------------
# parameter and definition records


@dataclass(frozen=True)
class SymbolClassParams:
    """Order mu and type parameters (rho, delta) declared for a symbol."""

    mu: float
    rho: float = 1.0
    delta: float = 0.0

    def validate_for_calculus(self) -> None:
        """Calculus theorems require 0 <= delta < rho <= 1."""
        if not (0.0 <= self.delta < self.rho <= 1.0):
            raise DomainMismatchError(
                f"calculus requires 0 <= delta < rho <= 1, got rho={self.rho}, delta={self.delta}"
            )


@dataclass
class SymbolDefinition:
    """Closed-form symbol: ``evaluator(k, x)`` broadcasting over leading axes.

    ``k`` is an integer array (..., n) of lattice points and ``x`` a float
    array (..., n) of torus points; the evaluator must be total and finite
    on box x grid.
    """

    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    params: SymbolClassParams = field(default_factory=lambda: SymbolClassParams(0.0))
    name: str = ""


@dataclass
class AmplitudeDefinition:
    """Closed-form amplitude ``evaluator(k, l, x)`` with declared orders."""

    evaluator: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    mu1: float = 0.0
    mu2: float = 0.0
    rho: float = 1.0
    delta: float = 0.0
    name: str = ""


# ---------------------------------------------------------------------------
# sampled symbols


class SampledSymbol:
    """Grid samples of a symbol: ``samples[i, j] = sigma(k_i, x_j)``.

    Rows run over box points (lexicographic), columns over grid nodes
    (C order).  The row Fourier coefficients kappa(k, l) are computed once
    on demand under a lock; everything else treats instances as immutable.
    """

    __slots__ = ("box", "grid", "samples", "params", "_kappa", "_lock")

    def __init__(self, box: LatticeBox, grid: TorusGrid, samples: np.ndarray,
                 params: SymbolClassParams | None = None):
        require_matched(box, grid)
        samples = np.asarray(samples, dtype=complex)
        if samples.shape != (box.size, grid.size):
            samples = samples.reshape(box.size, grid.size)
        if not np.all(np.isfinite(samples)):
            bad = np.argwhere(~np.isfinite(samples))[0]
            raise NonFiniteValueError(
                f"symbol samples non-finite at k={tuple(box.points[bad[0]])}, "
                f"x={tuple(grid.nodes[bad[1]])}",
                where=(tuple(box.points[bad[0]]), tuple(grid.nodes[bad[1]])),
            )
        self.box = box
        self.grid = grid
        self.samples = samples
        self.params = params
        self._kappa = None
        self._lock = threading.Lock()

    def with_samples(self, samples: np.ndarray, params=None) -> "SampledSymbol":
        return SampledSymbol(self.box, self.grid, samples,
                             params if params is not None else self.params)

    def kappa(self) -> np.ndarray:
        """Row transform kappa(k, l) = (1/M^n) sum_j e^{2 pi i l.x_j} sigma(k, x_j).

        Returned as a (box.size, box.size) array with l in box order; the
        rows reconstruct the samples via sigma(k, x) = sum_l kappa(k, l) e^{-2 pi i l.x}.
        """
        if self._kappa is None:
            with self._lock:
                if self._kappa is None:
                    shaped = self.samples.reshape((self.box.size,) + self.grid.shape)
                    axes = tuple(range(1, self.grid.n + 1))
                    kap = np.fft.ifftn(shaped, axes=axes)
                    kap = np.fft.fftshift(kap, axes=axes)
                    self._kappa = kap.reshape(self.box.size, self.box.size)
        return self._kappa

    def x_coefficients(self) -> np.ndarray:
        """Fourier coefficients c(k, l) with sigma(k, x) = sum_l c(k, l) e^{2 pi i l.x};
        related to the row transform by c(k, l) = kappa(k, -l)."""
        kap = self.kappa().reshape((self.box.size,) + self.box.shape)
        axes = tuple(range(1, self.box.n + 1))
        return np.flip(kap, axis=axes).reshape(self.box.size, self.box.size)

    def kappa_defect(self) -> float:
        """Max-abs mismatch between the cached row transform and a fresh one."""
        cached = self.kappa()
        fresh = self.with_samples(self.samples.copy()).kappa()
        return float(np.max(np.abs(cached - fresh)))

    def row_max(self) -> np.ndarray:
        return np.abs(self.samples).max(axis=1)


def sample(definition: SymbolDefinition, box: LatticeBox, grid: TorusGrid) -> SampledSymbol:
    """Evaluate a closed-form symbol on box x grid."""
    require_matched(box, grid)
    k = box.points[:, None, :]
    x = grid.nodes[None, :, :]
    values = np.asarray(definition.evaluator(k, x), dtype=complex)
    values = np.broadcast_to(values, (box.size, grid.size))
    return SampledSymbol(box, grid, np.array(values), params=definition.params)


def constant_symbol(box: LatticeBox, grid: TorusGrid, value=1.0) -> SampledSymbol:
    return SampledSymbol(box, grid, np.full((box.size, grid.size), value, dtype=complex),
                         params=SymbolClassParams(0.0))


# ---------------------------------------------------------------------------
# difference and derivative operators


def forward_difference(sym: SampledSymbol, alpha) -> SampledSymbol:
    """Delta^alpha in the lattice variable, iterated first differences with
    cyclic wrap at the box edge."""
    alpha = check_multi_index(alpha, sym.box.n)
    shaped = sym.samples.reshape(sym.box.shape + (sym.grid.size,))
    for axis, a in enumerate(alpha):
        for _ in range(a):
            shaped = np.roll(shaped, -1, axis=axis) - shaped
    return sym.with_samples(shaped.reshape(sym.box.size, sym.grid.size), params=None)


def generalized_difference(sym: SampledSymbol, q: TorusFunction) -> SampledSymbol:
    """q-difference in the lattice variable: for each fixed x, transform the
    k-dependence, multiply by q, transform back (equivalently, cyclic
    convolution of each column with the inverse transform of q).

    With q(y) = e^{2 pi i y_j} - 1 this reproduces ``forward_difference``
    with alpha = v_j.
    """
    box, grid = sym.box, sym.grid
    require_matched(box, q.grid)
    k_axes = tuple(range(box.n))
    shaped = sym.samples.reshape(box.shape + (grid.size,))
    spec = np.fft.fftn(np.fft.ifftshift(shaped, axes=k_axes), axes=k_axes)
    spec *= q.values.reshape(q.grid.shape + (1,))
    out = np.fft.fftshift(np.fft.ifftn(spec, axes=k_axes), axes=k_axes)
    return sym.with_samples(out.reshape(box.size, grid.size), params=None)


def _fft_frequencies(M: int) -> np.ndarray:
    return np.rint(np.fft.fftfreq(M) * M).astype(int)


def _apply_x_multiplier(sym: SampledSymbol, per_axis) -> SampledSymbol:
    """Multiply the x-frequency content of each row: per_axis(l, axis) maps the
    integer frequencies of one grid axis to multiplier values."""
    grid = sym.grid
    shaped = sym.samples.reshape((sym.box.size,) + grid.shape)
    axes = tuple(range(1, grid.n + 1))
    spec = np.fft.fftn(shaped, axes=axes)
    freqs = _fft_frequencies(grid.M)
    for i in range(grid.n):
        mult = np.asarray(per_axis(freqs, i), dtype=complex)
        shape = [1] * (grid.n + 1)
        shape[i + 1] = grid.M
        spec *= mult.reshape(shape)
    out = np.fft.ifftn(spec, axes=axes)
    return sym.with_samples(out.reshape(sym.box.size, grid.size), params=None)


def x_derivative(sym: SampledSymbol, beta) -> SampledSymbol:
    """D^beta with D = (1/2 pi i) d/dx per axis, spectral and exact for
    trigonometric-polynomial rows."""
    beta = check_multi_index(beta, sym.grid.n)
    return _apply_x_multiplier(sym, lambda l, i: l.astype(float) ** beta[i])


def falling_derivative(sym: SampledSymbol, beta) -> SampledSymbol:
    """Falling-factorial derivative D^(beta): per axis the spectral multiplier
    is l (l-1) ... (l-beta_j+1); the empty product (beta_j = 0) is 1."""
    beta = check_multi_index(beta, sym.grid.n)

    def mult(l, i):
        out = np.ones(l.shape, dtype=float)
        for m in range(beta[i]):
            out = out * (l - m)
        return out

    return _apply_x_multiplier(sym, mult)


def partial_x_derivative(sym: SampledSymbol, alpha) -> SampledSymbol:
    """Plain partial derivative d^alpha/dx^alpha (spectral multiplier (2 pi i l)^alpha)."""
    alpha = check_multi_index(alpha, sym.grid.n)
    return _apply_x_multiplier(sym, lambda l, i: (2j * np.pi * l) ** alpha[i])


def x_reflect(sym: SampledSymbol) -> SampledSymbol:
    """Samples of sigma(k, -x), the reflection acting cyclically on grid nodes."""
    grid = sym.grid
    shaped = sym.samples.reshape((sym.box.size,) + grid.shape)
    idx = (-np.arange(grid.M)) % grid.M
    for i in range(grid.n):
        shaped = np.take(shaped, idx, axis=i + 1)
    return sym.with_samples(shaped.reshape(sym.box.size, grid.size), params=None)


# ---------------------------------------------------------------------------
# diagnostics on symbols


def seminorm_estimate(sym: SampledSymbol, alpha, beta, params: SymbolClassParams,
                      interior: bool = False) -> float:
    """Smallest constant witnessed on the box for the mixed bound

        |D^(beta)_x Delta^alpha_k sigma(k, x)| <= C (1+|k|)^(mu - rho|alpha| + delta|beta|).

    With ``interior=True`` the max is restricted to |k|_inf <= N - |alpha|,
    where cyclic differences agree with the full-lattice ones.
    """
    alpha = check_multi_index(alpha, sym.box.n)
    beta = check_multi_index(beta, sym.grid.n)
    work = falling_derivative(forward_difference(sym, alpha), beta)
    mags = work.row_max()
    expo = params.mu - params.rho * sum(alpha) + params.delta * sum(beta)
    weighted = mags * (1.0 + sym.box.norms) ** (-expo)
    if interior:
        margin = sym.box.N - sum(alpha)
        mask = np.abs(sym.box.points).max(axis=1) <= margin
        weighted = weighted[mask]
    return float(weighted.max()) if weighted.size else 0.0


def order_fit(sym: SampledSymbol) -> float:
    """Least-squares slope of log max_x |sigma(k, x)| against log(1+|k|) over
    dyadic shells 2^j <= 1+|k| < 2^(j+1).

    Each shell contributes its largest row max (paired with that row's
    abscissa); all-zero shells are skipped.
    """
    if sym.box.N < 4:
        raise DomainMismatchError(f"order fit needs N >= 4, got N={sym.box.N}")
    rowmax = sym.row_max()
    weights = 1.0 + sym.box.norms
    shell = np.floor(np.log2(weights)).astype(int)
    xs, ys = [], []
    for j in range(int(shell.max()) + 1):
        mask = shell == j
        if not mask.any():
            continue
        vals = rowmax[mask]
        i = int(np.argmax(vals))
        if vals[i] <= 0.0:
            continue
        xs.append(np.log(weights[mask][i]))
        ys.append(np.log(vals[i]))
    if len(xs) < 2:
        raise DomainMismatchError("order fit: fewer than two usable dyadic shells")
    return float(np.polyfit(xs, ys, 1)[0])


@dataclass(frozen=True)
class EllipticityReport:
    ok: bool
    constant: float
    witness_k: tuple[int, ...]
    witness_x: tuple[float, ...]
    mu: float
    cutoff: float
    threshold: float


def ellipticity_check(sym: SampledSymbol, mu: float, m_cut: float | None = None,
                      threshold: float = 1e-10) -> EllipticityReport:
    """Witness the lower bound |sigma(k, x)| >= C (1+|k|)^mu over |k| >= m_cut.

    Returns the minimized constant and the minimizing (k, x); ``ok`` means the
    constant clears the zero-detection threshold.
    """
    if m_cut is None:
        m_cut = max(1, sym.box.N // 2)
    if not m_cut < sym.box.N:
        raise DomainMismatchError(f"cutoff {m_cut} must be smaller than N={sym.box.N}")
    weighted = np.abs(sym.samples) * ((1.0 + sym.box.norms) ** (-mu))[:, None]
    mask = sym.box.norms >= m_cut
    sub = weighted[mask]
    flat = int(np.argmin(sub))
    i, j = divmod(flat, sym.grid.size)
    k_index = np.flatnonzero(mask)[i]
    constant = float(sub.flat[flat])
    return EllipticityReport(
        ok=constant > threshold,
        constant=constant,
        witness_k=tuple(int(v) for v in sym.box.points[k_index]),
        witness_x=tuple(float(v) for v in sym.grid.nodes[j]),
        mu=mu,
        cutoff=float(m_cut),
        threshold=threshold,
    )


# ---------------------------------------------------------------------------
# periodic Taylor expansion


@dataclass
class PeriodicTaylor:
    """Expansion of a grid function h in powers of (e^{2 pi i x} - 1).

    ``coefficients[alpha]`` holds D^(alpha) h(0) for |alpha| < order;
    ``remainders[alpha]`` holds the grid samples of the remainder factor for
    |alpha| = order, so that on every node

        h(x) = sum_{|a|<order} (1/a!) (e^{2 pi i x}-1)^a coefficients[a]
             + sum_{|a|=order} remainders[a](x) (e^{2 pi i x}-1)^a.
    """

    grid: TorusGrid
    order: int
    coefficients: dict[tuple[int, ...], complex]
    remainders: dict[tuple[int, ...], np.ndarray]

    def reconstruct(self) -> np.ndarray:
        factors = [np.exp(2j * np.pi * self.grid.nodes[:, i]) - 1.0 for i in range(self.grid.n)]

        def power(alpha):
            out = np.ones(self.grid.size, dtype=complex)
            for i, a in enumerate(alpha):
                out = out * factors[i] ** a
            return out

        out = np.zeros(self.grid.size, dtype=complex)
        for alpha, c in self.coefficients.items():
            out += (c / multi_factorial(alpha)) * power(alpha)
        for alpha, rem in self.remainders.items():
            out += rem.reshape(-1) * power(alpha)
        return out


def _axis_spectral_derivative(values: np.ndarray, axis: int, M: int) -> np.ndarray:
    spec = np.fft.fft(values, axis=axis)
    shape = [1] * values.ndim
    shape[axis] = M
    spec *= _fft_frequencies(M).reshape(shape)
    return np.fft.ifft(spec, axis=axis)


def periodic_taylor(h: TorusFunction, n_order: int) -> PeriodicTaylor:
    """Expand h around 0 in powers of (e^{2 pi i x} - 1) to total order ``n_order``.

    Works axis by axis: along each axis the factor functions are produced by
    the inductive step g -> (g - g(0)) / (e^{2 pi i y} - 1), using the
    spectral derivative of g at the node y = 0 where the quotient is 0/0.
    The reconstruction identity holds on the grid to roundoff.
    """
    if n_order < 1:
        raise DomainMismatchError(f"expansion order must be >= 1, got {n_order}")
    if n_order > ORDER_CAP:
        raise DomainMismatchError(f"expansion order {n_order} exceeds the cap {ORDER_CAP}")
    grid = h.grid
    n, M = grid.n, grid.M
    coefficients: dict[tuple[int, ...], complex] = {}
    remainders: dict[tuple[int, ...], np.ndarray] = {}
    denom = np.exp(2j * np.pi * np.arange(M) / M) - 1.0

    def expand(values: np.ndarray, axis: int, prefix: tuple[int, ...], budget: int) -> None:
        if axis == n:
            coefficients[prefix] = complex(values.flat[0]) * multi_factorial(prefix)
            return
        dshape = [1] * n
        dshape[axis] = M
        d = denom.reshape(dshape)
        g = values
        sl = [slice(None)] * n
        sl[axis] = 0
        for a in range(budget):
            coeff_fn = np.broadcast_to(np.take(g, [0], axis=axis), grid.shape).copy()
            expand(coeff_fn, axis + 1, prefix + (a,), budget - a)
            g0 = np.take(g, [0], axis=axis)
            with np.errstate(divide="ignore", invalid="ignore"):
                nxt = (g - g0) / d
            deriv = _axis_spectral_derivative(g, axis, M)
            nxt[tuple(sl)] = np.take(deriv, 0, axis=axis)
            g = nxt
        remainders[prefix + (budget,) + (0,) * (n - axis - 1)] = g.copy()

    expand(h.values.reshape(grid.shape).astype(complex), 0, (), n_order)
    return PeriodicTaylor(grid=grid, order=n_order, coefficients=coefficients,
                          remainders=remainders)
