"""Norm, trace, Schatten, boundedness, and compactness diagnostics.

Everything here ties operator-level quantities to computable expressions in
the symbol on the cyclic model.  Dense spectral computations (SVD, eigen,
power iteration) are gated by the dense size cap; probe-based operator-norm
estimates are one-sided lower bounds with explicit seeds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainMismatchError
from .grids import DEFAULT_DENSE_CAP, LatticeBox, LatticeSequence
from .quantize import apply, kernel, matrix
from .report import DiagnosticsReport
from .symbols import SampledSymbol, SymbolDefinition, sample


@dataclass(frozen=True)
class WeightedNormParams:
    """Weight exponent s and integrability exponent p for weighted norms."""

    s: float
    p: float = 2.0

    def __post_init__(self):
        if self.p < 1:
            raise DomainMismatchError(f"integrability exponent must be >= 1, got {self.p}")


def weighted_norm(f: LatticeSequence, params: WeightedNormParams) -> float:
    """( sum_k (1+|k|)^{s p} |f(k)|^p )^{1/p}."""
    w = (1.0 + f.box.norms) ** params.s
    return float(np.sum((w * np.abs(f.values)) ** params.p) ** (1.0 / params.p))


def lp_norm(f: LatticeSequence, p: float) -> float:
    if p < 1:
        raise DomainMismatchError(f"p must be >= 1, got {p}")
    return float(np.sum(np.abs(f.values) ** p) ** (1.0 / p))


def hs_norm(sym: SampledSymbol) -> float:
    """Quadrature L^2 norm of the symbol over box x grid; coincides with the
    Frobenius norm of the dense operator matrix."""
    return float(np.sqrt(np.sum(np.abs(sym.samples) ** 2) * sym.grid.weight))


def trace(sym: SampledSymbol) -> complex:
    """sum_k (1/M^n) sum_j sigma(k, x_j): the matrix trace, and (within dense
    eigensolver accuracy) the eigenvalue sum."""
    return complex(np.sum(sym.samples) * sym.grid.weight)


def _row_lq_norms(sym: SampledSymbol, q: float) -> np.ndarray:
    return (np.sum(np.abs(sym.samples) ** q, axis=1) * sym.grid.weight) ** (1.0 / q)


def schatten_report(sym: SampledSymbol, p: float,
                    dense_cap: int = DEFAULT_DENSE_CAP) -> DiagnosticsReport:
    """Singular-value quasi-norm S_p of the dense matrix against the
    symbol-side bound B_p:

    * p <= 2:  B_p = ( sum_k ||sigma(k,.)||_{L^2}^p )^{1/p},
    * p >= 2:  B_p = ( sum_k ||sigma(k,.)||_{L^{p'}}^{p'} )^{1/p'}, 1/p + 1/p' = 1.

    At p = 2 the two sides agree to roundoff.
    """
    if p <= 0:
        raise DomainMismatchError(f"Schatten exponent must be positive, got {p}")
    mat = matrix(sym, dense_cap).values
    singular = np.linalg.svd(mat, compute_uv=False)
    s_p = float(np.sum(singular**p) ** (1.0 / p))
    if p <= 2:
        rows = _row_lq_norms(sym, 2.0)
        bound = float(np.sum(rows**p) ** (1.0 / p))
    else:
        q = p / (p - 1.0)
        rows = _row_lq_norms(sym, q)
        bound = float(np.sum(rows**q) ** (1.0 / q))
    rep = DiagnosticsReport(f"schatten_p={p:g}")
    rep.add_value("schatten_quasi_norm", s_p)
    rep.add_value("symbol_side_bound", bound)
    scale = max(1.0, bound)
    rep.add_flag("schatten_le_bound", s_p <= bound + 1e-10 * scale,
                 f"S_p={s_p:.12g}, B_p={bound:.12g}")
    if p == 2:
        rep.add_flag("hs_equality", abs(s_p - bound) <= 1e-10 * scale,
                     f"|S_2 - B_2| = {abs(s_p - bound):.3e}")
    return rep


def kernel_decay_fit(sym: SampledSymbol, n_t: int,
                     dense_cap: int = DEFAULT_DENSE_CAP) -> DiagnosticsReport:
    """Witnessed constant in the kernel decay bound

        |K(k, m)| <= C (1+|k|)^{mu} (1+|k-m|)^{-2 n_t},

    over pairs with cyclic distance |k-m| <= N.  The declared order mu is
    taken from the symbol's metadata (0 when absent); stability of the
    constant under box refinement is the associated property, checked by
    callers across sizes.
    """
    if n_t > 3 or n_t < 0:
        raise DomainMismatchError(f"decay exponent index must be in [0, 3], got {n_t}")
    if sym.box.N < 8:
        raise DomainMismatchError(f"kernel decay fit needs N >= 8, got {sym.box.N}")
    box = sym.box
    mu = sym.params.mu if sym.params is not None else 0.0
    kmat = np.abs(kernel(sym).summation_matrix(dense_cap))
    diff = box.wrap(box.points[:, None, :] - box.points[None, :, :])
    dist = np.sqrt((diff.astype(float) ** 2).sum(axis=-1))
    weights = ((1.0 + box.norms) ** (-mu))[:, None] * (1.0 + dist) ** (2 * n_t)
    masked = np.where(dist <= box.N, kmat * weights, 0.0)
    i, j = np.unravel_index(int(np.argmax(masked)), masked.shape)
    rep = DiagnosticsReport(f"kernel_decay_nt={n_t}")
    rep.add_value("constant", float(masked[i, j]))
    rep.add_value("mu_declared", mu)
    rep.add_value("witness_k", [int(v) for v in box.points[i]])
    rep.add_value("witness_m", [int(v) for v in box.points[j]])
    return rep


def _probe_sequences(box: LatticeBox, n_random: int, seed: int) -> list[LatticeSequence]:
    rng = np.random.default_rng(seed)
    probes = []
    sites = range(box.size) if box.size <= 128 else rng.choice(box.size, 128, replace=False)
    for i in sites:
        v = np.zeros(box.size, dtype=complex)
        v[i] = 1.0
        probes.append(LatticeSequence(box, v))
    for _ in range(n_random):
        v = rng.standard_normal(box.size) + 1j * rng.standard_normal(box.size)
        probes.append(LatticeSequence(box, v))
        probes.append(LatticeSequence(box, np.sign(rng.standard_normal(box.size)) + 0j))
    return probes


def lp_bound_report(sym: SampledSymbol, p: float, n_random: int = 20,
                    seed: int = 0) -> DiagnosticsReport:
    """Convolution-majorant bound for the lp operator norm.

    omega(m) = sup_k |kappa(k, m)| majorizes the summation kernel along its
    difference variable, so ||Op(sigma)||_{lp->lp} <= ||omega||_{l1}.  The
    empirical side is a lower estimate from coordinate and random probes;
    the flag asserts only the one-sided comparison.
    """
    if p < 1:
        raise DomainMismatchError(f"p must be >= 1, got {p}")
    omega = np.abs(sym.kappa()).max(axis=0)
    bound = float(omega.sum())
    best = 0.0
    best_tag = "none"
    for idx, f in enumerate(_probe_sequences(sym.box, n_random, seed)):
        denom = lp_norm(f, p)
        if denom == 0.0:
            continue
        ratio = lp_norm(apply(sym, f), p) / denom
        if ratio > best:
            best, best_tag = ratio, f"probe {idx}"
    rep = DiagnosticsReport(f"lp_bound_p={p:g}")
    rep.add_value("omega_l1", bound)
    rep.add_value("empirical_norm", best)
    rep.add_flag("empirical_le_bound", best <= bound + 1e-10 * max(1.0, bound),
                 f"estimate {best:.12g} from {best_tag}, bound {bound:.12g}")
    return rep


def compactness_tail(sym: SampledSymbol, cut: float, p: float = 2.0) -> float:
    """Row-sum tail estimate sup_{|k| > cut} sum_l |kappa(k, l)| bounding the
    norm of the operator restricted to high lattice frequencies.

    The bound is uniform in p (Young's inequality), so p enters the
    signature only to name the space being controlled.
    """
    if not cut < sym.box.N:
        raise DomainMismatchError(f"cut {cut} must be smaller than N={sym.box.N}")
    mask = sym.box.norms > cut
    if not mask.any():
        return 0.0
    row_l1 = np.abs(sym.kappa()).sum(axis=1)
    return float(row_l1[mask].max())


def operator_norm_power(mat: np.ndarray, tol: float = 1e-8, max_iter: int = 10000,
                        seed: int = 0) -> float:
    """Spectral norm by power iteration on A^H A, to relative tolerance tol."""
    size = mat.shape[0]
    gram = np.conj(mat).T @ mat
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    nv = np.linalg.norm(v)
    if nv == 0.0 or not np.any(mat):
        return 0.0
    v /= nv
    lam_old = 0.0
    for _ in range(max_iter):
        w = gram @ v
        lam = float(np.real(np.vdot(v, w)))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(lam - lam_old) <= tol * max(abs(lam), 1.0):
            break
        lam_old = lam
    return float(np.sqrt(max(lam, 0.0)))


def mikhlin_uniformity(definition: SymbolDefinition, n: int, box_sizes,
                       tol: float = 1e-8, dense_cap: int = DEFAULT_DENSE_CAP,
                       seed: int = 0) -> DiagnosticsReport:
    """Dense l2 operator norms of one symbol definition across box sizes.

    For symbols with k-uniformly bounded x-derivatives the sequence is
    expected to stay bounded with no decay assumptions; the report carries
    the sequence, callers decide what bound to hold it to.
    """
    norms = []
    rep = DiagnosticsReport("mikhlin_uniformity")
    for N in box_sizes:
        box = LatticeBox(n, int(N))
        sym = sample(definition, box, box.matched_grid())
        value = operator_norm_power(matrix(sym, dense_cap).values, tol=tol, seed=seed)
        norms.append(value)
        rep.add_value(f"norm_N={N}", value)
    rep.add_value("norms", norms)
    return rep
