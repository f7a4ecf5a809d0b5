"""Symbolic calculus: composition, adjoint, and transpose expansions, finite
partial sums of symbol expansions, and the parametrix recursion for elliptic
symbols.

All expansions are finite truncations evaluated on the cyclic model; claims
of asymptotic accuracy are probed elsewhere as decay of residual orders,
never as limits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainMismatchError, NotEllipticError, SingularSymbolError
from .symbols import (SampledSymbol, SymbolClassParams, ellipticity_check,
                      falling_derivative, forward_difference, multi_factorial,
                      multi_indices_below, multi_indices_of_degree, x_reflect,
                      ORDER_CAP)

#: Expansion orders are capped by the multi-index machinery.
MAX_EXPANSION_ORDER = ORDER_CAP


def check_expansion_order(order: int) -> int:
    order = int(order)
    if not 1 <= order <= MAX_EXPANSION_ORDER:
        raise DomainMismatchError(
            f"expansion order must lie in [1, {MAX_EXPANSION_ORDER}], got {order}"
        )
    return order


def _require_same_domain(a: SampledSymbol, b: SampledSymbol) -> None:
    if a.box != b.box or a.grid != b.grid:
        raise DomainMismatchError("symbols live on different boxes/grids")


@dataclass
class SymbolExpansion:
    """Finitely many symbol terms with strictly decreasing declared orders."""

    terms: list[SampledSymbol]
    orders: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.terms:
            raise DomainMismatchError("expansion needs at least one term")
        if not self.orders:
            self.orders = [-float(j) for j in range(len(self.terms))]
        if len(self.orders) != len(self.terms):
            raise DomainMismatchError("one declared order per term is required")
        for a, b in zip(self.orders, self.orders[1:]):
            if not b < a:
                raise DomainMismatchError(f"orders must strictly decrease, got {self.orders}")
        for t in self.terms[1:]:
            _require_same_domain(self.terms[0], t)

    def __len__(self) -> int:
        return len(self.terms)


def partial_sum(expansion: SymbolExpansion, j: int) -> SampledSymbol:
    """Pointwise sum of the first j terms."""
    if not 1 <= j <= len(expansion.terms):
        raise DomainMismatchError(
            f"partial sum index {j} outside [1, {len(expansion.terms)}]"
        )
    head = expansion.terms[0]
    acc = head.samples.copy()
    for t in expansion.terms[1:j]:
        acc = acc + t.samples
    return head.with_samples(acc, params=head.params)


def compose(sigma: SampledSymbol, tau: SampledSymbol, order: int) -> SampledSymbol:
    """Truncated composition symbol

        sum_{|alpha| < order} (1/alpha!) D^(alpha)_x sigma . Delta^alpha_k tau

    (derivatives fall on the left factor, differences on the right one).
    Exact at finite order when sigma has only nonnegative x-frequencies of
    bounded degree, since D^(alpha) then annihilates all higher terms.
    """
    _require_same_domain(sigma, tau)
    order = check_expansion_order(order)
    acc = np.zeros_like(sigma.samples)
    for alpha in multi_indices_below(sigma.box.n, order):
        left = falling_derivative(sigma, alpha).samples
        right = forward_difference(tau, alpha).samples
        acc += left * right / multi_factorial(alpha)
    params = None
    if sigma.params is not None and tau.params is not None:
        params = SymbolClassParams(
            sigma.params.mu + tau.params.mu,
            min(sigma.params.rho, tau.params.rho),
            max(sigma.params.delta, tau.params.delta),
        )
    return SampledSymbol(sigma.box, sigma.grid, acc, params=params)


def adjoint(sigma: SampledSymbol, order: int) -> SampledSymbol:
    """Truncated adjoint symbol  sum (1/alpha!) Delta^alpha_k D^(alpha)_x conj(sigma)."""
    order = check_expansion_order(order)
    conj = sigma.with_samples(np.conj(sigma.samples), params=sigma.params)
    acc = np.zeros_like(sigma.samples)
    for alpha in multi_indices_below(sigma.box.n, order):
        term = forward_difference(falling_derivative(conj, alpha), alpha)
        acc += term.samples / multi_factorial(alpha)
    return SampledSymbol(sigma.box, sigma.grid, acc, params=sigma.params)


def transpose(sigma: SampledSymbol, order: int) -> SampledSymbol:
    """Truncated transpose symbol  sum (1/alpha!) Delta^alpha_k D^(alpha)_x sigma(k, -x)."""
    order = check_expansion_order(order)
    reflected = x_reflect(sigma)
    acc = np.zeros_like(sigma.samples)
    for alpha in multi_indices_below(sigma.box.n, order):
        term = forward_difference(falling_derivative(reflected, alpha), alpha)
        acc += term.samples / multi_factorial(alpha)
    return SampledSymbol(sigma.box, sigma.grid, acc, params=sigma.params)


def parametrix(a_terms: SymbolExpansion, mu: float, order: int,
               m_cut: float | None = None, threshold: float = 1e-10) -> SymbolExpansion:
    """Recursive approximate-inverse expansion for an elliptic symbol.

    With A given as terms A_0, A_1, ... (term l declared of order mu - (rho-delta) l,
    missing terms read as zero), the inverse expansion starts from
    B_0 = 1/A_0 and continues, for 1 <= m < order, with

        B_m = (-1/A_0) sum_{j<m} sum_{l<m} sum_{|gamma| = m-j-l}
                  (1/gamma!) [D^(gamma)_x B_j] Delta^gamma_k A_l,

    skipping (j, l) pairs that would need |gamma| < 0.  Requires the leading
    term to pass the ellipticity check at order mu and to be nonvanishing on
    the whole box (the reciprocal is taken pointwise).
    """
    order = check_expansion_order(order)
    leading = a_terms.terms[0]
    ell = ellipticity_check(leading, mu, m_cut=m_cut, threshold=threshold)
    if not ell.ok:
        raise NotEllipticError(
            f"leading symbol is not elliptic at order {mu}: constant {ell.constant:.3e} "
            f"at k={ell.witness_k}, x={ell.witness_x}",
            witness=(ell.witness_k, ell.witness_x),
            constant=ell.constant,
        )
    flat = int(np.argmin(np.abs(leading.samples)))
    i, j = divmod(flat, leading.grid.size)
    smallest = abs(leading.samples[i, j])
    if smallest <= threshold:
        raise SingularSymbolError(
            f"leading symbol vanishes on the box at k={tuple(leading.box.points[i])}, "
            f"x={tuple(leading.grid.nodes[j])}",
            witness=(tuple(int(v) for v in leading.box.points[i]),
                     tuple(float(v) for v in leading.grid.nodes[j])),
        )

    params = leading.params or SymbolClassParams(mu)
    params.validate_for_calculus()
    step = params.rho - params.delta
    inv_leading = 1.0 / leading.samples
    b_terms = [leading.with_samples(inv_leading, params=SymbolClassParams(
        -mu, params.rho, params.delta))]

    deriv_cache: dict[tuple[int, tuple[int, ...]], np.ndarray] = {}
    diff_cache: dict[tuple[int, tuple[int, ...]], np.ndarray] = {}

    def d_b(jdx: int, gamma) -> np.ndarray:
        key = (jdx, gamma)
        if key not in deriv_cache:
            deriv_cache[key] = falling_derivative(b_terms[jdx], gamma).samples
        return deriv_cache[key]

    def d_a(ldx: int, gamma) -> np.ndarray:
        key = (ldx, gamma)
        if key not in diff_cache:
            diff_cache[key] = forward_difference(a_terms.terms[ldx], gamma).samples
        return diff_cache[key]

    n = leading.box.n
    for m in range(1, order):
        acc = np.zeros_like(leading.samples)
        for jdx in range(m):
            for ldx in range(m):
                g = m - jdx - ldx
                if g < 0 or ldx >= len(a_terms.terms):
                    continue
                for gamma in multi_indices_of_degree(n, g):
                    acc += d_b(jdx, gamma) * d_a(ldx, gamma) / multi_factorial(gamma)
        b_terms.append(leading.with_samples(
            -inv_leading * acc,
            params=SymbolClassParams(-mu - step * m, params.rho, params.delta)))

    orders = [-mu - step * m for m in range(order)]
    return SymbolExpansion(terms=b_terms, orders=orders)
