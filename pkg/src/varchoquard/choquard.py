"""Choquard interaction energy, the full energy functional and its exact
discrete gradient and Hessian.

The gradient is the derivative of the discrete energy with respect to the
nodal values, not a discretization of the continuum Euler-Lagrange operator.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .exponents import sigma_alpha
from .grid import GridFunction
from .nakano import luxemburg_norm, pow_abs
from .sobolev import _flap_values, _gagliardo_rows, pair_data

__all__ = [
    "EnergyReport",
    "choquard_K",
    "choquard_K_derivative",
    "choquard_K_derivative_displayed",
    "hls_bound_check",
    "energy_I",
    "energy_value",
    "energy_gradient",
    "energy_hessian",
    "convex_hessian",
    "residual",
]


def _signed_pow(u, q):
    """``sign(u) |u|^q`` (0 at u == 0)."""
    return np.sign(u) * pow_abs(u, q)


def _choquard_parts(pd, u):
    a = pow_abs(u, pd.r)
    Ra = pd.riesz @ a
    return a, Ra


def _K(pd, u):
    a, Ra = _choquard_parts(pd, u)
    return float(np.dot(pd.w, a / (2 * pd.r) * Ra))


def choquard_K(u, bundle):
    """``sum_{i != j} w_i w_j |u_i|^r_i |u_j|^r_j / (2 r_i |x_i - x_j|^((a_i + a_j)/2))``."""
    return _K(pair_data(u.grid, bundle), u.values)


def _K_grad(pd, u):
    a, Ra = _choquard_parts(pd, u)
    c = 1 / (2 * pd.r)
    da = pd.r * _signed_pow(u, pd.r - 1)
    return pd.w * da * (c * Ra + pd.riesz @ (c * a))


def choquard_K_derivative(u, v, bundle):
    """Directional derivative of the discrete ``K`` at ``u`` along ``v``.

    For constant ``r`` this equals
    ``sum w_i w_j |u_i|^r |u_j|^(r-2) u_j v_j / |x_i-x_j|^alpha_ij``; for
    variable ``r`` the ``1/(2 r(x))`` weight in ``K`` adds the factor
    ``(1 + r_j / r_i) / 2`` to that integrand.
    """
    pd = pair_data(u.grid, bundle)
    return float(np.dot(_K_grad(pd, u.values), v.values))


def choquard_K_derivative_displayed(u, v, bundle):
    """The unweighted form ``sum w_i w_j |u_i|^r_i |u_j|^(r_j-2) u_j v_j G_ij``.

    It coincides with :func:`choquard_K_derivative` only when ``r`` is constant.
    """
    pd = pair_data(u.grid, bundle)
    a, Ra = _choquard_parts(pd, u.values)
    b = _signed_pow(u.values, pd.r - 1)
    return float(np.dot(pd.w, b * v.values * Ra))


def hls_bound_check(u, bundle):
    """Return ``(lhs, rhs, ratio)`` for the variable-exponent HLS estimate.

    ``lhs`` is the principal-value double sum of ``|u(x)|^r(x) |u(y)|^r(y)``
    against the Riesz kernel; ``rhs`` is the largest of
    ``||u||_{r sigma-}^{2r+-}`` and ``||u||_{r sigma+}^{2r+-}`` (constant 1).
    """
    if u.is_zero():
        return 0.0, 0.0, 0.0
    grid = u.grid
    pd = pair_data(grid, bundle)
    a, Ra = _choquard_parts(pd, u.values)
    lhs = float(np.dot(pd.w, a * Ra))
    sig = sigma_alpha(bundle.alpha, grid.nodes, bundle.N)
    r_lo, r_hi = float(pd.r.min()), float(pd.r.max())
    powers = []
    for sv in (sig.min(), sig.max()):
        n = luxemburg_norm(u, pd.r * sv)
        powers += [n ** (2 * r_hi), n ** (2 * r_lo)]
    rhs = max(powers)
    return lhs, rhs, lhs / rhs


class EnergyReport(NamedTuple):
    gagliardo_energy: float
    lp_energy: float
    choquard_energy: float
    total: float
    gradient_sup_norm: float

    def to_json(self):
        from .io import dumps

        return dumps(self._asdict())


def _energy_terms(pd, u):
    g = float(np.dot(pd.w, _gagliardo_rows(pd, u, divide_by_p=True)))
    lp = float(np.dot(pd.w, pow_abs(u, pd.p_diag) / pd.p_diag))
    k = _K(pd, u)
    return g, lp, k


def _gradient(pd, u):
    g = 2 * pd.w * _flap_values(pd, u)
    g += pd.w * _signed_pow(u, pd.p_diag - 1)
    g -= _K_grad(pd, u)
    g[0] = g[-1] = 0.0
    return g


def energy_value(u, bundle):
    """``I[u]`` alone (no gradient), for line searches."""
    g, lp, k = _energy_terms(pair_data(u.grid, bundle), u.values)
    return g + lp - k


def energy_I(u, bundle):
    """Energy report: the three terms of ``I[u]``, their combination and the
    sup norm of the discrete gradient."""
    pd = pair_data(u.grid, bundle)
    g, lp, k = _energy_terms(pd, u.values)
    grad = _gradient(pd, u.values)
    return EnergyReport(g, lp, k, g + lp - k, float(np.max(np.abs(grad))))


def energy_gradient(u, bundle):
    """Exact partial derivatives of the discrete ``I`` at interior nodes.

    The two boundary components are set to 0 (the boundary values are not
    free in the zero-boundary space).
    """
    pd = pair_data(u.grid, bundle)
    return GridFunction(u.grid, _gradient(pd, u.values), True)


def residual(u, bundle):
    """Sup norm of :func:`energy_gradient`."""
    return float(np.max(np.abs(_gradient(pair_data(u.grid, bundle), u.values))))


def _convex_part(pd, u, floor):
    d = u[:, None] - u[None, :]
    ad = np.maximum(np.abs(d), floor)
    with np.errstate(divide="ignore"):
        e = (pd.P - 2) * np.log(ad) + pd.log_kernel
    off = 2 * (pd.P - 1) * np.exp(e) * pd.w[:, None]
    H = -off
    H[np.diag_indices_from(H)] = off.sum(axis=1)
    au = np.maximum(np.abs(u), floor)
    H[np.diag_indices_from(H)] += pd.w * (pd.p_diag - 1) * pow_abs(au, pd.p_diag - 2)
    return H


def convex_hessian(u, bundle, floor=1e-12):
    """Hessian of the two convex terms of ``I`` (double sum and ``|u|^p`` term).

    Differences and values below ``floor`` in magnitude are raised to
    ``floor`` so that exponents below 2 stay finite.
    """
    return _convex_part(pair_data(u.grid, bundle), u.values, floor)


def energy_hessian(u, bundle, floor=1e-12):
    """Full Hessian of the discrete ``I`` at ``u`` (all nodes, symmetric)."""
    pd = pair_data(u.grid, bundle)
    v = u.values
    H = _convex_part(pd, v, floor)
    a, Ra = _choquard_parts(pd, v)
    r = pd.r
    c = 1 / (2 * r)
    da = r * _signed_pow(v, r - 1)
    dda = r * (r - 1) * pow_abs(np.maximum(np.abs(v), floor), r - 2)
    W = pd.w[:, None] * pd.riesz
    H -= W * np.outer(da, da) * (c[:, None] + c[None, :])
    H[np.diag_indices_from(H)] -= pd.w * dda * (c * Ra + pd.riesz @ (c * a))
    return H
