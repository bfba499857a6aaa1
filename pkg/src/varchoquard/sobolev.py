"""Variable-order fractional Sobolev modular, norms and the discrete nonlocal
operator.

Every pairwise sum skips the diagonal ``i == j``: the grid spacing is the
excluded radius of the principal value. Kernel logarithms are precomputed
once per ``(grid, bundle)`` and cached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import ModularOverflowError
from .grid import GridFunction, map_rows
from .nakano import DEFAULT_TOL, LOG_MAX, pow_abs, unit_level

__all__ = [
    "PairData",
    "pair_data",
    "SobolevModular",
    "gagliardo_modular",
    "sobolev_norm",
    "seminorm",
    "flap_apply",
    "flap_pairing",
]


@dataclass(frozen=True, eq=False)
class PairData:
    """Exponent and kernel arrays of one bundle sampled on one grid.

    ``log_kernel[i, j] = log w_j - (N + s_ij p_ij) log|x_i - x_j|`` and
    ``log_riesz[i, j] = log w_j - (alpha_i + alpha_j)/2 log|x_i - x_j|``;
    both are ``-inf`` on the diagonal so the principal-value pairs vanish.
    ``riesz`` is ``exp(log_riesz)``; it does not depend on the function.
    """

    x: np.ndarray
    w: np.ndarray
    log_w: np.ndarray
    P: np.ndarray
    p_diag: np.ndarray
    log_kernel: np.ndarray
    log_riesz: np.ndarray
    riesz: np.ndarray
    r: np.ndarray
    N: int

    @property
    def M(self):
        return self.x.size


@lru_cache(maxsize=4)
def pair_data(grid, bundle):
    x = np.asarray(grid.nodes, dtype=float)
    w = np.asarray(grid.weights, dtype=float)
    X, Y = x[:, None], x[None, :]
    P = bundle.p(X, Y)
    S = bundle.s(X, Y)
    D = np.abs(X - Y)
    np.fill_diagonal(D, 1.0)
    logD = np.log(D)
    log_w = np.log(w)
    log_kernel = log_w[None, :] - (bundle.N + S * P) * logD
    np.fill_diagonal(log_kernel, -np.inf)
    a = bundle.alpha(x)
    log_riesz = log_w[None, :] - 0.5 * (a[:, None] + a[None, :]) * logD
    np.fill_diagonal(log_riesz, -np.inf)
    out = PairData(
        x=x,
        w=w,
        log_w=log_w,
        P=P,
        p_diag=np.diag(P).copy(),
        log_kernel=log_kernel,
        log_riesz=log_riesz,
        riesz=np.exp(log_riesz),
        r=bundle.r(x),
        N=bundle.N,
    )
    for arr in (x, w, log_w, P, out.p_diag, log_kernel, log_riesz, out.riesz, out.r):
        arr.flags.writeable = False
    return out


def _check_exponent(e, rows, what):
    k = int(np.argmax(e))
    if e.flat[k] > LOG_MAX:
        i, j = np.unravel_index(k, e.shape)
        raise ModularOverflowError(
            f"{what} overflows at pair ({rows.start + i}, {j})", index=(rows.start + i, j)
        )


def _gagliardo_rows(pd, u, log_lam=0.0, saturate=False, divide_by_p=False):
    """Per-row sums ``sum_j w_j |u_i - u_j|^p_ij / (lam^p_ij |x_i - x_j|^(N + s p))``."""

    def rows(sl):
        diff = np.abs(u[sl, None] - u[None, :])
        P = pd.P[sl]
        with np.errstate(divide="ignore"):
            e = P * (np.log(diff) - log_lam) + pd.log_kernel[sl]
        if not saturate:
            _check_exponent(e, sl, "Gagliardo integrand")
        with np.errstate(over="ignore"):
            t = np.exp(e)
        if divide_by_p:
            t = t / P
        return t.sum(axis=1)

    return map_rows(rows, pd.M)


class SobolevModular(NamedTuple):
    gagliardo_term: float
    lp_term: float
    total: float


def gagliardo_modular(u, bundle, lam=1.0):
    """Discrete Sobolev modular of ``u / lam``: principal-value double sum plus
    the ``|u|^p(x,x)`` integral."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    pd = pair_data(u.grid, bundle)
    log_lam = math.log(lam)
    g = float(np.dot(pd.w, _gagliardo_rows(pd, u.values, log_lam)))
    lp = float(np.dot(pd.w, pow_abs(u.values, pd.p_diag, log_lam)))
    return SobolevModular(g, lp, g + lp)


def _scaled_modular(pd, v, with_lp=True):
    """Modular of ``v / lam`` as a function of ``log(lam)``, with the
    ``lam``-independent log factors computed once."""
    with np.errstate(divide="ignore"):
        E0 = pd.P * np.log(np.abs(v[:, None] - v[None, :])) + pd.log_kernel
        lu = np.log(np.abs(v))
    P = pd.P

    def modular(log_lam):
        def rows(sl):
            with np.errstate(over="ignore"):
                return np.exp(E0[sl] - P[sl] * log_lam).sum(axis=1)

        total = np.dot(pd.w, map_rows(rows, pd.M))
        if with_lp:
            with np.errstate(over="ignore"):
                total += np.dot(pd.w, np.exp(pd.p_diag * (lu - log_lam)))
        return float(total)

    return modular


def _unit_level_bracketed(modular, p_lo, p_hi, tol):
    # rho(u/lam) = 1 happens between rho(u)^(1/p+) and rho(u)^(1/p-)
    m1 = modular(0.0)
    if not (np.isfinite(m1) and m1 > 0):
        return unit_level(modular, tol)
    t1, t2 = sorted((math.log(m1) / p_hi, math.log(m1) / p_lo))
    pad = 1e-6 + 1e-9 * abs(t2)
    return unit_level(modular, tol, lo=math.exp(t1 - pad), hi=math.exp(t2 + pad))


def sobolev_norm(u, bundle, tol=DEFAULT_TOL):
    """Luxemburg norm associated with the full Sobolev modular (bisection in ``log lam``)."""
    if u.is_zero():
        return 0.0
    pd = pair_data(u.grid, bundle)
    modular = _scaled_modular(pd, u.values)
    return _unit_level_bracketed(modular, float(pd.P.min()), float(pd.P.max()), tol)


def seminorm(u, bundle, tol=DEFAULT_TOL):
    """Luxemburg-type seminorm from the double-sum part alone; 0 for constants."""
    if np.all(u.values == u.values[0]):
        return 0.0
    pd = pair_data(u.grid, bundle)
    modular = _scaled_modular(pd, u.values, with_lp=False)
    P_off = pd.P[~np.eye(pd.M, dtype=bool)]
    return _unit_level_bracketed(modular, float(P_off.min()), float(P_off.max()), tol)


def _flap_values(pd, u):
    def rows(sl):
        d = u[sl, None] - u[None, :]
        with np.errstate(divide="ignore"):
            e = (pd.P[sl] - 1) * np.log(np.abs(d)) + pd.log_kernel[sl]
        _check_exponent(e, sl, "operator integrand")
        return (np.sign(d) * np.exp(e)).sum(axis=1)

    return map_rows(rows, pd.M)


def flap_apply(u, bundle):
    """Discrete variable-order fractional p-Laplacian at every node.

    Node ``i`` gets ``sum_{j != i} w_j |u_i-u_j|^(p-2) (u_i-u_j) / |x_i-x_j|^(N+s p)``;
    the factor is taken as 0 when ``u_i == u_j``.
    """
    pd = pair_data(u.grid, bundle)
    return GridFunction(u.grid, _flap_values(pd, u.values), False)


def flap_pairing(u, bundle):
    """Weighted pairing ``sum_i w_i (flap u)_i u_i``; half the double-sum modular."""
    pd = pair_data(u.grid, bundle)
    return float(np.dot(pd.w, _flap_values(pd, u.values) * u.values))
