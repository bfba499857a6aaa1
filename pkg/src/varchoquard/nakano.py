"""Variable-exponent Lebesgue spaces on a grid: modulars, Luxemburg norms and
the norm/modular inequalities that connect them."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import BracketError, InvalidExponentError, ModularOverflowError
from .exponents import ScalarExponentField
from .grid import GridFunction, integrate

__all__ = [
    "ModularValue",
    "Clause",
    "NormModularReport",
    "PowerReport",
    "pow_abs",
    "unit_level",
    "modular_lp",
    "luxemburg_norm",
    "conjugate_exponent",
    "holder_constant",
    "check_norm_modular",
    "holder_pairing",
    "power_norm_relation",
]

LOG_MAX = 700.0
DEFAULT_TOL = 1e-10
MAX_STEPS = 200


def pow_abs(a, p, log_scale=0.0, saturate=False):
    """``(|a| / exp(log_scale)) ** p`` evaluated as ``exp(p (log|a| - log_scale))``.

    Entries with ``a == 0`` give exactly 0 (``p > 0``). An exponent above
    ``LOG_MAX`` raises ModularOverflowError carrying the flat index of the
    offending entry, unless ``saturate`` is set, in which case it becomes inf.
    """
    a, p = np.broadcast_arrays(np.abs(np.asarray(a, dtype=float)), np.asarray(p, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        e = np.where(p == 0, 0.0, p * (np.log(a) - log_scale))
    if e.size and not saturate:
        k = int(np.argmax(e))
        if e.flat[k] > LOG_MAX:
            raise ModularOverflowError(
                f"|u|^p overflows at index {np.unravel_index(k, e.shape)}: "
                f"log value {e.flat[k]:.4g}",
                index=np.unravel_index(k, e.shape),
            )
    with np.errstate(over="ignore"):
        return np.exp(e)


class ModularValue(NamedTuple):
    value: float
    exponent_inf: float
    exponent_sup: float


def _exponent_values(p, grid):
    v = p(grid.nodes) if isinstance(p, ScalarExponentField) or callable(p) else np.asarray(p)
    return np.asarray(v, dtype=float) * np.ones(grid.M)


def _check_p(pv, what="p"):
    if pv.min() <= 1:
        raise InvalidExponentError(f"need {what}- > 1, sampled {what}- = {pv.min()}")


def modular_lp(u, p, lam=1.0):
    """Trapezoid value of ``int |u/lam|^p(x) dx``."""
    pv = _exponent_values(p, u.grid)
    _check_p(pv)
    val = integrate(pow_abs(u.values, pv, math.log(lam)), u.grid)
    return ModularValue(val, float(pv.min()), float(pv.max()))


def unit_level(modular, tol=DEFAULT_TOL, max_steps=MAX_STEPS, lo=1e-12, hi=1e12, expansions=8):
    """Find ``lam > 0`` with ``modular(log(lam)) == 1`` by bisection.

    ``modular`` receives ``log(lam)`` and must be continuous and strictly
    decreasing in it. The bracket starts at ``[lo, hi]`` and is widened by
    factors of ``hi/lo`` until it straddles 1. Bisection runs in ``log(lam)``;
    it stops once the modular residual is within ``tol`` or the bracket has
    collapsed to floating-point resolution, and never takes more than
    ``max_steps`` steps.
    """
    a, b = math.log(lo), math.log(hi)
    width = max(b - a, 1.0)
    for _ in range(expansions):
        if modular(a) >= 1:
            break
        a -= width
    else:
        raise BracketError("modular stays below 1 at every lower bracket end")
    for _ in range(expansions):
        if modular(b) <= 1:
            break
        b += width
    else:
        raise BracketError("modular stays above 1 at every upper bracket end")
    mid = 0.5 * (a + b)
    for _ in range(max_steps):
        mid = 0.5 * (a + b)
        m = modular(mid)
        if abs(m - 1) <= tol:
            break
        if m > 1:
            a = mid
        else:
            b = mid
        if b - a <= 4e-16 * max(1.0, abs(mid)):
            mid = 0.5 * (a + b)
            break
    return math.exp(mid)


def luxemburg_norm(u, p, tol=DEFAULT_TOL):
    """Luxemburg norm ``inf{lam > 0 : int |u/lam|^p <= 1}``; 0 for ``u == 0``."""
    pv = _exponent_values(p, u.grid)
    _check_p(pv)
    if u.is_zero():
        return 0.0
    w = np.asarray(u.grid.weights)
    a = np.abs(u.values)

    def modular(log_lam):
        return float(np.dot(w, pow_abs(a, pv, log_lam, saturate=True)))

    return unit_level(modular, tol)


def conjugate_exponent(p, grid=None):
    """Hölder conjugate ``x -> p(x)/(p(x)-1)``; checked on ``grid`` if given."""
    if grid is not None:
        _check_p(p(grid.nodes))

    def conj(x):
        v = p(x)
        return v / (v - 1)

    return ScalarExponentField(conj, name=f"{getattr(p, 'name', 'p')}'")


def holder_constant(p, grid):
    """The sharper Hölder constant ``1/p- + 1/(p')-`` on ``grid``."""
    pv = p(grid.nodes)
    _check_p(pv)
    pc = pv / (pv - 1)
    return float(1 / pv.min() + 1 / pc.min())


class Clause(NamedTuple):
    name: str
    applies: bool
    slack: float
    ok: bool


class NormModularReport(NamedTuple):
    norm: float
    modular: float
    p_inf: float
    p_sup: float
    clauses: tuple

    @property
    def ok(self):
        return all(c.ok for c in self.clauses)


def _between(lo, mid, hi, tol):
    scale = max(1.0, abs(lo), abs(hi))
    slack = min(mid - lo, hi - mid) / scale
    return slack, slack >= -tol


def check_norm_modular(u, p, tol=1e-9):
    """Evaluate the three norm/modular relations for a nonzero ``u``.

    (i) ``||u|| - 1`` and ``rho(u) - 1`` share their sign;
    (ii) ``||u|| >= 1`` implies ``||u||^p- <= rho(u) <= ||u||^p+``;
    (iii) ``||u|| <= 1`` implies ``||u||^p+ <= rho(u) <= ||u||^p-``.
    Slacks are relative; a clause holds when its slack is at least ``-tol``.
    """
    if u.is_zero():
        raise ValueError("u must not vanish identically")
    rho, p_lo, p_hi = modular_lp(u, p)
    nrm = luxemburg_norm(u, p)
    a, b = nrm - 1, rho - 1
    near = abs(a) <= tol or abs(b) <= tol
    s1 = 0.0 if near else math.copysign(min(abs(a), abs(b)), a * b)
    clauses = [Clause("i", True, s1, near or a * b > 0)]
    if nrm >= 1 - tol:
        s, ok = _between(nrm**p_lo, rho, nrm**p_hi, tol)
        clauses.append(Clause("ii", True, s, ok))
    else:
        clauses.append(Clause("ii", False, math.inf, True))
    if nrm <= 1 + tol:
        s, ok = _between(nrm**p_hi, rho, nrm**p_lo, tol)
        clauses.append(Clause("iii", True, s, ok))
    else:
        clauses.append(Clause("iii", False, math.inf, True))
    return NormModularReport(nrm, rho, p_lo, p_hi, tuple(clauses))


def holder_pairing(u, v, p, sharp=False):
    """``(|int u v|, C ||u||_p ||v||_p')`` with ``C = 2`` or the sharp constant."""
    grid = u.grid
    lhs = abs(integrate(u.values * v.values, grid))
    pc = conjugate_exponent(p, grid)
    c = holder_constant(p, grid) if sharp else 2.0
    rhs = c * luxemburg_norm(u, p) * luxemburg_norm(v, pc)
    return lhs, rhs


class PowerReport(NamedTuple):
    norm_pq: float
    norm_power: float
    q_inf: float
    q_sup: float
    clause: Clause


def power_norm_relation(u, p, q, tol=1e-9):
    """Compare ``|| |u|^q ||_p`` with powers of ``||u||_{pq}``.

    Clause 1 (``||u||_pq >= 1``): ``||u||_pq^q- <= || |u|^q ||_p <= ||u||_pq^q+``;
    clause 2 (``||u||_pq <= 1``): the same with ``q+`` and ``q-`` swapped.
    """
    grid = u.grid
    pv, qv = p(grid.nodes), q(grid.nodes)
    _check_p(pv * qv, "pq")
    pq = ScalarExponentField(lambda x: p(x) * q(x), name="pq")
    n_pq = luxemburg_norm(u, pq)
    uq = GridFunction(grid, pow_abs(u.values, qv), u.zero_boundary)
    n_pow = luxemburg_norm(uq, p)
    q_lo, q_hi = float(qv.min()), float(qv.max())
    if n_pq >= 1:
        s, ok = _between(n_pq**q_lo, n_pow, n_pq**q_hi, tol)
        clause = Clause("1", True, s, ok)
    else:
        s, ok = _between(n_pq**q_hi, n_pow, n_pq**q_lo, tol)
        clause = Clause("2", True, s, ok)
    return PowerReport(n_pq, n_pow, q_lo, q_hi, clause)
