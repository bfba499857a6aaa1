"""Concentration sequences, touching-rate exponent builders and the checks
that separate compact from non-compact critical embeddings.

Concentrated profiles are evaluated analytically at the nodes of locally
refined grids (uniform fine nodes on the support, graded nodes around it),
so that no template is ever interpolated.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import EmptyAnnulusError, InvalidExponentError
from .exponents import ScalarExponentField
from .grid import GradedGrid, Grid1D, GridFunction, integrate
from .nakano import pow_abs
from .sobolev import gagliardo_modular, sobolev_norm

__all__ = [
    "bump",
    "ConcentrationFamily",
    "Member",
    "concentration_member",
    "concentration_sequence",
    "refined_grid",
    "ball_modular",
    "q_field_builder",
    "noncompactness_bound",
    "exponent_infima",
    "TailRow",
    "tail_vanishing_probe",
    "AnnulusRow",
    "annulus_rate_check",
    "VerdictRow",
    "CompactnessReport",
    "compactness_verdict",
    "scaling_table",
    "write_table",
]


def bump(t):
    """C^1 plateau: 1 on ``|t| <= 1/2``, 0 on ``|t| >= 1``, cubic ramp between."""
    a = np.abs(np.asarray(t, dtype=float))
    z = np.clip(2 * a - 1, 0.0, 1.0)
    return 1 - z * z * (3 - 2 * z)


@dataclass(frozen=True)
class ConcentrationFamily:
    """Profile ``phi`` (support radius 1, plateau radius 1/2), scales and center."""

    x0: float = 0.0
    scales: tuple = (1, 2, 4, 8, 16, 32)
    profile: Callable = bump

    def __post_init__(self):
        if any(int(n) != n or n < 1 for n in self.scales):
            raise ValueError("scales must be positive integers")


@dataclass(frozen=True)
class Member:
    """A function given by a formula, supported in ``[lo, hi]``."""

    label: str
    func: Callable
    lo: float
    hi: float
    meta: dict = field(default_factory=dict, compare=False)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.lo) & (x <= self.hi), self.func(x), 0.0)


def _prefactor_exponent(bundle, x):
    x = np.asarray(x, dtype=float)
    p, s = bundle.p(x, x), bundle.s(x, x)
    return (bundle.N - p * s) / p


def concentration_member(family, n, bundle, domain=(-1.0, 1.0)):
    """``phi_n(x) = n^((N - p(x) s(x))/p(x)) phi(n (x - x0))`` as a :class:`Member`.

    ``p(x) = p(x,x)`` and ``s(x) = s(x,x)``. The scaled support
    ``[x0 - 1/n, x0 + 1/n]`` must lie in the closed domain.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    x0 = family.x0
    lo, hi = x0 - 1.0 / n, x0 + 1.0 / n
    a, b = domain
    tol = 1e-12 * max(1.0, abs(a), abs(b))
    if lo < a - tol or hi > b + tol:
        raise ValueError(f"support [{lo}, {hi}] of phi_{n} leaves the domain [{a}, {b}]")

    def f(x):
        return np.power(float(n), _prefactor_exponent(bundle, x)) * family.profile(n * (x - x0))

    return Member(f"phi_{n}", f, max(lo, a), min(hi, b), {"n": int(n)})


def concentration_sequence(family, n, bundle, grid):
    """Nodal samples of ``phi_n`` on ``grid`` (analytic evaluation)."""
    m = concentration_member(family, n, bundle, (grid.a, grid.b))
    v = m(grid.nodes)
    zb = v[0] == 0.0 and v[-1] == 0.0
    return GridFunction(grid, v, bool(zb))


def refined_grid(grid, lo, hi, fine=400, growth=1.1):
    """``grid`` refined around ``[lo, hi]``.

    ``fine + 1`` uniform nodes cover ``[lo, hi]``; outside, spacings grow
    geometrically by ``growth`` from the fine spacing until they reach the
    spacing of ``grid``, whose own nodes are used beyond that.
    """
    lo, hi = max(lo, grid.a), min(hi, grid.b)
    xf = np.linspace(lo, hi, fine + 1)
    hf = (hi - lo) / fine
    steps = []
    h = hf
    while h < grid.h:
        h *= growth
        steps.append(min(h, grid.h))
    off = np.cumsum(steps) if steps else np.zeros(0)
    left = lo - off
    right = hi + off
    left = left[left > grid.a]
    right = right[right < grid.b]
    reach_lo = left[-1] if left.size else lo
    reach_hi = right[-1] if right.size else hi
    xc = np.asarray(grid.nodes)
    keep = (xc < reach_lo - grid.h / 2) | (xc > reach_hi + grid.h / 2)
    keep[0] |= xc[0] < lo - hf / 2
    keep[-1] |= xc[-1] > hi + hf / 2
    return GradedGrid(np.union1d(np.union1d(xc[keep], xf), np.concatenate([left, right])))


def _local_grid(lo, hi, nodes):
    return Grid1D(lo, hi, nodes)


def ball_modular(member, q, x0, radius, nodes=4001):
    """``int_{B_radius(x0)} |v|^q(x) dx`` on a local uniform trapezoid grid.

    The ball is intersected with the member's support, where all of its
    mass lives.
    """
    lo, hi = max(x0 - radius, member.lo), min(x0 + radius, member.hi)
    if hi <= lo:
        return 0.0
    g = _local_grid(lo, hi, nodes)
    x = np.asarray(g.nodes)
    return integrate(pow_abs(member(x), q(x)), g)


def q_field_builder(crit, x0, C0, beta, floor, grid=None):
    """Exponent touching ``crit`` at ``x0`` at a prescribed logarithmic rate.

    ``q(x) = max(floor, crit(x) - C0 / (-log|x - x0|)^beta)`` for
    ``|x - x0| < 1/2``; farther out the gap is frozen at its value
    ``C0 / (log 2)^beta`` at distance 1/2 so the field stays continuous.
    ``q(x0) = crit(x0)``. With ``grid`` the floor is checked to stay
    strictly below ``crit`` at every node.
    """
    if not C0 > 0:
        raise InvalidExponentError("C0 must be positive")
    if not 0 < beta <= 1:
        raise InvalidExponentError("beta must lie in (0, 1]")
    floor = float(floor)
    if grid is not None:
        cv = crit(np.asarray(grid.nodes))
        if np.any(floor >= cv):
            i = int(np.argmin(cv - floor))
            raise InvalidExponentError(
                f"floor {floor} reaches the critical exponent {cv[i]} at x = {grid.nodes[i]}"
            )
    far_gap = C0 / math.log(2.0) ** beta

    def q(x):
        x = np.asarray(x, dtype=float)
        d = np.abs(x - x0)
        with np.errstate(divide="ignore", invalid="ignore"):
            gap = np.where(d < 0.5, C0 / (-np.log(np.where(d > 0, d, 1.0))) ** beta, far_gap)
        gap = np.where(d == 0, 0.0, gap)
        return np.maximum(floor, crit(x) - gap)

    return ScalarExponentField(q, declared_inf=floor, name=f"q(beta={beta:g}, C0={C0:g})")


def exponent_infima(bundle, grid):
    """Sampled ``p-`` and ``s-`` (over all node pairs)."""
    return bundle.p.range_on(grid)[0], bundle.s.range_on(grid)[0]


def noncompactness_bound(N, p_inf, s_inf, C0):
    """Explicit lower bound ``exp(-(N - p- s-)/p- * 2 C0) * |B_1/2 \\ B_1/4|`` in 1-D."""
    return math.exp(-(N - p_inf * s_inf) / p_inf * 2 * C0) * 0.5


class TailRow(NamedTuple):
    eps: float
    family: str
    member: str
    value: float


def tail_vanishing_probe(bundle, q, x0, rho_bound, eps_list, family_list, grid, fine=400):
    """Largest ``int_{B_eps(x0)} |v|^q`` over the supplied members, per ``eps``.

    ``family_list`` maps a family label to a list of :class:`Member`. Members
    whose Sobolev norm (on ``grid`` refined over their support) exceeds
    ``rho_bound`` are rejected and listed in the second return value.
    Returns ``(rows, rejected)`` where ``rows`` holds one row per ``eps``
    carrying the maximizing member.
    """
    members = []
    rejected = []
    for fam, mems in family_list.items():
        for m in mems:
            g = refined_grid(grid, m.lo, m.hi, fine)
            v = GridFunction(g, m(g.nodes), False)
            nrm = sobolev_norm(v, bundle) if not v.is_zero() else 0.0
            if nrm > rho_bound:
                rejected.append((fam, m.label, nrm))
            else:
                members.append((fam, m))
    rows = []
    for eps in eps_list:
        best = TailRow(float(eps), "", "", 0.0)
        for fam, m in members:
            val = ball_modular(m, q, x0, eps)
            if val > best.value or not best.family:
                best = TailRow(float(eps), fam, m.label, val)
        rows.append(best)
    return rows, rejected


class AnnulusRow(NamedTuple):
    n: int
    inner: float
    outer: float
    gap: float
    ratio: float
    bound: float


def annulus_rate_check(bundle, q, x0, eps, n_max, grid, beta, crit=None):
    """Gap ``crit- - q+`` on the annuli ``eps^(n+1) < |x - x0| < eps^n``.

    Extrema are taken over the grid nodes inside each annulus together with
    its four boundary points. ``ratio = gap (-log eps^(n+1))^beta`` and
    ``bound = C / (-log eps^(n+1))^beta`` with ``C`` the ratio at ``n = 1``.
    ``crit`` defaults to the critical Sobolev exponent of ``bundle``.
    Raises EmptyAnnulusError when an annulus holds no grid node.
    """
    from .exponents import critical_field

    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    crit = crit or critical_field(bundle)
    x = np.asarray(grid.nodes)
    d = np.abs(x - x0)
    rows = []
    C = None
    for n in range(1, n_max + 1):
        outer, inner = eps**n, eps ** (n + 1)
        inside = x[(d > inner) & (d < outer)]
        if inside.size == 0:
            raise EmptyAnnulusError(
                f"annulus {inner:.3g} < |x - x0| < {outer:.3g} (n = {n}) has no grid nodes; refine the grid"
            )
        pts = np.concatenate([inside, [x0 - outer, x0 - inner, x0 + inner, x0 + outer]])
        gap = float(crit(pts).min() - q(pts).max())
        L = (-math.log(inner)) ** beta
        ratio = gap * L
        if C is None:
            C = ratio
        rows.append(AnnulusRow(n, inner, outer, gap, ratio, C / L))
    return rows


class VerdictRow(NamedTuple):
    n: int
    eps: float
    modular: float
    bound: float
    verdict: str


class CompactnessReport(NamedTuple):
    verdict: str
    rows: tuple
    bound: float


def compactness_verdict(bundle, q, family, grid, C0, large_from=8, nodes=4001):
    """Classify the ``L^q`` modulars of the concentration sequence.

    "mass escapes" when the modulars decrease monotonically and the last is
    below 10% of the ``n = 1`` value; "concentration persists" when every
    modular with ``n >= large_from`` is at least half the explicit
    non-compactness bound (evaluated with ``C0``); "inconclusive" otherwise.
    """
    p_inf, s_inf = exponent_infima(bundle, grid)
    bound = noncompactness_bound(bundle.N, p_inf, s_inf, C0)
    scales = sorted(family.scales)
    mods = []
    for n in scales:
        m = concentration_member(family, n, bundle, (grid.a, grid.b))
        g = _local_grid(m.lo, m.hi, nodes)
        x = np.asarray(g.nodes)
        mods.append(integrate(pow_abs(m(x), q(x)), g))
    mods = np.array(mods)
    escapes = bool(np.all(np.diff(mods) < 0) and mods[-1] < 0.1 * mods[0])
    large = [m for n, m in zip(scales, mods) if n >= large_from]
    persists = bool(large) and all(m >= bound / 2 for m in large)
    if escapes:
        verdict = "mass escapes"
    elif persists:
        verdict = "concentration persists"
    else:
        verdict = "inconclusive"
    rows = tuple(VerdictRow(n, 1.0 / n, float(m), bound, verdict) for n, m in zip(scales, mods))
    return CompactnessReport(verdict, rows, bound)


class ScalingRow(NamedTuple):
    n: int
    lp_modular: float
    sobolev_modular: float


def scaling_table(family, bundle, grid, fine=400):
    """``L^p(x,x)`` and full Sobolev modulars of ``phi_n`` for each scale.

    Each member is sampled on ``grid`` refined over its support.
    Returns ``(rows, slope)`` with ``slope`` the least-squares log-log slope
    of the ``L^p`` modular against ``n``.
    """
    rows = []
    for n in sorted(family.scales):
        m = concentration_member(family, n, bundle, (grid.a, grid.b))
        g = refined_grid(grid, m.lo, m.hi, fine)
        v = GridFunction(g, m(g.nodes), False)
        sm = gagliardo_modular(v, bundle)
        rows.append(ScalingRow(n, sm.lp_term, sm.total))
    ns = np.array([r.n for r in rows], dtype=float)
    lp = np.array([r.lp_modular for r in rows])
    slope = float(np.polyfit(np.log(ns), np.log(lp), 1)[0])
    return rows, slope


def write_table(rows, path, columns=None):
    """Write named-tuple rows as CSV with 17 significant digits for floats."""
    rows = list(rows)
    if columns is None:
        if not rows:
            raise ValueError("need columns for an empty table")
        columns = rows[0]._fields
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            rec = r._asdict() if hasattr(r, "_asdict") else dict(zip(columns, r))
            w.writerow(
                ["%.17g" % rec[c] if isinstance(rec[c], float) else rec[c] for c in columns]
            )
