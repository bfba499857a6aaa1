"""Variable exponent fields, exponent bundles and their algebraic relations.

Sup/inf of a field over a set are always approximated by maxima/minima over
sampled points, so every "global" bound reported here is an empirical one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import InvalidExponentError

__all__ = [
    "ScalarExponentField",
    "SymmetricExponentField",
    "ExponentBundle",
    "RangeCheck",
    "constant",
    "affine",
    "expression",
    "symmetric_constant",
    "symmetric_cosine",
    "symmetric_distance_affine",
    "symmetric_expression",
    "critical_exponent",
    "critical_field",
    "hls_upper_field",
    "hls_lower_field",
    "midpoint_r",
    "sigma_alpha",
    "check_hls_identity",
    "validate_r_range",
    "log_holder_constant",
    "tr_margins",
    "check_tr_condition",
    "check_log_touch_condition",
    "check_diagonal_local_minimum",
    "default_bundle",
]

_EXPR_NAMESPACE = {
    name: getattr(np, name)
    for name in (
        "sin", "cos", "tan", "exp", "log", "log1p", "sqrt", "abs", "minimum",
        "maximum", "clip", "where", "pi", "e", "tanh", "cosh", "sinh", "sign",
    )
}


def _as_array(v, shape):
    return np.asarray(v, dtype=float) * np.ones(shape)


@dataclass(frozen=True)
class ScalarExponentField:
    """A continuous exponent ``x -> value`` on the closed domain.

    ``func`` must accept numpy arrays. The declared bounds are a contract
    checked on samples by :meth:`check_bounds`.
    """

    func: Callable
    declared_inf: float = -np.inf
    declared_sup: float = np.inf
    name: str = "field"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return _as_array(self.func(x), x.shape)

    def sample(self, grid):
        return self(grid.nodes)

    def range_on(self, grid):
        v = self.sample(grid)
        return float(v.min()), float(v.max())

    def check_bounds(self, grid):
        v = self.sample(grid)
        if not np.all(np.isfinite(v)):
            i = int(np.argmax(~np.isfinite(v)))
            raise InvalidExponentError(f"{self.name} is not finite at x={grid.nodes[i]!r}")
        lo, hi = v.min(), v.max()
        if lo < self.declared_inf or hi > self.declared_sup:
            raise InvalidExponentError(
                f"{self.name} leaves its declared range "
                f"[{self.declared_inf}, {self.declared_sup}]: sampled [{lo}, {hi}]"
            )
        return float(lo), float(hi)

    def map(self, fn, name=None, declared_inf=-np.inf, declared_sup=np.inf):
        """Pointwise transform ``x -> fn(self(x))``."""
        base = self
        return ScalarExponentField(
            lambda x: fn(base(x)), declared_inf, declared_sup, name or f"f({self.name})"
        )

    def __mul__(self, other):
        a = self
        if isinstance(other, ScalarExponentField):
            return ScalarExponentField(lambda x: a(x) * other(x), name=f"{a.name}*{other.name}")
        c = float(other)
        return ScalarExponentField(lambda x: c * a(x), name=f"{c}*{a.name}")

    __rmul__ = __mul__


@dataclass(frozen=True)
class SymmetricExponentField:
    """A symmetric exponent ``(x, y) -> value``.

    Symmetry holds by construction: the stored ``func`` is evaluated as
    ``(func(x, y) + func(y, x)) / 2``, which is bit-exactly symmetric because
    floating-point addition commutes.
    """

    func: Callable
    declared_inf: float = -np.inf
    declared_sup: float = np.inf
    name: str = "field"

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast_shapes(x.shape, y.shape)
        return (_as_array(self.func(x, y), shape) + _as_array(self.func(y, x), shape)) / 2

    def pairs(self, grid):
        x = np.asarray(grid.nodes)
        return self(x[:, None], x[None, :])

    def diagonal(self):
        """The trace ``x -> f(x, x)`` as a scalar field."""
        sym = self
        return ScalarExponentField(
            lambda x: sym(x, x), self.declared_inf, self.declared_sup, f"{self.name}(x,x)"
        )

    def range_on(self, grid):
        v = self.pairs(grid)
        return float(v.min()), float(v.max())

    def check_bounds(self, grid):
        v = self.pairs(grid)
        if not np.all(np.isfinite(v)):
            raise InvalidExponentError(f"{self.name} is not finite on the grid")
        lo, hi = v.min(), v.max()
        if lo < self.declared_inf or hi > self.declared_sup:
            raise InvalidExponentError(
                f"{self.name} leaves its declared range "
                f"[{self.declared_inf}, {self.declared_sup}]: sampled [{lo}, {hi}]"
            )
        return float(lo), float(hi)


# catalog ------------------------------------------------------------------


def constant(c, name="const"):
    c = float(c)
    return ScalarExponentField(lambda x: np.full(np.shape(x), c), c, c, name)


def affine(c0, c1, name="affine"):
    """``x -> c0 + c1 * x`` (declared bounds left open; they depend on the domain)."""
    c0, c1 = float(c0), float(c1)
    return ScalarExponentField(lambda x: c0 + c1 * x, name=name)


def expression(expr, name=None, declared_inf=-np.inf, declared_sup=np.inf):
    """Scalar field from a numpy expression in ``x``, e.g. ``"1.5 + sin(3*x)**2"``."""
    code = compile(expr, "<exponent>", "eval")
    ns = dict(_EXPR_NAMESPACE)
    return ScalarExponentField(
        lambda x: eval(code, {"__builtins__": {}}, {**ns, "x": x}),
        declared_inf,
        declared_sup,
        name or expr,
    )


def symmetric_constant(c, name="const"):
    c = float(c)
    return SymmetricExponentField(
        lambda x, y: np.full(np.broadcast_shapes(np.shape(x), np.shape(y)), c), c, c, name
    )


def symmetric_cosine(base, amplitude, freq, name="cosine"):
    """``base + amplitude * cos(freq * (x + y))``."""
    base, amplitude, freq = float(base), float(amplitude), float(freq)
    return SymmetricExponentField(
        lambda x, y: base + amplitude * np.cos(freq * (x + y)),
        base - abs(amplitude),
        base + abs(amplitude),
        name,
    )


def symmetric_distance_affine(base, slope, lo=1e-3, hi=1 - 1e-3, name="distance_affine"):
    """``base - slope * |x - y|`` clipped into ``[lo, hi]``."""
    base, slope = float(base), float(slope)
    return SymmetricExponentField(
        lambda x, y: np.clip(base - slope * np.abs(x - y), lo, hi), lo, hi, name
    )


def symmetric_expression(expr, name=None, declared_inf=-np.inf, declared_sup=np.inf):
    """Symmetric field from a numpy expression in ``x`` and ``y``."""
    code = compile(expr, "<exponent>", "eval")
    ns = dict(_EXPR_NAMESPACE)
    return SymmetricExponentField(
        lambda x, y: eval(code, {"__builtins__": {}}, {**ns, "x": x, "y": y}),
        declared_inf,
        declared_sup,
        name or expr,
    )


# bundle -------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentBundle:
    """All exponents of one problem instance: ``p, s`` (pairs), ``alpha, r`` (points)."""

    p: SymmetricExponentField
    s: SymmetricExponentField
    alpha: ScalarExponentField
    r: ScalarExponentField
    N: int = 1
    label: str = field(default="", compare=False)

    def ranges(self, grid):
        """Sampled ``(inf, sup)`` of every exponent on ``grid``."""
        return {
            "p": self.p.range_on(grid),
            "s": self.s.range_on(grid),
            "alpha": self.alpha.range_on(grid),
            "r": self.r.range_on(grid),
        }

    def check_admissible(self, grid):
        """Check ``0 < s- <= s+ < 1``, ``1 < p- <= p+ < N/s+``, ``0 < alpha- <= alpha+ < N``.

        Raises InvalidExponentError naming the first violated constraint.
        """
        for f in (self.p, self.s, self.alpha, self.r):
            f.check_bounds(grid)
        rg = self.ranges(grid)
        s_lo, s_hi = rg["s"]
        p_lo, p_hi = rg["p"]
        a_lo, a_hi = rg["alpha"]
        if not 0 < s_lo <= s_hi < 1:
            raise InvalidExponentError(f"need 0 < s- <= s+ < 1, sampled [{s_lo}, {s_hi}]")
        if not 1 < p_lo:
            raise InvalidExponentError(f"need p- > 1, sampled p- = {p_lo}")
        if not p_hi < self.N / s_hi:
            raise InvalidExponentError(f"need p+ < N/s+ = {self.N / s_hi}, sampled p+ = {p_hi}")
        if not 0 < a_lo <= a_hi < self.N:
            raise InvalidExponentError(f"need 0 < alpha- <= alpha+ < N, sampled [{a_lo}, {a_hi}]")
        return rg

    def with_r(self, r):
        return ExponentBundle(self.p, self.s, self.alpha, r, self.N, self.label)


# relations ----------------------------------------------------------------


def critical_exponent(bundle, x):
    """Critical Sobolev exponent ``N p(x,x) / (N - p(x,x) s(x,x))``."""
    x = np.asarray(x, dtype=float)
    pd = bundle.p(x, x)
    sd = bundle.s(x, x)
    den = bundle.N - pd * sd
    if np.any(den <= 0):
        raise InvalidExponentError("N - p(x,x) s(x,x) <= 0: critical exponent undefined")
    out = bundle.N * pd / den
    return float(out) if out.ndim == 0 else out


def critical_field(bundle):
    return ScalarExponentField(lambda x: critical_exponent(bundle, x), name="p_s*")


def hls_upper_field(bundle, alpha_sup):
    """Upper critical Choquard growth ``(1 - alpha+/2N) p_s*(x)``."""
    c = 1 - float(alpha_sup) / (2 * bundle.N)
    return ScalarExponentField(lambda x: c * critical_exponent(bundle, x), name="r_upper")


def hls_lower_field(bundle, alpha_inf):
    """Lower critical Choquard growth ``(1 - alpha-/2N) p(x,x)``."""
    c = 1 - float(alpha_inf) / (2 * bundle.N)
    return ScalarExponentField(
        lambda x: c * bundle.p(np.asarray(x, float), np.asarray(x, float)), name="r_lower"
    )


def midpoint_r(p, s, alpha_inf, alpha_sup, N=1):
    """``r`` halfway between the lower and upper HLS-critical growth bounds."""
    c_lo = 1 - float(alpha_inf) / (2 * N)
    c_up = 1 - float(alpha_sup) / (2 * N)

    def r(x):
        x = np.asarray(x, dtype=float)
        pd, sd = p(x, x), s(x, x)
        return (c_lo * pd + c_up * N * pd / (N - pd * sd)) / 2

    return ScalarExponentField(r, name="r_mid")


def sigma_alpha(alpha, x, N=1):
    """HLS pairing exponent ``2N / (2N - alpha(x))``."""
    a = alpha(x) if callable(alpha) else np.asarray(alpha, dtype=float)
    if np.any(a <= 0) or np.any(a >= N):
        raise InvalidExponentError(f"alpha must lie in (0, {N})")
    out = 2 * N / (2 * N - a)
    return float(out) if np.ndim(out) == 0 else out


def check_hls_identity(alpha, N, sample_pairs, sigma=None):
    """Max over pairs of ``|1/sigma(x) + (alpha(x)+alpha(y))/2N + 1/sigma(y) - 2|``.

    ``sigma`` defaults to :func:`sigma_alpha`; pass a different callable to
    probe a corrupted pairing exponent.
    """
    pairs = np.asarray(sample_pairs, dtype=float).reshape(-1, 2)
    x, y = pairs[:, 0], pairs[:, 1]
    sig = sigma if sigma is not None else (lambda t: sigma_alpha(alpha, t, N))
    res = 1 / sig(x) + (alpha(x) + alpha(y)) / (2 * N) + 1 / sig(y) - 2
    return float(np.max(np.abs(res))) if res.size else 0.0


class RangeCheck(NamedTuple):
    ok: bool
    worst_violation: float
    worst_x: float


def validate_r_range(bundle, grid, tol=1e-12):
    """Check ``(1 - a-/2N) p(x,x) <= r(x) <= (1 - a+/2N) p_s*(x)`` at every node.

    ``worst_violation`` is the largest amount by which either side fails
    (negative when all nodes are strictly inside the band).
    """
    a_lo, a_hi = bundle.alpha.range_on(grid)
    x = np.asarray(grid.nodes)
    r = bundle.r(x)
    lower = hls_lower_field(bundle, a_lo)(x)
    upper = hls_upper_field(bundle, a_hi)(x)
    viol = np.maximum(lower - r, r - upper)
    scale = np.maximum(1.0, np.abs(upper))
    i = int(np.argmax(viol / scale))
    ok = bool(np.all(viol <= tol * scale))
    return RangeCheck(ok, float(viol[i]), float(x[i]))


def log_holder_constant(f, grid, max_points=41):
    """Empirical log-Hölder constant: max of ``|f(x)-f(y)| log(1/|x-y|)``.

    Pairs of distinct sample points at distance below 1/2 are used. For a
    symmetric field the sample points live in the square and the distance is
    Euclidean; the grid is thinned to about ``max_points`` per axis there.
    The result is a lower bound for the true constant.
    """
    x = np.asarray(grid.nodes)
    if x.size < 2:
        raise ValueError("need at least 2 grid nodes")
    if isinstance(f, SymmetricExponentField):
        stride = max(1, int(np.ceil(x.size / max_points)))
        xs = x[::stride]
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
        vals = f(pts[:, 0], pts[:, 1])
        d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    else:
        vals = f(x)
        d = np.abs(x[:, None] - x[None, :])
    diff = np.abs(vals[:, None] - vals[None, :])
    mask = (d > 0) & (d < 0.5)
    if not mask.any():
        return 0.0
    with np.errstate(divide="ignore"):
        prod = np.where(mask, diff * np.log(1 / np.where(mask, d, 1.0)), 0.0)
    return float(prod.max())


def tr_margins(r, bound, x0, beta, C0, rhos):
    """Slack of the touching-rate inequality at each sampled radius.

    For radius rho the 1-D sphere is ``{x0 - rho, x0 + rho}``; the slack is
    ``min bound - C0/(-log rho)^beta - max r`` over those two points.
    """
    rhos = np.asarray(rhos, dtype=float)
    pts = np.stack([x0 - rhos, x0 + rhos])
    rmax = r(pts).max(axis=0)
    bmin = bound(pts).min(axis=0)
    return bmin - C0 / (-np.log(rhos)) ** beta - rmax


def check_tr_condition(r, bound, x0, beta, C0, eta, rho_samples, tol=1e-12):
    """Touching-rate check on sampled radii in ``(0, eta)``.

    ``bound`` is the critical field being approached, e.g.
    :func:`hls_upper_field` for the Choquard exponent or :func:`critical_field`
    for an embedding exponent.
    """
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1) so that log(rho) < 0")
    if not 0 < beta < 1 + 1e-15:
        raise ValueError("beta must lie in (0, 1]")
    if C0 <= 0:
        raise ValueError("C0 must be positive")
    rhos = np.asarray(rho_samples, dtype=float)
    if np.any(rhos <= 0) or np.any(rhos >= eta):
        raise ValueError("rho samples must lie in (0, eta)")
    m = tr_margins(r, bound, x0, beta, C0, rhos)
    scale = np.maximum(1.0, np.abs(bound(x0 + rhos)))
    return bool(np.all(m >= -tol * scale))


def check_log_touch_condition(q, crit, x0, C0, eta, rho_samples, tol=1e-12):
    """Check ``q(x) >= crit(x) - C0/log(1/|x-x0|)`` at ``x0 +- rho``.

    This is the non-compactness hypothesis: ``q`` stays within a
    logarithmic distance of the critical exponent near ``x0``.
    """
    rhos = np.asarray(rho_samples, dtype=float)
    if np.any(rhos <= 0) or np.any(rhos >= min(eta, 1.0)):
        raise ValueError("rho samples must lie in (0, min(eta, 1))")
    pts = np.concatenate([x0 - rhos, x0 + rhos])
    d = np.concatenate([rhos, rhos])
    slack = q(pts) - (crit(pts) - C0 / np.log(1 / d))
    scale = np.maximum(1.0, np.abs(crit(pts)))
    return bool(np.all(slack >= -tol * scale))


def check_diagonal_local_minimum(f, grid, radius=None, tol=1e-14):
    """Sampled check that every diagonal point is a local minimum of ``f``.

    For each node ``x_i``, every node pair ``(x_j, x_k)`` with both
    ``|x_j - x_i|`` and ``|x_k - x_i|`` at most ``radius`` must satisfy
    ``f(x_j, x_k) >= f(x_i, x_i)``. This forces ``f`` to be locally constant
    along the diagonal. A finite sample cannot certify the continuum property.
    """
    x = np.asarray(grid.nodes)
    radius = 4 * grid.h if radius is None else radius
    F = f.pairs(grid)
    diag = np.diag(F)
    for i in range(x.size):
        nb = np.flatnonzero(np.abs(x - x[i]) <= radius)
        if F[np.ix_(nb, nb)].min() < diag[i] - tol:
            return False
    return True


def default_bundle():
    """The built-in subcritical instance on (-1, 1).

    ``p(x,y) = 2 + 0.2 cos(pi (x+y)/4)``, ``s(x,y) = 0.4 - 0.05|x-y|``,
    ``alpha = 0.5`` and ``r`` at the midpoint of the admissible band.
    """
    p = symmetric_cosine(2.0, 0.2, np.pi / 4, name="p")
    s = symmetric_distance_affine(0.4, 0.05, name="s")
    alpha = constant(0.5, name="alpha")
    r = midpoint_r(p, s, 0.5, 0.5, N=1)
    return ExponentBundle(p, s, alpha, r, 1, label="default")
