"""Mountain-pass critical-point search for the discrete energy.

The search follows a discrete path from 0 to a point of negative energy and
repeatedly pushes its highest point downhill (path-following max-point
descent). Once the highest point is close to critical, Newton steps with the
full Hessian finish the job; they are only kept while they reduce the
residual.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import minimize_scalar

from .choquard import _gradient, convex_hessian, energy_I, energy_hessian, energy_value
from .errors import ConfigError, GeometryError, ValleyNotFoundError
from .grid import GridFunction, get_threads
from .sobolev import pair_data, sobolev_norm

__all__ = [
    "MountainPassConfig",
    "SolveReport",
    "PSBound",
    "sine_direction",
    "random_direction",
    "verify_mp_geometry",
    "find_valley_point",
    "mountain_pass_solve",
    "ps_functional_bound",
]

T_CAP = 2.0**40


@dataclass
class MountainPassConfig:
    """Settings of :func:`mountain_pass_solve`.

    ``newton_switch`` is the residual below which Newton polishing is first
    tried (0 disables it); after a failed attempt the threshold drops to a
    quarter of the residual at that attempt. ``rho`` and ``ring_samples`` configure the geometry check
    run before the search.
    """

    path_points: int = 16
    descent_tol: float = 1e-6
    max_outer_iters: int = 400
    max_descent_iters: int = 1
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    initial_step: float = 1.0
    initial_direction: GridFunction | None = None
    seed: int = 0
    rho: float = 0.1
    ring_samples: int = 16
    newton_switch: float = 5e-2
    max_newton_iters: int = 30
    snapshot_every: int = 0
    snapshot_hook: object = field(default=None, repr=False)

    def validate(self):
        if int(self.path_points) != self.path_points or self.path_points < 8:
            raise ConfigError(f"path_points must be an integer >= 8, got {self.path_points}")
        for name in ("descent_tol", "rho", "initial_step"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("armijo_c", "backtrack"):
            if not 0 < getattr(self, name) < 1:
                raise ConfigError(f"{name} must lie in (0, 1)")
        for name in ("max_outer_iters", "max_descent_iters"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.newton_switch < 0 or self.max_newton_iters < 0:
            raise ConfigError("newton settings must be nonnegative")
        if self.ring_samples < 16:
            raise ConfigError("ring_samples must be >= 16")


class SolveReport(NamedTuple):
    u_star: GridFunction
    critical_value: float
    residual: float
    iters: int
    converged: bool
    history: tuple
    mp_ring: tuple
    valley_t: float
    u_norm: float

    def to_dict(self):
        return {
            "converged": self.converged,
            "critical_value": self.critical_value,
            "residual": self.residual,
            "iters": self.iters,
            "valley_t": self.valley_t,
            "mp_ring": {"rho": self.mp_ring[0], "d_hat": self.mp_ring[1]},
            "sobolev_norm": self.u_norm,
            "history": [{"max_energy": e, "residual": r, "phase": ph} for e, r, ph in self.history],
            "x": self.u_star.grid.nodes,
            "u_star": self.u_star.values,
        }

    def to_json(self):
        from .io import dumps

        return dumps(self.to_dict())


def sine_direction(grid, modes=(1.0,)):
    """``sum_k c_k sin(k pi (x - a)/(b - a))`` with zero end values."""
    t = (np.asarray(grid.nodes) - grid.a) / (grid.b - grid.a)
    v = sum(c * np.sin((k + 1) * np.pi * t) for k, c in enumerate(modes))
    return GridFunction.from_callable(grid, lambda x: v, True)


def random_direction(grid, rng, n_modes=8):
    """Random smooth zero-boundary direction with mode weights decaying like 1/k."""
    c = rng.standard_normal(n_modes) / np.arange(1, n_modes + 1)
    return sine_direction(grid, c)


def verify_mp_geometry(bundle, grid, rho, samples=32, seed=0):
    """Sample ``I`` on the sphere of Sobolev radius ``rho``.

    Directions are random sine combinations drawn from ``seed``; each is
    scaled to Sobolev norm ``rho``. Returns ``(d_hat, passed)`` with
    ``d_hat`` the smallest sampled energy and ``passed = d_hat > 0``.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    if samples < 16:
        raise ValueError("need at least 16 samples")
    rng = np.random.default_rng(seed)
    d_hat = math.inf
    for _ in range(samples):
        d = random_direction(grid, rng)
        u = d * (rho / sobolev_norm(d, bundle))
        d_hat = min(d_hat, energy_value(u, bundle))
    return float(d_hat), bool(d_hat > 0)


def find_valley_point(bundle, direction, t_cap=T_CAP):
    """Double ``t`` from 1 until ``I[t direction] < 0``; return ``(t, t direction)``.

    Raises ValleyNotFoundError if ``t`` passes ``t_cap`` first, which happens
    when the Choquard growth does not dominate (``2 r- <= p+``).
    """
    if direction.is_zero():
        raise ValueError("direction must not vanish")
    if not direction.zero_boundary:
        raise ValueError("direction must have zero boundary values")
    t = 1.0
    while t <= t_cap:
        v = direction * t
        if energy_value(v, bundle) < 0:
            return t, v
        t *= 2
    pd = pair_data(direction.grid, bundle)
    raise ValleyNotFoundError(
        f"I[t u] stays nonnegative up to t = {t_cap:g}; check the exponents: "
        f"2 r- = {2 * pd.r.min():.6g}, p+ = {pd.P.max():.6g} (need 2 r- > p+)"
    )


def _path_energies(path, grid, bundle):
    inner = path[1:-1]

    def ev(v):
        return energy_value(GridFunction(grid, v, True), bundle)

    if get_threads() > 1:
        with ThreadPoolExecutor(max_workers=get_threads()) as pool:
            e = list(pool.map(ev, inner))
    else:
        e = [ev(v) for v in inner]
    return np.array([0.0] + e + [ev(path[-1])])


def _resample(points, count):
    """``count + 1`` points equally spaced by arclength along a polyline."""
    pts = np.asarray(points)
    if count == len(pts) - 1 and len(pts) == 2:
        return pts
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0:
        return np.repeat(pts[:1], count + 1, axis=0)
    targets = np.linspace(0.0, s[-1], count + 1)
    out = np.empty((count + 1, pts.shape[1]))
    for k, t in enumerate(targets):
        j = min(int(np.searchsorted(s, t, side="right")) - 1, len(seg) - 1)
        lam = 0.0 if seg[j] == 0 else (t - s[j]) / seg[j]
        out[k] = (1 - lam) * pts[j] + lam * pts[j + 1]
    out[0], out[-1] = pts[0], pts[-1]
    return out


def _reparametrize(path, k):
    """Redistribute nodes by arclength keeping ``path[k]`` as a node."""
    K = len(path) - 1
    left, right = path[: k + 1], path[k:]
    la = np.linalg.norm(np.diff(left, axis=0), axis=1).sum()
    ra = np.linalg.norm(np.diff(right, axis=0), axis=1).sum()
    m = int(round(K * la / (la + ra))) if la + ra > 0 else k
    m = min(max(m, 1), K - 1)
    return np.concatenate([_resample(left, m), _resample(right, K - m)[1:]]), m


def _refine_max(path, k, grid, bundle):
    """Maximize ``I`` on the two path segments next to node ``k``."""
    best_e, best_v = None, path[k]
    for j in (k - 1, k):
        a, b = path[j], path[j + 1]

        def f(t):
            return -energy_value(GridFunction(grid, (1 - t) * a + t * b, True), bundle)

        res = minimize_scalar(f, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-6})
        if best_e is None or -res.fun > best_e:
            best_e, best_v = -res.fun, (1 - res.x) * a + res.x * b
    return best_v


def _preconditioned(u, g, bundle):
    """``-H^{-1} g`` on interior nodes with ``H`` the convex-part Hessian."""
    H = convex_hessian(u, bundle)[1:-1, 1:-1]
    gi = g[1:-1]
    d = np.zeros_like(g)
    try:
        d[1:-1] = -cho_solve(cho_factor(H), gi)
    except LinAlgError:
        d[1:-1] = -gi / np.maximum(np.diag(H), 1e-300)
    if not np.all(np.isfinite(d)) or np.dot(d, g) >= 0:
        d = -g.copy()
    return d


def _armijo(u, e0, g, d, bundle, cfg):
    """Backtracking step along ``d``; returns ``(u_new, e_new)`` or ``None``."""
    grid = u.grid
    slope = float(np.dot(g, d))
    t = cfg.initial_step
    for _ in range(60):
        v = GridFunction(grid, u.values + t * d, True)
        try:
            e = energy_value(v, bundle)
        except ArithmeticError:
            e = math.inf
        if e <= e0 + cfg.armijo_c * t * slope and e < e0:
            return v, e
        t *= cfg.backtrack
    return None


def _newton(u, bundle, cfg, pd):
    """Newton iterations on ``grad I = 0``; stop when the residual stops falling."""
    grid = u.grid
    g = _gradient(pd, u.values)
    res = float(np.max(np.abs(g)))
    trail = []
    for _ in range(cfg.max_newton_iters):
        if res <= cfg.descent_tol:
            break
        H = energy_hessian(u, bundle)[1:-1, 1:-1]
        step = np.zeros(grid.M)
        try:
            step[1:-1] = -np.linalg.solve(H, g[1:-1])
        except np.linalg.LinAlgError:
            break
        v = GridFunction(grid, u.values + step, True)
        try:
            gv = _gradient(pd, v.values)
        except ArithmeticError:
            break
        rv = float(np.max(np.abs(gv)))
        if not rv < res:
            break
        u, g, res = v, gv, rv
        trail.append((energy_value(u, bundle), res))
    return u, res, trail


def _on_pass_level(u, bundle, d_hat, rho):
    return energy_value(u, bundle) >= d_hat - 1e-6 and sobolev_norm(u, bundle) >= rho / 2


def mountain_pass_solve(bundle, grid, config=None):
    """Search for a mountain-pass critical point of ``I`` on ``grid``.

    Finds a valley point along the initial direction, checks the ring
    geometry at radius ``config.rho`` (GeometryError if it fails), then runs
    max-point descent on the path ``0 -> valley``. The returned report is
    flagged ``converged`` only when the residual at ``u_star`` is at most
    ``config.descent_tol`` and ``u_star`` lies on the mountain-pass side
    (``I >= d_hat - 1e-6`` and Sobolev norm at least ``rho/2``); otherwise
    ``u_star`` is the best iterate seen. A run that collapses onto the
    trivial critical point stops early, unconverged.
    """
    cfg = config or MountainPassConfig()
    cfg.validate()
    bundle.check_admissible(grid)
    direction = cfg.initial_direction
    if direction is None:
        direction = sine_direction(grid)
    if direction.grid != grid:
        raise ConfigError("initial direction lives on a different grid")
    t, v = find_valley_point(bundle, direction)
    d_hat, ok = verify_mp_geometry(bundle, grid, cfg.rho, cfg.ring_samples, cfg.seed)
    if not ok:
        raise GeometryError(f"energy on the ring of radius {cfg.rho} reaches {d_hat:.6g} <= 0")

    pd = pair_data(grid, bundle)
    K = int(cfg.path_points)
    path = np.linspace(0.0, 1.0, K + 1)[:, None] * v.values[None, :]
    history = []
    best = None
    newton_at = cfg.newton_switch
    converged = False
    it = 0
    u = None
    for it in range(1, cfg.max_outer_iters + 1):
        E = _path_energies(path, grid, bundle)
        k = int(np.argmax(E[1:-1])) + 1
        path[k] = _refine_max(path, k, grid, bundle)
        u = GridFunction(grid, path[k], True)
        e0 = energy_value(u, bundle)
        g = _gradient(pd, u.values)
        res = float(np.max(np.abs(g)))
        history.append((e0, res, "path"))
        if best is None or res < best[1]:
            best = (u, res)
        if cfg.snapshot_every and cfg.snapshot_hook and it % cfg.snapshot_every == 0:
            cfg.snapshot_hook(it, u)
        if res <= cfg.descent_tol:
            # a tiny residual next to u = 0 is not a mountain-pass point
            converged = _on_pass_level(u, bundle, d_hat, cfg.rho)
            break
        if res <= newton_at:
            un, rn, trail = _newton(u, bundle, cfg, pd)
            history.extend((e, r, "newton") for e, r in trail)
            # keep the polished point only if it stayed on the mountain-pass side
            if rn <= cfg.descent_tol and _on_pass_level(un, bundle, d_hat, cfg.rho):
                u, res, converged = un, rn, True
                best = (u, res)
                break
            newton_at = res / 4
        for _ in range(cfg.max_descent_iters):
            d = _preconditioned(u, g, bundle)
            step = _armijo(u, e0, g, d, bundle, cfg)
            if step is None:
                break
            u, e0 = step
            g = _gradient(pd, u.values)
        path[k] = u.values
        path, _ = _reparametrize(path, k)

    u_star = u if converged else best[0]
    rep = energy_I(u_star, bundle)
    report = SolveReport(
        u_star=u_star,
        critical_value=rep.total,
        residual=rep.gradient_sup_norm,
        iters=it,
        converged=bool(converged and rep.gradient_sup_norm <= cfg.descent_tol),
        history=tuple(history),
        mp_ring=(float(cfg.rho), d_hat),
        valley_t=t,
        u_norm=sobolev_norm(u_star, bundle),
    )
    return report


class PSBound(NamedTuple):
    lhs: float
    rhs: float

    @property
    def ok(self):
        return self.lhs >= self.rhs - 1e-12 * max(1.0, abs(self.rhs))


def ps_functional_bound(u, beta, bundle):
    """``I[u] - beta <I'[u], u>`` and ``(1/p+ - beta) min(||u||^p+, ||u||^p-)``.

    ``beta`` must lie strictly between ``1/(2 r-)`` and ``1/p+``; for such
    ``beta`` the first value dominates the second for every ``u``.
    """
    pd = pair_data(u.grid, bundle)
    p_lo, p_hi = float(pd.P.min()), float(pd.P.max())
    r_lo = float(pd.r.min())
    if not 1 / (2 * r_lo) < beta < 1 / p_hi:
        raise ValueError(f"beta must lie in (1/(2 r-), 1/p+) = ({1 / (2 * r_lo):.6g}, {1 / p_hi:.6g})")
    if u.is_zero():
        return PSBound(0.0, 0.0)
    lhs = energy_value(u, bundle) - beta * float(np.dot(_gradient(pd, u.values), u.values))
    n = sobolev_norm(u, bundle)
    rhs = (1 / p_hi - beta) * min(n**p_hi, n**p_lo)
    return PSBound(lhs, rhs)
