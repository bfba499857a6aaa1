import json

import numpy as np
import pytest

from conftest import smooth_u
from varchoquard.choquard import energy_value, residual
from varchoquard.errors import ConfigError, ValleyNotFoundError
from varchoquard.exponents import ExponentBundle, constant, symmetric_constant
from varchoquard.grid import GridFunction
from varchoquard.solver import (
    MountainPassConfig,
    find_valley_point,
    mountain_pass_solve,
    ps_functional_bound,
    sine_direction,
    verify_mp_geometry,
)


def const_bundle(p=2.0, s=0.3, alpha=0.5, r=2.0):
    return ExponentBundle(symmetric_constant(p), symmetric_constant(s), constant(alpha), constant(r))


@pytest.fixture(scope="module")
def default_run(bundle, grid401):
    return mountain_pass_solve(bundle, grid401, MountainPassConfig(seed=3))


def test_config_validation():
    for bad in (dict(path_points=4), dict(descent_tol=0), dict(armijo_c=1.5), dict(ring_samples=8)):
        with pytest.raises(ConfigError):
            MountainPassConfig(**bad).validate()
    MountainPassConfig().validate()


def test_geometry_default(bundle, grid101):
    d_hat, ok = verify_mp_geometry(bundle, grid101, 0.1, 16, seed=1)
    assert ok and d_hat > 0
    assert verify_mp_geometry(bundle, grid101, 0.1, 16, seed=1) == (d_hat, ok)


def test_geometry_shrinks_with_rho(bundle, grid101):
    d = [verify_mp_geometry(bundle, grid101, rho, 16, seed=2)[0] for rho in (0.4, 0.2, 0.1, 0.05)]
    assert all(a > b > 0 for a, b in zip(d, d[1:]))


def test_geometry_rejects_bad_arguments(bundle, grid101):
    with pytest.raises(ValueError):
        verify_mp_geometry(bundle, grid101, 0.0)
    with pytest.raises(ValueError):
        verify_mp_geometry(bundle, grid101, 0.1, samples=8)


def test_valley_constant_exponents(grid101):
    t, v = find_valley_point(const_bundle(p=2.0, r=2.0), sine_direction(grid101))
    assert t >= 1 and energy_value(v, const_bundle()) < 0
    assert energy_value(v / 2, const_bundle()) >= 0 or t == 1


def test_valley_misconfigured(grid101):
    with pytest.raises(ValleyNotFoundError, match="2 r-"):
        find_valley_point(const_bundle(p=2.2, r=1.05), sine_direction(grid101) * 100)


def test_valley_rejects_bad_direction(bundle, grid101):
    with pytest.raises(ValueError):
        find_valley_point(bundle, GridFunction.zeros(grid101))
    with pytest.raises(ValueError):
        find_valley_point(bundle, GridFunction(grid101, np.ones(grid101.M)))


def test_default_run_converges(default_run, bundle):
    rep = default_run
    assert rep.converged
    assert rep.residual <= 1e-6
    assert rep.residual == residual(rep.u_star, bundle)
    assert rep.critical_value == pytest.approx(energy_value(rep.u_star, bundle), abs=0)
    rho, d_hat = rep.mp_ring
    assert rep.critical_value >= d_hat - 1e-6 > 0
    assert rep.u_norm >= rho / 2


def test_default_run_history(default_run):
    res = [h[1] for h in default_run.history]
    energies = [h[0] for h in default_run.history]
    assert np.all(np.isfinite(energies)) and max(energies) < 10
    assert res[-1] <= 1e-6 and res[-1] < res[0]


def test_default_run_deterministic(default_run, bundle, grid401):
    again = mountain_pass_solve(bundle, grid401, MountainPassConfig(seed=3))
    assert again.to_json() == default_run.to_json()


def test_report_json(default_run):
    data = json.loads(default_run.to_json())
    assert {"critical_value", "residual", "iters", "converged", "mp_ring"} <= set(data)


def test_restart_through_critical_point(default_run, bundle, grid401):
    cfg = MountainPassConfig(seed=3, initial_direction=default_run.u_star)
    rep = mountain_pass_solve(bundle, grid401, cfg)
    assert rep.converged and rep.iters <= 2
    assert rep.critical_value == pytest.approx(default_run.critical_value, rel=1e-6)


def test_snapshot_hook(bundle, grid101):
    seen = []
    cfg = MountainPassConfig(snapshot_every=2, snapshot_hook=lambda it, u: seen.append(it), max_outer_iters=6)
    mountain_pass_solve(bundle, grid101, cfg)
    assert seen and all(it % 2 == 0 for it in seen)


def test_iteration_cap_flags_unconverged(bundle, grid101):
    rep = mountain_pass_solve(bundle, grid101, MountainPassConfig(max_outer_iters=1, newton_switch=0.0))
    assert not rep.converged and rep.iters == 1


def test_ps_bound_zero_and_range(bundle, grid101):
    assert tuple(ps_functional_bound(GridFunction.zeros(grid101), 0.4, bundle)) == (0.0, 0.0)
    with pytest.raises(ValueError):
        ps_functional_bound(GridFunction.zeros(grid101), 0.9, bundle)
    with pytest.raises(ValueError):
        ps_functional_bound(GridFunction.zeros(grid101), 0.05, bundle)


def test_ps_bound_random(bundle, grid101, rng):
    from varchoquard.sobolev import pair_data

    pd = pair_data(grid101, bundle)
    beta = 0.5 * (1 / (2 * pd.r.min()) + 1 / pd.P.max())
    for _ in range(100):
        u = smooth_u(grid101, rng, scale=10 ** rng.uniform(-2, 0.5))
        assert ps_functional_bound(u, beta, bundle).ok
