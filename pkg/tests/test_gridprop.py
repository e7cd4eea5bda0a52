"""Grid propagator: discretization, stationarity, absorber, convergence."""

import numpy as np
import pytest

from starktunnel.precision import PrecisionContext
from starktunnel.model import ModelParams
from starktunnel import gridprop
from starktunnel.gridprop import (GridSpec, evolve_grid, absorber_reflection,
                                  absorber_reflection_packet, absorber_calibrate,
                                  tune_delta_strength, ground_energy, initial_state)
from starktunnel.errors import ConfigError


@pytest.fixture(scope="module")
def delta_params():
    return ModelParams(F="1/5", delta_limit=True, ctx=PrecisionContext(40))


@pytest.fixture(scope="module")
def coarse_grid():
    return GridSpec(x_hi=80.0, dx=0.02, dt=0.005, absorber_start=40.0)


def test_gridspec_validation():
    with pytest.raises(ConfigError):
        GridSpec(x_hi=10.0, dx=0.1, dt=0.01, absorber_start=20.0)
    with pytest.raises(ConfigError):
        GridSpec(x_hi=10.0, dx=-0.1, dt=0.01, absorber_start=5.0)


def test_delta_strength_tuning(delta_params, coarse_grid):
    g = tune_delta_strength(delta_params, coarse_grid)
    e = ground_energy(delta_params, coarse_grid, delta_strength=g)
    assert abs(e + 0.5) < 1e-4


def test_stationary_without_field(delta_params, coarse_grid):
    """The prepared eigenstate under zero field keeps its density."""
    import scipy.sparse as sp
    import scipy.sparse.linalg as spla
    g = tune_delta_strength(delta_params, coarse_grid)
    psi, e0, xs = initial_state(delta_params, coarse_grid, delta_strength=g)
    H, _, _ = gridprop._hamiltonian(delta_params, coarse_grid, field_on=False,
                                    delta_strength=g, absorber=False)
    phi = psi.copy()
    phi[0] /= np.sqrt(2.0)
    phi[-1] /= np.sqrt(2.0)
    dt = coarse_grid.dt
    eye = sp.identity(H.shape[0], dtype=complex, format="csc")
    solver = spla.splu((eye + 0.5j * dt * H).tocsc())
    A_plus = (eye - 0.5j * dt * H).tocsc()
    d0 = np.abs(phi) ** 2
    cur = phi.copy()
    for _ in range(1000):
        cur = solver.solve(A_plus @ cur)
    assert np.max(np.abs(np.abs(cur) ** 2 - d0)) < 1e-10


def test_norm_accounting(delta_params, coarse_grid):
    run = evolve_grid(delta_params, coarse_grid, t_max=6.0, n_snapshots=7)
    budget = run.norms + run.absorbed
    assert np.max(np.abs(budget - run.norms[0])) < 1e-6
    assert np.all(np.diff(run.norms) <= 1e-12)


def test_absorber_zero_strength_is_wall():
    g = GridSpec(x_hi=60.0, dx=0.05, dt=0.02, absorber_start=35.0,
                 absorber_strength=0.0)
    assert absorber_reflection(g, 1.0) == pytest.approx(1.0, abs=1e-9)
    assert absorber_reflection_packet(g, 1.0) == pytest.approx(1.0, abs=1e-3)


def test_absorber_default_profile_meets_budget():
    g = GridSpec(x_hi=170.0, dx=0.02, dt=0.01, absorber_start=40.0)
    worst, report = absorber_calibrate(g, k_values=(0.3, 0.6, 1.0, 1.8, 3.0))
    assert worst < 1e-6
    assert set(report) == {0.3, 0.6, 1.0, 1.8, 3.0}


def test_absorber_width_monotonicity():
    r = []
    for x_hi in (100.0, 160.0):
        g = GridSpec(x_hi=x_hi, dx=0.02, dt=0.01, absorber_start=40.0)
        r.append(absorber_reflection(g, 0.5))
    assert r[1] < r[0]


def test_packet_vs_stationary_consistency():
    """The packet-averaged survivor is consistent with the per-k coefficient
    (within the packet's spectral width effects)."""
    g = GridSpec(x_hi=120.0, dx=0.04, dt=0.02, absorber_start=40.0)
    pk = absorber_reflection_packet(g, 1.5)
    st = absorber_reflection(g, 1.5)
    assert pk < 1e-4 and st < 1e-8 and pk >= st * 0.1


def test_second_order_self_convergence(delta_params):
    """Halving dx and dt cuts the observable error by ~4 (Richardson)."""
    probes = []
    for dx, dt in ((0.08, 0.02), (0.04, 0.01), (0.02, 0.005)):
        grid = GridSpec(x_hi=60.0, dx=dx, dt=dt, absorber_start=35.0)
        run = evolve_grid(delta_params, grid, t_max=4.0, n_snapshots=3)
        ix = int(round(6.0 / dx))
        probes.append(abs(run.field.values[-1, ix]) ** 2)
    e1 = abs(probes[0] - probes[2])
    e2 = abs(probes[1] - probes[2])
    ratio = e1 / e2
    assert 2.5 < ratio < 7.0  # ~4 + higher-order contamination


def test_domain_too_small_error(delta_params):
    grid = GridSpec(x_hi=12.0, dx=0.02, dt=0.004, absorber_start=10.0,
                    absorber_strength=0.0)
    with pytest.raises((ConfigError,)):
        evolve_grid(delta_params, grid, t_max=40.0, n_snapshots=5)
