"""Propagator: free flow, Strang stepping, exact-solution benchmarks."""

import numpy as np
import pytest

from nlslab.fields import Field, GridSpec
from nlslab.models import FreeModel, PowerLaw
from nlslab.observables import energy
from nlslab.propagation import (BlowUpError, StepperConfig, free_propagate,
                                propagate, strang_step)
from nlslab.spectral import l2_norm

from conftest import gaussian_field, random_complex_field, sech_field

SOLITON_MODEL = PowerLaw(terms=((-1.0, 3.0),))


def soliton_error(dt, T=1.0, N=512, L=20.0):
    grid = GridSpec(n=1, N=N, L=L)
    u0 = sech_field(grid)
    traj = propagate(u0, StepperConfig(dt=dt, t0=0.0, t1=T, record_stride=10 ** 9),
                     SOLITON_MODEL)
    exact = np.exp(0.5j * T) / np.cosh(grid.axis)
    diff = Field(grid, traj.snapshots[-1].values - exact)
    return l2_norm(diff), traj


class TestFreePropagate:
    def test_zero_time_is_identity(self, grid1d):
        u = random_complex_field(grid1d, seed=1)
        assert free_propagate(u, 0.0) is u

    def test_group_law_and_unitarity(self, grid1d):
        u = random_complex_field(grid1d, seed=2)
        back = free_propagate(free_propagate(u, 1.7), -1.7)
        assert np.max(np.abs(back.values - u.values)) <= 1e-12
        assert abs(l2_norm(free_propagate(u, 3.0)) - l2_norm(u)) <= 1e-12

    def test_free_gaussian_closed_form(self):
        # u0 = exp(-x^2/2) evolves to (1+it)^{-1/2} exp(-x^2/(2(1+it)))
        grid = GridSpec(n=1, N=1024, L=40.0)
        u0 = gaussian_field(grid, width=1.0)
        t = 5.0
        ut = free_propagate(u0, t)
        z = 1.0 + 1j * t
        exact = z ** -0.5 * np.exp(-grid.axis ** 2 / (2.0 * z))
        assert np.max(np.abs(ut.values - exact)) <= 1e-10
        # mass conserved and width^2 grows as 1 + t^2
        assert abs(l2_norm(ut) - l2_norm(u0)) <= 1e-12
        w2 = float(np.sum(grid.axis ** 2 * ut.rho) / np.sum(ut.rho))
        w0 = float(np.sum(grid.axis ** 2 * u0.rho) / np.sum(u0.rho))
        assert w2 == pytest.approx(w0 * (1.0 + t ** 2), rel=1e-10)


class TestStrangStep:
    def test_free_model_reduces_to_free_propagate(self, grid1d):
        u = random_complex_field(grid1d, seed=3)
        a = strang_step(u, 0.01, FreeModel())
        b = free_propagate(u, 0.01)
        assert np.max(np.abs(a.values - b.values)) <= 1e-13

    def test_mass_preserved_per_step(self, grid1d):
        u = random_complex_field(grid1d, seed=4)
        out = strang_step(u, 0.01, PowerLaw(terms=((1.0, 3.0),)))
        assert abs(l2_norm(out) - l2_norm(u)) <= 1e-13 * l2_norm(u)

    def test_time_reversal(self, grid1d):
        u = gaussian_field(grid1d, width=1.0)
        model = PowerLaw(terms=((1.0, 3.0),))
        back = strang_step(strang_step(u, 1e-2, model), -1e-2, model)
        assert np.max(np.abs(back.values - u.values)) <= 1e-10

    def test_blowup_signal(self):
        grid = GridSpec(n=1, N=256, L=10.0)
        u = gaussian_field(grid, width=1.0, amplitude=4.0)
        model = PowerLaw(terms=((-1.0, 7.0),))
        with pytest.raises(BlowUpError) as exc:
            v = u
            for k in range(2000):
                v = strang_step(v, 1e-3, model, blowup_threshold=8.0, t=k * 1e-3)
        assert exc.value.sup_norm > 8.0
        assert exc.value.t > 0.0


class TestSoliton:
    def test_soliton_l2_error(self):
        err, traj = soliton_error(1e-3)
        assert err <= 1e-6

    def test_mass_drift(self):
        _, traj = soliton_error(1e-3)
        masses = [l2_norm(u) ** 2 for u in traj.snapshots]
        assert max(abs(m - masses[0]) for m in masses) <= 1e-12 * masses[0]

    def test_second_order_in_dt(self):
        e1, _ = soliton_error(4e-3)
        e2, _ = soliton_error(2e-3)
        assert e1 / e2 == pytest.approx(4.0, rel=0.2)


class TestPropagate:
    def test_zero_data_stays_zero(self, grid1d):
        u0 = Field(grid1d, np.zeros(grid1d.shape, dtype=complex))
        traj = propagate(u0, StepperConfig(dt=0.01, t0=0.0, t1=0.1),
                         PowerLaw(terms=((1.0, 3.0),)))
        for u in traj.snapshots:
            assert np.max(np.abs(u.values)) == 0.0

    def test_snapshot_count_and_times(self, grid1d):
        u0 = gaussian_field(grid1d)
        cfg = StepperConfig(dt=0.01, t0=0.0, t1=0.1, record_stride=3)
        traj = propagate(u0, cfg, FreeModel())
        assert np.all(np.diff(traj.times) > 0)
        assert traj.times[0] == 0.0 and traj.times[-1] == pytest.approx(0.1)

    def test_blowup_aborts_cleanly_with_partial_trajectory(self):
        grid = GridSpec(n=1, N=256, L=10.0)
        u0 = gaussian_field(grid, width=1.0, amplitude=4.0)
        model = PowerLaw(terms=((-1.0, 7.0),))
        cfg = StepperConfig(dt=1e-3, t0=0.0, t1=2.0, blowup_threshold=8.0)
        with pytest.raises(BlowUpError) as exc:
            propagate(u0, cfg, model)
        assert len(exc.value.trajectory.times) >= 1

    def test_observer_callbacks(self, grid1d):
        u0 = gaussian_field(grid1d)
        cfg = StepperConfig(dt=0.01, t0=0.0, t1=0.05, record_stride=1)
        traj = propagate(u0, cfg, FreeModel(),
                         observers=[lambda t, u: {"mass": l2_norm(u) ** 2}])
        assert all("mass" in obs for obs in traj.observations)


class TestEnergyDrift:
    def test_energy_drift_small_with_no_secular_trend(self):
        grid = GridSpec(n=1, N=256, L=15.0)
        u0 = gaussian_field(grid, width=1.0)
        model = PowerLaw(terms=((1.0, 3.0),))
        cfg = StepperConfig(dt=1e-3, t0=0.0, t1=10.0, record_stride=500)
        traj = propagate(u0, cfg, model)
        energies = np.array([energy(u, model) for u in traj.snapshots])
        e0 = energies[0]
        drift = np.abs(energies - e0) / abs(e0)
        assert drift.max() <= 1e-6
        # no secular growth: drift at T=10 at most twice the max up to T=5
        half = [d for t, d in zip(traj.times, drift) if t <= 5.0]
        assert drift[-1] <= 2.0 * max(max(half), 1e-12)
