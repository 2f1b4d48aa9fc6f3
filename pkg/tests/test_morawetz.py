"""Morawetz diagnostics: rates, remainders, positivity, integrated identity."""

import numpy as np
import pytest

from nlslab.fields import Field, GridSpec
from nlslab.models import FreeModel, HartreeKernel, PowerLaw
from nlslab.morawetz import (bilinear_rate, focusing_margin, h12_bound_check,
                             hartree_rate, integrated_identity, nls_rate,
                             original_morawetz_rate, pointwise_1d_bound,
                             pointwise_lemma_margin, quad_J, quad_M,
                             remainder_R)
from nlslab.observables import current
from nlslab.propagation import StepperConfig, propagate
from nlslab.spectral import gradient, l2_norm
from nlslab.weights import (AbsX, inv_radius_lattice_constant, weight_fields)
from nlslab.ensemble import random_field

from conftest import gaussian_field, random_complex_field, sech_field

DEFOCUSING = PowerLaw(terms=((1.0, 3.0),))


def positions(grid):
    """(N^n, n) array of site coordinates."""
    mesh = np.meshgrid(*([grid.axis] * grid.n), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


class TestQuadJandM:
    def test_real_field_has_zero_m(self, grid1d):
        u = gaussian_field(grid1d)
        w = weight_fields(AbsX(), grid1d)
        rho = u.with_values(u.rho)
        assert abs(quad_M(rho, current(u), w)) <= 1e-14

    def test_point_mass_has_zero_j(self, grid1d):
        w = weight_fields(AbsX(), grid1d)
        vals = np.zeros(grid1d.shape, dtype=complex)
        vals[grid1d.N // 2] = 1.0 / grid1d.dx
        rho = Field(grid1d, vals)
        assert abs(quad_J(rho, w)) <= 1e-13

    def test_dj_dt_matches_m_second_order(self):
        # the centered difference of J carries an O(h^2) error on top of a
        # small h-independent spatial floor; differencing the signed mismatch
        # between h-levels cancels the floor and isolates the O(h^2) part
        grid = GridSpec(n=1, N=256, L=15.0)
        u0 = gaussian_field(grid, width=1.0, velocity=(0.5,))
        w = weight_fields(AbsX(), grid)
        cfg = StepperConfig(dt=1e-3, t0=0.0, t1=0.4, record_stride=5)
        traj = propagate(u0, cfg, DEFOCUSING)
        js = [quad_J(u.with_values(u.rho), w) for u in traj.snapshots]
        i0 = traj.times.index(0.2)
        u = traj.snapshots[i0]
        m = quad_M(u.with_values(u.rho), current(u), w)

        def signed_mismatch(steps):
            h = traj.times[i0 + steps] - traj.times[i0]
            return (js[i0 + steps] - js[i0 - steps]) / (2 * h) - m

        d1, d2, d4 = (signed_mismatch(s) for s in (4, 8, 16))
        assert (d4 - d2) / (d2 - d1) == pytest.approx(4.0, rel=0.2)


class TestRemainder:
    def test_vanishes_in_one_dimension(self, grid1d):
        u = random_complex_field(grid1d, seed=5)
        w = weight_fields(AbsX(), grid1d)
        scale = l2_norm(u) ** 2 + sum(l2_norm(g) ** 2 for g in gradient(u))
        assert abs(remainder_R(u, w)) <= 1e-10 * scale

    def test_nonnegative_2d(self):
        grid = GridSpec(n=2, N=32, L=5.0)
        w = weight_fields(AbsX(), grid)
        for seed in (1, 2, 3):
            u = random_complex_field(grid, seed=seed)
            scale = l2_norm(u) ** 2 + sum(l2_norm(g) ** 2 for g in gradient(u))
            assert remainder_R(u, w) >= -1e-8 * scale

    def test_phase_invariance(self):
        grid = GridSpec(n=2, N=32, L=5.0)
        w = weight_fields(AbsX(), grid)
        u = random_complex_field(grid, seed=7)
        r0 = remainder_R(u, w)
        r1 = remainder_R(u.with_values(np.exp(1.3j) * u.values), w)
        assert abs(r1 - r0) <= 1e-12 * max(abs(r0), 1.0)

    def test_matches_brute_force_double_sum(self):
        # O(N^4) double sum of the two-term form with the same analytic
        # difference kernels (origin rule: diag tau_2/(2 dx), off-diag 0)
        grid = GridSpec(n=2, N=16, L=3.0)
        w = weight_fields(AbsX(), grid)
        u = gaussian_field(grid, width=0.8, velocity=(0.4, -0.3))
        got = remainder_R(u, w)

        pos = positions(grid)
        diff = pos[:, None, :] - pos[None, :, :]          # (S, S, 2)
        r = np.linalg.norm(diff, axis=-1)
        sing = r < grid.dx / 2.0
        safe = np.where(sing, 1.0, r)
        tau = inv_radius_lattice_constant(2)
        H = np.empty((2, 2) + r.shape)
        for i in range(2):
            for j in range(2):
                H[i, j] = ((1.0 if i == j else 0.0)
                           - diff[..., i] * diff[..., j] / safe ** 2) / safe
                H[i, j][sing] = tau / (2.0 * grid.dx) if i == j else 0.0

        rho = u.rho.ravel()
        grads = [g.values.ravel() for g in gradient(u)]
        ubar = np.conj(u.values.ravel())
        dv = grid.cell_volume
        brute = 0.0
        for i in range(2):
            for j in range(2):
                gg = np.real(np.conj(grads[i]) * grads[j])
                brute += dv * dv * (rho @ H[i, j] @ gg)
                a = ubar * grads[i]
                b = ubar * grads[j]
                brute -= dv * dv * np.real(np.conj(a) @ (H[i, j] @ b))
        assert got == pytest.approx(brute, rel=1e-6)


class TestRates:
    def test_soliton_kinetic_term_oracle(self):
        # K = ||rho'||_2^2 in 1d; int (d/dx sech^2)^2 dx = 16/15
        grid = GridSpec(n=1, N=512, L=20.0)
        u = sech_field(grid)
        w = weight_fields(AbsX(), grid)
        K, _, _ = nls_rate(u, PowerLaw(terms=((-1.0, 3.0),)), w)
        assert K == pytest.approx(16.0 / 15.0, rel=1e-8)

    def test_defocusing_terms_nonnegative_2d(self):
        grid = GridSpec(n=2, N=32, L=5.0)
        w = weight_fields(AbsX(), grid)
        u = random_complex_field(grid, seed=11)
        K, P, R = nls_rate(u, DEFOCUSING, w)
        scale = l2_norm(u) ** 2 + sum(l2_norm(g) ** 2 for g in gradient(u))
        assert K >= 0.0
        assert P >= -1e-8 * scale
        assert R >= -1e-8 * scale

    def test_free_model_has_zero_potential_term(self, grid1d):
        w = weight_fields(AbsX(), grid1d)
        u = gaussian_field(grid1d)
        _, P, _ = nls_rate(u, FreeModel(), w)
        assert P == 0.0

    def test_hartree_positivity_radial_bump(self):
        grid = GridSpec(n=2, N=64, L=8.0)
        w = weight_fields(AbsX(), grid)
        u = gaussian_field(grid, width=1.2)
        kern = HartreeKernel(family="gaussian", a=1.0)
        K, Phar, R = hartree_rate(u, kern, w)
        scale = l2_norm(u) ** 2 + sum(l2_norm(g) ** 2 for g in gradient(u))
        assert K >= 0.0
        assert Phar >= -1e-8 * scale
        assert R >= -1e-8 * scale

    def test_hartree_zero_coupling_gives_zero_phar(self, grid2d):
        w = weight_fields(AbsX(), grid2d)
        u = gaussian_field(grid2d)
        kern = HartreeKernel(family="gaussian", a=1.0, coupling=0.0)
        _, Phar, _ = hartree_rate(u, kern, w)
        assert Phar == 0.0

    def test_hartree_phar_matches_triple_sum(self):
        grid = GridSpec(n=2, N=16, L=3.0)
        w = weight_fields(AbsX(), grid)
        u = gaussian_field(grid, width=0.8)
        kern = HartreeKernel(family="gaussian", a=1.0, coupling=1.3)
        _, got, _ = hartree_rate(u, kern, w)

        pos = positions(grid)
        diff = pos[:, None, :] - pos[None, :, :]
        r = np.linalg.norm(diff, axis=-1)
        safe = np.where(r > 0, r, 1.0)
        rho = u.rho.ravel()
        dv = grid.cell_volume
        brute = 0.0
        for a in range(2):
            gradh = np.where(r > 0, diff[..., a] / safe, 0.0)
            gv = kern.coupling * (-2.0 * kern.a * diff[..., a]
                                  * np.exp(-kern.a * r ** 2))
            force = dv * (gv @ rho)                  # (grad_a V) * rho
            brute += dv * dv * (rho @ gradh @ (rho * force))
        assert got == pytest.approx(brute, rel=1e-6)


class TestBilinear:
    def test_reduction_to_single_field(self):
        grid = GridSpec(n=2, N=32, L=5.0)
        w = weight_fields(AbsX(), grid)
        u = random_complex_field(grid, seed=13)
        (c1, c2, c3), r12 = bilinear_rate(u, u, DEFOCUSING, w)
        K, P, R = nls_rate(u, DEFOCUSING, w)
        assert c1 == pytest.approx(K, abs=1e-12 * max(abs(K), 1.0))
        assert c2 + c3 == pytest.approx(P, abs=1e-12 * max(abs(P), 1.0))
        assert r12 == pytest.approx(R, abs=1e-12 * max(abs(R), 1.0))

    def test_zero_second_field(self, grid2d):
        w = weight_fields(AbsX(), grid2d)
        u = random_complex_field(grid2d, seed=14)
        z = Field(grid2d, np.zeros(grid2d.shape, dtype=complex))
        (c1, c2, c3), r12 = bilinear_rate(u, z, DEFOCUSING, w)
        assert c1 == c2 == c3 == r12 == 0.0

    def test_r12_nonnegative_random_pairs(self):
        grid = GridSpec(n=2, N=32, L=5.0)
        w = weight_fields(AbsX(), grid)
        for seed in (21, 22, 23):
            u1 = random_complex_field(grid, seed=seed)
            u2 = random_complex_field(grid, seed=seed + 100)
            _, r12 = bilinear_rate(u1, u2, DEFOCUSING, w)
            scale = (l2_norm(u1) + l2_norm(u2)) ** 2
            assert r12 >= -1e-8 * scale


class TestIntegratedIdentity:
    def _trajectory(self, stride=10):
        grid = GridSpec(n=1, N=256, L=15.0)
        u0 = gaussian_field(grid, width=1.0)
        cfg = StepperConfig(dt=1e-3, t0=0.0, t1=0.3, record_stride=stride)
        return propagate(u0, cfg, DEFOCUSING)

    def test_too_few_frames_rejected(self):
        traj = self._trajectory(stride=10 ** 9)
        w = weight_fields(AbsX(), traj.snapshots[0].grid)
        with pytest.raises(ValueError):
            integrated_identity(traj, DEFOCUSING, w)

    def test_residual_small_and_m_nondecreasing(self):
        traj = self._trajectory()
        w = weight_fields(AbsX(), traj.snapshots[0].grid)
        rep = integrated_identity(traj, DEFOCUSING, w)
        dM = rep.boundary_values[1] - rep.boundary_values[0]
        assert rep.identity_residual <= 1e-4 * abs(dM)
        ms = [s.M for s in rep.samples]
        scale = max(abs(m) for m in ms)
        assert all(b - a >= -1e-8 * scale for a, b in zip(ms, ms[1:]))
        # J convex at the sample level
        js = [s.J for s in rep.samples]
        second = [a - 2 * b + c for a, b, c in zip(js, js[1:], js[2:])]
        assert all(s >= -1e-8 * max(abs(j) for j in js) for s in second)

    def test_bound_ratios_and_fitted_c(self):
        traj = self._trajectory()
        w = weight_fields(AbsX(), traj.snapshots[0].grid)
        rep = integrated_identity(traj, DEFOCUSING, w)
        assert 0.0 < rep.bound_ratio_228 <= 1.0 + 1e-6
        assert np.isfinite(rep.bound_ratio_a11)
        # 1d: K = (1/2) <rho', 2 rho'> = ||rho'||^2 = ||rho; Hdot^1||^2, c = 2
        assert rep.fitted_c_223 == pytest.approx(2.0, rel=1e-12)
        assert rep.fitted_c_max_dev <= 1e-3

    def test_free_gaussian_residual_second_order_in_dt(self):
        grid = GridSpec(n=1, N=512, L=15.0)
        u0 = gaussian_field(grid, width=1.5)
        w = weight_fields(AbsX(), grid)

        def residual(dt):
            cfg = StepperConfig(dt=dt, t0=0.0, t1=0.3, record_stride=10)
            traj = propagate(u0, cfg, FreeModel())
            return integrated_identity(traj, FreeModel(), w).identity_residual

        r1, r2 = residual(1e-3), residual(5e-4)
        assert r1 <= 1e-5
        assert r1 / r2 == pytest.approx(4.0, rel=0.2)


class TestH12Bound:
    def test_real_field_gives_zero(self, grid2d):
        assert h12_bound_check(gaussian_field(grid2d)) <= 1e-14

    def test_zero_field_gives_zero(self, grid2d):
        z = Field(grid2d, np.zeros(grid2d.shape, dtype=complex))
        assert h12_bound_check(z) == 0.0

    def test_ensemble_ratio_bounded_and_grid_stable(self):
        def max_ratio(N):
            grid = GridSpec(n=2, N=N, L=8.0)
            return max(h12_bound_check(random_field(seed, grid, modes=4))
                       for seed in range(1, 11))

        r32, r64 = max_ratio(32), max_ratio(64)
        assert r64 <= 100.0
        assert abs(r64 - r32) <= 0.1 * r32


class TestOriginalMorawetz:
    def test_one_dimension_rejected(self, grid1d):
        with pytest.raises(ValueError):
            original_morawetz_rate(gaussian_field(grid1d), DEFOCUSING)

    def test_second_term_is_two_pi_rho_in_3d(self, grid3d):
        u = gaussian_field(grid3d, width=1.0)
        _, term2, _ = original_morawetz_rate(u, DEFOCUSING)
        assert np.allclose(term2.values.real, 2.0 * np.pi * u.rho, atol=1e-12)

    def test_free_model_third_term_zero(self, grid3d):
        u = gaussian_field(grid3d)
        _, _, term3 = original_morawetz_rate(u, FreeModel())
        assert np.max(np.abs(term3.values)) == 0.0

    def test_defocusing_terms_pointwise_nonnegative_3d(self, grid3d):
        u = gaussian_field(grid3d, width=1.0, velocity=(0.3, -0.2, 0.1))
        t1, t2, t3 = original_morawetz_rate(u, DEFOCUSING)
        for term in (t1, t2, t3):
            vals = term.values.real
            assert vals.min() >= -1e-8 * max(vals.max(), 1e-30)


class TestFocusingMargin:
    def test_small_data_margin_positive(self):
        grid = GridSpec(n=1, N=256, L=15.0)
        u = sech_field(grid, amplitude=0.1)
        fm = focusing_margin(u, 5.0)
        assert fm.grad_term > 0
        assert fm.margin > 0

    def test_zero_field(self, grid1d):
        z = Field(grid1d, np.zeros(grid1d.shape, dtype=complex))
        fm = focusing_margin(z, 5.0)
        assert (fm.grad_term, fm.potential_term, fm.margin) == (0.0, 0.0, 0.0)

    def test_low_exponent_rejected(self, grid1d):
        with pytest.raises(ValueError):
            focusing_margin(sech_field(grid1d), 3.0)

    def test_higher_dimension_rejected(self, grid2d):
        with pytest.raises(ValueError):
            focusing_margin(gaussian_field(grid2d), 5.0)


class TestPointwiseBounds:
    def test_lemma_margin_holds_per_frame(self, grid1d):
        for seed in (1, 2, 3):
            u = random_complex_field(grid1d, seed=seed)
            lhs, rhs = pointwise_lemma_margin(u)
            assert lhs <= rhs * (1.0 + 1e-6)

    def test_soliton_window_ratio(self):
        grid = GridSpec(n=1, N=512, L=20.0)
        cfg = StepperConfig(dt=1e-3, t0=0.0, t1=1.0, record_stride=50)
        traj = propagate(sech_field(grid), cfg, PowerLaw(terms=((-1.0, 3.0),)))
        assert 0.0 < pointwise_1d_bound(traj) <= 1.0 + 1e-6

    def test_zero_trajectory(self, grid1d):
        from nlslab.propagation import TrajectoryRecord
        z = Field(grid1d, np.zeros(grid1d.shape, dtype=complex))
        traj = TrajectoryRecord()
        for t in (0.0, 0.5, 1.0):
            traj.append(t, z, {})
        assert pointwise_1d_bound(traj) == 0.0

    def test_higher_dimension_rejected(self, grid2d):
        from nlslab.propagation import TrajectoryRecord
        traj = TrajectoryRecord()
        for t in (0.0, 1.0):
            traj.append(t, gaussian_field(grid2d), {})
        with pytest.raises(ValueError):
            pointwise_1d_bound(traj)
