"""Symbols, eigensystems, projections, slow/fast split, propagators."""

import numpy as np
import pytest

from spqg.grids import BoxGrid, SpectralField, curl_2d, div, grad, perp_grad
from spqg.norms import l2_norm
from spqg.waves import (
    EigenSystem2D,
    EigenSystem3D,
    PhysicalParams,
    assemble_symbol_2d,
    assemble_symbol_3d,
    eigendecompose_2d,
    eigendecompose_3d,
    eigensystem_2d,
    linear_propagate,
    project,
    propagator_matrix,
    slow_fast_split,
)

PARAMS = PhysicalParams(gamma=2.0, delta=0.1, nu=1.0)


def random_field(grid, comps, seed):
    rng = np.random.default_rng(seed)
    return SpectralField.from_physical(grid, rng.standard_normal((comps, *grid.n)))


class TestParams:
    def test_derived_constants(self):
        p = PhysicalParams(gamma=2.0, delta=0.2, nu=4.0)
        assert p.gamma_bar == 0.5
        assert p.epsilon * p.gamma_bar * p.nu == pytest.approx(p.delta, rel=1e-15)

    def test_validation(self):
        with pytest.raises(ValueError):
            PhysicalParams(gamma=1.0, delta=0.1)
        with pytest.raises(ValueError):
            PhysicalParams(gamma=2.0, delta=-0.1)
        with pytest.raises(ValueError):
            PhysicalParams(gamma=2.0, delta=0.1, nu=0.0)


class TestSymbol2D:
    def test_at_origin(self):
        A = assemble_symbol_2d((0.0, 0.0), 1.0)
        expected = np.array([[0, 0, 0], [0, 0, -1], [0, 1, 0]], dtype=complex)
        assert np.array_equal(A, expected)

    def test_hermitian_structure(self):
        for eta in [(1.0, 0.0), (0.3, -2.0), (5.0, 4.0)]:
            H = -1j * assemble_symbol_2d(eta, 2.0)
            assert np.array_equal(H, H.conj().T)

    def test_displayed_entries(self):
        A = assemble_symbol_2d((1.0, 0.0), 2.0)
        assert A[0, 1] == 1j
        assert A[1, 2] == -2.0


class TestSymbol3D:
    def test_rotation_block_frequencies_at_origin(self):
        w, _ = eigendecompose_3d((0.0, 0.0, 0.0), 1.0)
        assert np.allclose(sorted(w), [-1.0, 0.0, 0.0, 1.0], atol=1e-14)

    def test_decoupled_pairs_on_axis(self):
        w, _ = eigendecompose_3d((0.0, 0.0, 2.0), 1.0)
        assert np.allclose(w, [2.0, 1.0, -1.0, -2.0], atol=1e-12)

    def test_hermitian_structure(self):
        H = -1j * assemble_symbol_3d((0.5, -1.0, 2.0), 3.0)
        assert np.array_equal(H, H.conj().T)

    def test_axis_eigenvectors(self):
        # acoustic pair mixes (b, u3); rotation pair mixes (u1, u2)
        _, v = eigendecompose_3d((0.0, 0.0, 2.0), 1.0)
        s = 1.0 / np.sqrt(2.0)
        assert np.allclose(v[0], [s, 0, 0, s], atol=1e-12)
        assert np.allclose(v[1], [0, s, -1j * s, 0], atol=1e-12)


class TestEigen2D:
    def test_frequencies_at_origin(self):
        w, _ = eigendecompose_2d((0.0, 0.0), 1.0)
        assert np.allclose(w, [1.0, 0.0, -1.0], atol=1e-14)

    def test_frequency_formula(self):
        # |eta|^2 = 3, nu = 1 -> p = 2
        w, _ = eigendecompose_2d((np.sqrt(3.0), 0.0), 1.0)
        assert w[0] == pytest.approx(2.0, rel=1e-14)

    def test_kernel_vector_hand_solved(self):
        w, v = eigendecompose_2d((1.0, 0.0), 1.0)
        expected = np.array([1.0, 0.0, 1j]) / np.sqrt(2.0)
        assert np.allclose(v[1], expected, atol=1e-14)
        A = assemble_symbol_2d((1.0, 0.0), 1.0)
        assert np.abs(A @ v[1]).max() <= 1e-14

    def test_eigen_relation_and_orthonormality(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            eta = rng.uniform(-8, 8, 2)
            nu = rng.uniform(0.3, 4.0)
            w, v = eigendecompose_2d(eta, nu)
            A = assemble_symbol_2d(eta, nu)
            for j in range(3):
                assert np.abs(A @ v[j] - 1j * w[j] * v[j]).max() <= 1e-12
            gram = v @ v.conj().T
            assert np.abs(gram - np.eye(3)).max() <= 1e-12


class TestEigen3DReconstruction:
    def test_matrix_reassembly_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            xi = rng.uniform(-6, 6, 3)
            nu = rng.uniform(0.5, 3.0)
            w, v = eigendecompose_3d(xi, nu)
            H = -1j * assemble_symbol_3d(xi, nu)
            rebuilt = (v.T * w) @ np.conj(v)
            assert np.abs(rebuilt - H).max() <= 1e-10 * max(1.0, np.abs(H).max())

    def test_projector_completeness(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            xi = rng.uniform(-6, 6, 3)
            _, v = eigendecompose_3d(xi, 1.0)
            ident = sum(np.outer(v[j], np.conj(v[j])) for j in range(4))
            assert np.abs(ident - np.eye(4)).max() <= 1e-10


@pytest.fixture(scope="module")
def grid2():
    return BoxGrid(2, 48, 8 * np.pi)


def lagrange_projectors(grid, nu):
    """Independent projector oracle via spectral polynomials of H = -iA.

    For eigenvalues {+p, 0, -p}: P0 = I - H^2/p^2, P(+/-) = (H^2 +/- pH)/(2p^2).
    """
    k1, k2 = grid.wavenumbers()
    H = np.zeros((3, 3, *grid.n), dtype=complex)
    H[0, 1] = k1
    H[1, 0] = k1
    H[0, 2] = k2
    H[2, 0] = k2
    H[1, 2] = 1j * nu
    H[2, 1] = -1j * nu
    H2 = np.einsum("ij...,jl...->il...", H, H)
    p = np.sqrt(nu**2 + k1**2 + k2**2)
    eye = np.zeros_like(H)
    for i in range(3):
        eye[i, i] = 1.0
    P0 = eye - H2 / p**2
    Pp = (H2 + p * H) / (2 * p**2)
    Pm = (H2 - p * H) / (2 * p**2)
    return P0, Pp, Pm


class TestProjections:
    def test_against_lagrange_oracle(self, grid2):
        P0, Pp, Pm = lagrange_projectors(grid2, PARAMS.nu)
        f = random_field(grid2, 3, 3)
        for branch, mat in (("0", P0), ("+", Pp), ("-", Pm)):
            want = np.einsum("ij...,j...->i...", mat, f.coeffs)
            got = project(f, branch, PARAMS).coeffs
            assert np.abs(got - want).max() <= 1e-12 * np.abs(f.coeffs).max()

    def test_completeness(self, grid2):
        for seed in range(5):
            f = random_field(grid2, 3, 10 + seed)
            total = sum(project(f, b, PARAMS).coeffs for b in ("0", "+", "-"))
            assert np.abs(total - f.coeffs).max() <= 1e-12 * np.abs(f.coeffs).max()

    def test_idempotence_and_orthogonality(self, grid2):
        f = random_field(grid2, 3, 20)
        plus = project(f, "+", PARAMS)
        again = project(plus, "+", PARAMS)
        assert l2_norm(again - plus) <= 1e-12 * l2_norm(plus)
        cross = project(plus, "-", PARAMS)
        assert l2_norm(cross) <= 1e-12 * l2_norm(f)

    def test_geostrophic_field_is_fixed_by_p0(self, grid2):
        a = random_field(grid2, 1, 30)
        wh = perp_grad(a) * (1.0 / PARAMS.nu)
        f = SpectralField(grid2, np.concatenate([a.coeffs, wh.coeffs]))
        fixed = project(f, "0", PARAMS)
        assert l2_norm(fixed - f) <= 1e-12 * l2_norm(f)


class TestSlowFast:
    def test_paper_identities(self, grid2):
        for seed in range(5):
            f = random_field(grid2, 3, 40 + seed)
            slow, fast = slow_fast_split(f, PARAMS)
            scale = l2_norm(f)
            aS = SpectralField(grid2, slow.coeffs[0:1])
            wS = SpectralField(grid2, slow.coeffs[1:3])
            # nu w_perp + grad a = 0 on the slow part
            wperp = np.stack([-wS.coeffs[1], wS.coeffs[0]])
            bal = PARAMS.nu * wperp + grad(aS).coeffs
            assert np.sqrt((np.abs(bal) ** 2).sum()) <= 1e-10 * scale
            assert l2_norm(div(wS)) <= 1e-10 * scale
            aF = SpectralField(grid2, fast.coeffs[0:1])
            wF = SpectralField(grid2, fast.coeffs[1:3])
            resid = curl_2d(wF) - PARAMS.nu * aF
            assert l2_norm(resid) <= 1e-10 * scale

    def test_geostrophic_input_has_no_fast_part(self, grid2):
        a = random_field(grid2, 1, 50)
        wh = perp_grad(a) * (1.0 / PARAMS.nu)
        f = SpectralField(grid2, np.concatenate([a.coeffs, wh.coeffs]))
        _, fast = slow_fast_split(f, PARAMS)
        assert l2_norm(fast) <= 1e-12 * l2_norm(f)

    def test_pv_unchanged_by_slow_projection(self, grid2):
        for seed in range(5):
            f = random_field(grid2, 3, 60 + seed)
            slow, _ = slow_fast_split(f, PARAMS)

            def pv(c):
                wh = SpectralField(grid2, c[1:3])
                return curl_2d(wh).coeffs[0] - PARAMS.nu * c[0]

            diff = np.abs(pv(f.coeffs) - pv(slow.coeffs)).max()
            assert diff <= 1e-10 * np.abs(pv(f.coeffs)).max()


class TestPropagator:
    def test_zero_time_identity(self, grid2):
        f = random_field(grid2, 3, 70)
        out = linear_propagate(f, 0.0, PARAMS)
        assert l2_norm(out - f) <= 1e-13 * l2_norm(f)

    def test_unitarity(self, grid2):
        f = random_field(grid2, 3, 71)
        for t in (0.1, 1.0, 7.3):
            out = linear_propagate(f, t, PARAMS)
            assert abs(l2_norm(out) - l2_norm(f)) <= 1e-12 * l2_norm(f)

    def test_group_law(self, grid2):
        f = random_field(grid2, 3, 72)
        one = linear_propagate(linear_propagate(f, 0.4, PARAMS), 0.35, PARAMS)
        two = linear_propagate(f, 0.75, PARAMS)
        assert l2_norm(one - two) <= 1e-12 * l2_norm(f)

    def test_mean_mode_rotation_closed_form(self, grid2):
        # at eta = 0 the velocity rotates by gamma_bar*nu*t/delta, a is fixed
        c = np.zeros((3, *grid2.n), dtype=complex)
        c[0, 0, 0] = 1.2 * grid2.npoints
        c[1, 0, 0] = 0.5 * grid2.npoints
        c[2, 0, 0] = -0.8 * grid2.npoints
        f = SpectralField(grid2, c)
        t = 0.3
        out = linear_propagate(f, t, PARAMS).coeffs[:, 0, 0] / grid2.npoints
        phi = PARAMS.gamma_bar * PARAMS.nu * t / PARAMS.delta
        w1 = np.cos(phi) * 0.5 + np.sin(phi) * (-0.8)
        w2 = -np.sin(phi) * 0.5 + np.cos(phi) * (-0.8)
        assert abs(out[0] - 1.2) <= 1e-12
        assert abs(out[1] - w1) <= 1e-12
        assert abs(out[2] - w2) <= 1e-12

    def test_small_time_consistency_richardson(self, grid2):
        # ||(prop(tau) - (I - (gb tau/delta) A)) f|| = O(tau^2): ratios ~ 4
        f = random_field(grid2, 3, 73)
        k1, k2 = grid2.wavenumbers()
        c = f.coeffs
        Af = np.stack([
            1j * k1 * c[1] + 1j * k2 * c[2],
            1j * k1 * c[0] - PARAMS.nu * c[2],
            1j * k2 * c[0] + PARAMS.nu * c[1],
        ])
        errs = []
        for tau in (4e-4, 2e-4, 1e-4):
            lin = c - (PARAMS.gamma_bar * tau / PARAMS.delta) * Af
            out = linear_propagate(f, tau, PARAMS).coeffs
            errs.append(np.sqrt((np.abs(out - lin) ** 2).sum()))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
        assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)

    def test_3d_propagator_unitary(self):
        grid3 = BoxGrid(3, 12, 4 * np.pi)
        f = random_field(grid3, 4, 74)
        out = linear_propagate(f, 0.7, PARAMS)
        assert abs(l2_norm(out) - l2_norm(f)) <= 1e-12 * l2_norm(f)

    def test_passive_component_untouched(self, grid2):
        f = random_field(grid2, 4, 75)
        out = linear_propagate(f, 0.9, PARAMS)
        assert np.array_equal(out.coeffs[3], f.coeffs[3])


class TestDeterminism:
    def test_2d_bit_identical(self):
        grid = BoxGrid(2, 24, 2 * np.pi)
        a = EigenSystem2D(grid, 1.0)
        b = EigenSystem2D(grid, 1.0)
        assert np.array_equal(a.vecs, b.vecs)
        assert np.array_equal(a.freqs, b.freqs)

    def test_3d_bit_identical_with_degenerate_plane(self):
        # nu on the lattice puts exact eigenvalue ties at xi_h = 0
        grid = BoxGrid(3, 8, 2 * np.pi)
        a = EigenSystem3D(grid, 1.0)
        b = EigenSystem3D(grid, 1.0)
        assert np.array_equal(a.vecs, b.vecs)
        assert np.array_equal(a.freqs, b.freqs)

    def test_cache_returns_same_object(self):
        grid = BoxGrid(2, 24, 2 * np.pi)
        assert eigensystem_2d(grid, 1.0) is eigensystem_2d(grid, 1.0)


class TestProjections3D:
    def test_zero_wave_sets_complete_and_orthogonal(self):
        grid3 = BoxGrid(3, 12, 4 * np.pi)
        f = random_field(grid3, 4, 90)
        zero = project(f, "zero", PARAMS)
        wave = project(f, "wave", PARAMS)
        scale = l2_norm(f)
        assert l2_norm(zero + wave - f) <= 1e-12 * scale
        assert l2_norm(project(zero, "wave", PARAMS)) <= 1e-12 * scale
        again = project(zero, "zero", PARAMS)
        assert l2_norm(again - zero) <= 1e-12 * scale


def test_matrix_multiplier_application(grid2):
    from spqg.grids import apply_multiplier

    f = random_field(grid2, 3, 91)
    mat = propagator_matrix(grid2, PARAMS, 0.21)
    via_helper = apply_multiplier(f, mat)
    direct = np.einsum("il...,l...->i...", mat, f.coeffs)
    assert np.array_equal(via_helper.coeffs, direct)


def test_propagator_matrix_reality_preserved(grid2):
    # solver states are always dealiased, so the unpaired Nyquist modes
    # (where +/- eta pairing degenerates) carry no content
    from spqg.grids import dealias

    f = dealias(random_field(grid2, 3, 80))
    mat = propagator_matrix(grid2, PARAMS, 0.37)
    out = np.einsum("il...,l...->i...", mat, f.coeffs)
    phys = np.fft.ifftn(out, axes=(1, 2))
    assert np.abs(phys.imag).max() <= 1e-12 * max(np.abs(phys.real).max(), 1e-30)
