import numpy as np
import pytest

from dpsdr import (
    Dataset,
    KernelSpec,
    ModelSpec,
    SlicePartition,
    candidate_matrix,
    conditional_moments,
    extract_subspace,
    gen_model,
    m_dr,
    m_save,
    m_sir,
    make_slices,
    trace_correlation,
    true_basis,
)

from conftest import FLAT, classical_dr, classical_save, classical_sir, exact_match_spec


def step_dataset():
    """p = 1, x = (0,0,2,2) with slices (1,1,2,2) under a flat kernel."""
    data = Dataset(y=np.array([0.0, 0.0, 10.0, 10.0]),
                   x=np.array([[0.0], [0.0], [2.0], [2.0]]),
                   w=np.array([0.0, 0.3, 0.7, 1.0]))
    return conditional_moments(data, make_slices(data.y, 2), [0.5], FLAT)


class TestSirMatrix:
    def test_identical_slice_means_give_zero(self):
        data = Dataset(y=np.array([0.0, 0.0, 10.0, 10.0]),
                       x=np.array([[1.0, 2.0]] * 4),
                       w=np.array([0.0, 0.3, 0.7, 1.0]))
        mom = conditional_moments(data, make_slices(data.y, 2), [0.5], FLAT)
        np.testing.assert_allclose(m_sir(mom), np.zeros((2, 2)), atol=1e-12)

    def test_single_slice_zero(self):
        rng = np.random.default_rng(0)
        data = Dataset(y=rng.standard_normal(20), x=rng.standard_normal((20, 3)),
                       w=rng.uniform(-1, 1, 20))
        mom = conditional_moments(data, SlicePartition(cut_points=[]), [0.0],
                                  KernelSpec(h=1.0))
        np.testing.assert_allclose(m_sir(mom), np.zeros((3, 3)), atol=1e-12)

    def test_two_slice_hand_value(self):
        # p_l = (1/2, 1/2), V = (0, 2), m = 1: sum p V^2 - m^2 = 1
        np.testing.assert_allclose(m_sir(step_dataset()), [[1.0]], rtol=1e-12)


class TestSaveMatrix:
    def test_matched_moments_give_zero(self):
        # x symmetric within each slice, equal means and covariance: the
        # per-slice centered moments match the local ones exactly
        x = np.array([[1.0], [-1.0], [1.0], [-1.0]])
        data = Dataset(y=np.array([0.0, 0.0, 10.0, 10.0]), x=x,
                       w=np.array([0.0, 0.3, 0.7, 1.0]))
        mom = conditional_moments(data, make_slices(data.y, 2), [0.5], FLAT)
        np.testing.assert_allclose(m_save(mom), np.zeros((1, 1)), atol=1e-12)

    def test_two_slice_hand_value(self):
        # sigma = 1, R = (0, 4), V = (0, 2): inner_l = 1 - R_l + V_l^2 = 1
        np.testing.assert_allclose(m_save(step_dataset()), [[1.0]], rtol=1e-12)

    def test_always_psd(self):
        rng = np.random.default_rng(1)
        for seed in range(5):
            data = gen_model(ModelSpec("II", n=120, p=4), seed)
            mom = conditional_moments(data, make_slices(data.y, 5),
                                      [rng.uniform(-0.8, 0.8)], KernelSpec(h=0.5))
            M = m_save(mom)
            np.testing.assert_allclose(M, M.T, atol=1e-10)
            assert np.linalg.eigvalsh(M).min() >= -1e-8


class TestDrMatrix:
    def test_matched_moments_give_zero(self):
        x = np.array([[1.0], [-1.0], [1.0], [-1.0]])
        data = Dataset(y=np.array([0.0, 0.0, 10.0, 10.0]), x=x,
                       w=np.array([0.0, 0.3, 0.7, 1.0]))
        mom = conditional_moments(data, make_slices(data.y, 2), [0.5], FLAT)
        np.testing.assert_allclose(m_dr(mom), np.zeros((1, 1)), atol=1e-12)

    def test_two_slice_scalar_brute_force(self):
        # independent scalar evaluation of the displayed formula:
        # R = (0, 4), sigma = 1, V = (0, 2), p = (1/2, 1/2)
        first = 2.0 * (0.5 * (0.0 - 1.0) ** 2 + 0.5 * (4.0 - 1.0) ** 2)
        a = 0.5 * 0.0 + 0.5 * 4.0
        expected = first + 2.0 * a * a + 2.0 * a * a
        assert expected == 26.0
        np.testing.assert_allclose(m_dr(step_dataset()), [[expected]], rtol=1e-12)

    def test_always_psd(self):
        for seed in range(5):
            data = gen_model(ModelSpec("IV", n=120, p=4), seed)
            mom = conditional_moments(data, make_slices(data.y, 5), [0.2],
                                      KernelSpec(h=0.5))
            M = m_dr(mom)
            np.testing.assert_allclose(M, M.T, atol=1e-10)
            assert np.linalg.eigvalsh(M).min() >= -1e-8


class TestClassicalOracles:
    """With exact-match kernel weighting the local matrices must equal the
    classical slice-and-average constructions."""

    @pytest.mark.parametrize("method,oracle", [
        ("sir", classical_sir), ("save", classical_save), ("dr", classical_dr),
    ])
    def test_matches_classical(self, discrete_w_dataset, method, oracle):
        data, part = discrete_w_dataset
        spec = exact_match_spec(data.w)
        labels = part.assign(data.y)
        fn = {"sir": m_sir, "save": m_save, "dr": m_dr}[method]
        for w in (0.0, 1.0):
            mom = conditional_moments(data, part, [w], spec)
            mask = data.w[:, 0] == w
            expected = oracle(data.x[mask], labels[mask])
            np.testing.assert_allclose(fn(mom), expected, atol=1e-10)


class TestCandidateMatrix:
    def test_identity_sigma_gives_g_equal_m(self):
        # x chosen so the local second moment is exactly I and the mean 0
        x = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]] * 2)
        y = np.array([0.0, 0.0, 0.0, 0.0, 10.0, 10.0, 10.0, 10.0])
        data = Dataset(y=y, x=x, w=np.linspace(0, 1, 8))
        part = make_slices(y, 2)
        cand = candidate_matrix(data, part, [0.5], FLAT, "sir")
        np.testing.assert_allclose(cand.sigma, np.eye(2), atol=1e-12)
        np.testing.assert_allclose(cand.G, cand.M, atol=1e-6)

    def test_sir_span_invariant_under_diagonal_scaling(self, discrete_w_dataset):
        data, part = discrete_w_dataset
        spec = exact_match_spec(data.w)
        scale = np.array([2.0, 0.5, 4.0])
        scaled = Dataset(y=data.y, x=data.x * scale, w=data.w)
        # the SIR matrix has rank H - 1 = 2; the invariant is its column space
        b1 = extract_subspace(candidate_matrix(data, part, [0.0], spec, "sir"), 2)
        b2 = extract_subspace(candidate_matrix(scaled, part, [0.0], spec, "sir"), 2)
        # the scaled-space span maps back through the scaling
        back = b2.basis * scale[:, None]
        assert trace_correlation(b1.basis, back) >= 1.0 - 1e-6

    def test_model_i_alignment(self):
        data = gen_model(ModelSpec("I", n=2000, p=5), 11)
        part = make_slices(data.y, 5)
        cand = candidate_matrix(data, part, [0.5], KernelSpec(h=0.3), "sir")
        est = extract_subspace(cand, 1)
        truth = true_basis(ModelSpec("I", n=2000, p=5), [0.5])
        assert trace_correlation(est.basis, truth.basis) >= 0.95

    def test_unknown_method(self, discrete_w_dataset):
        data, part = discrete_w_dataset
        with pytest.raises(ValueError, match="unknown method"):
            candidate_matrix(data, part, [0.0], FLAT, "pca")


class TestExtractSubspace:
    def test_diagonal(self):
        est = extract_subspace(np.diag([3.0, 1.0, 0.0]), 1)
        np.testing.assert_allclose(est.values, [3.0, 1.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(est.basis[:, 0], [1.0, 0.0, 0.0], atol=1e-12)

    def test_empty_basis(self):
        est = extract_subspace(np.eye(3), 0)
        assert est.basis.shape == (3, 0)

    def test_two_by_two_hand_eigen(self):
        est = extract_subspace(np.array([[2.0, 1.0], [1.0, 2.0]]), 1)
        np.testing.assert_allclose(est.values, [3.0, 1.0], rtol=1e-12)
        np.testing.assert_allclose(est.basis[:, 0], np.full(2, 1 / np.sqrt(2)),
                                   rtol=1e-12)

    def test_sign_convention(self):
        est = extract_subspace(np.diag([5.0, 2.0]), 2)
        for j in range(2):
            col = est.vectors[:, j]
            assert col[np.argmax(np.abs(col))] > 0

    def test_bad_dimension(self):
        with pytest.raises(ValueError):
            extract_subspace(np.eye(3), 4)

    def test_orthonormal_vectors(self):
        rng = np.random.default_rng(2)
        g = rng.standard_normal((5, 5))
        est = extract_subspace(g, 3)
        np.testing.assert_allclose(est.vectors.T @ est.vectors, np.eye(5),
                                   atol=1e-10)
        assert np.all(np.diff(est.values) <= 1e-12)


class TestRankShrinks:
    def test_second_singular_value_ratio_decreases_with_n(self):
        ratios = {}
        for n in (200, 2000):
            vals = []
            for seed in range(20):
                data = gen_model(ModelSpec("I", n=n, p=5), (13, n, seed))
                part = make_slices(data.y, 5)
                h = 2.0 * 1.06 * data.w.std(ddof=1) * n ** -0.2
                cand = candidate_matrix(data, part, [0.0], KernelSpec(h=h), "sir")
                s = extract_subspace(cand, 1).values
                vals.append(s[1] / s[0])
            ratios[n] = np.median(vals)
        assert ratios[2000] < ratios[200]
