import unittest
import logging
import numpy as np
from hypothesis import given, settings, assume, strategies as st

from utils.multilinear import (
    LEVI_CIVITA, wedge3, hodge_star, hodge_unstar, wedge6, wedge6_raw, stratify,
    cofactor, det3, trace_cofactor, det_cayley_hamilton, quadratic_form_Q,
    quadratic_form_Q_eigen, check_unit, matrix_identity_residuals,
)
from utils.common import relative_residual, tree_sum, fit_convergence_order, extrapolate_limit
from utils.errors import PreconditionError

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S'
)
logger = logging.getLogger(__name__)

finite = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)
vectors = st.tuples(finite, finite, finite)
matrices = st.tuples(vectors, vectors, vectors)


class TestMultilinear(unittest.TestCase):
    """Wedge products, cofactors and the quadratic form Q."""

    def setUp(self):
        self.rng = np.random.default_rng(7)

    def test_levi_civita_signs(self):
        """Levi-Civita symbol on a few permutations."""
        self.assertEqual(LEVI_CIVITA[0, 1, 2], 1.0)
        self.assertEqual(LEVI_CIVITA[1, 0, 2], -1.0)
        self.assertEqual(LEVI_CIVITA[2, 0, 1], 1.0)
        self.assertEqual(LEVI_CIVITA[0, 0, 2], 0.0)

    def test_wedge3_is_star_of_cross(self):
        """a ^ b equals the Hodge star of a x b."""
        a = self.rng.standard_normal((50, 3))
        b = self.rng.standard_normal((50, 3))
        np.testing.assert_allclose(wedge3(a, b), hodge_star(np.cross(a, b)), atol=1e-14)
        np.testing.assert_allclose(hodge_unstar(wedge3(a, b)), np.cross(a, b), atol=1e-14)

    def test_star_of_basis(self):
        """*e3 = e12, *e2 = -e13, *e1 = e23."""
        np.testing.assert_array_equal(hodge_star([0.0, 0.0, 1.0]), [1.0, 0.0, 0.0])
        np.testing.assert_array_equal(hodge_star([0.0, 1.0, 0.0]), [0.0, -1.0, 0.0])
        np.testing.assert_array_equal(hodge_star([1.0, 0.0, 0.0]), [0.0, 0.0, 1.0])

    def test_wedge6_matches_raw(self):
        """Stratified and raw wedge products in R^6 agree."""
        ax, ay, bx, by = self.rng.standard_normal((4, 20, 3))
        strat = wedge6((ax, ay), (bx, by))
        raw = wedge6_raw(np.concatenate([ax, ay], axis=-1), np.concatenate([bx, by], axis=-1))
        np.testing.assert_allclose(strat.flatten(), raw, atol=1e-13)
        np.testing.assert_allclose(stratify(raw).norm(), np.linalg.norm(raw, axis=-1), rtol=1e-13)

    def test_cofactor_adjugate(self):
        """A cof(A)^T = det(A) I."""
        a = self.rng.standard_normal((30, 3, 3))
        prod = a @ np.swapaxes(cofactor(a), -1, -2)
        expected = det3(a)[:, None, None] * np.eye(3)
        np.testing.assert_allclose(prod, expected, atol=1e-12)
        np.testing.assert_allclose(det3(a), np.linalg.det(a), atol=1e-12)
        np.testing.assert_allclose(trace_cofactor(a), np.trace(cofactor(a), axis1=-2, axis2=-1), atol=1e-12)

    def test_cayley_hamilton(self):
        """Determinant from traces of powers."""
        a = self.rng.standard_normal((30, 3, 3))
        np.testing.assert_allclose(det_cayley_hamilton(a), det3(a), atol=1e-11)

    def test_quadratic_form_eigen(self):
        """Q(diag(l1, l2, 0)) in closed form."""
        l1, l2 = 0.7, -1.3
        q = quadratic_form_Q(np.diag([l1, l2, 0.0]))
        self.assertAlmostEqual(q, 0.25 * (l1 + l2) ** 2 - l1 * l2 / 6.0, places=14)
        self.assertAlmostEqual(q, quadratic_form_Q_eigen(l1, l2), places=14)

    def test_quadratic_form_of_projection(self):
        """Q of the tangent projection of a unit sphere is 5/6."""
        nu = np.array([0.0, 0.6, 0.8])
        p = np.eye(3) - np.outer(nu, nu)
        self.assertAlmostEqual(quadratic_form_Q(p), 5.0 / 6.0, places=14)

    def test_check_unit_rejects(self):
        """Non-unit vectors are a precondition error."""
        with self.assertRaises(PreconditionError):
            check_unit(np.array([1.0, 1.0, 0.0]))
        check_unit(np.array([0.0, 0.6, 0.8]))

    @given(matrices, vectors)
    @settings(max_examples=200, deadline=None)
    def test_matrix_identities(self, a, y):
        """Cofactor identities hold for arbitrary matrices and unit vectors."""
        y = np.array(y)
        assume(np.linalg.norm(y) > 0.1)
        y = y / np.linalg.norm(y)
        a = np.array(a)
        for name, res in matrix_identity_residuals(a, y).items():
            # entries up to 10 make the quartic terms large; the residual is relative to max(1, |value|)
            self.assertLess(res, 1e-9, name)

    def test_relative_residual_scales(self):
        """Relative residual is absolute below one and relative above."""
        self.assertAlmostEqual(relative_residual(1e-3, 0.0), 1e-3)
        self.assertAlmostEqual(relative_residual(1000.0, 1001.0), 1.0 / 1001.0)

    def test_tree_sum_independent_of_padding(self):
        """The pairwise sum matches the exact sum on integers."""
        values = np.arange(1, 1001, dtype=float)
        self.assertEqual(tree_sum(values), 500500.0)
        self.assertEqual(tree_sum(np.zeros(0)), 0.0)

    def test_fit_convergence_order(self):
        """A clean power law is recovered; the coarsest sample is dropped."""
        h = np.array([0.4, 0.2, 0.1, 0.05])
        err = 3.0 * h ** 2
        err[0] = 10.0
        order, rms = fit_convergence_order(h, err)
        self.assertAlmostEqual(order, 2.0, places=10)
        self.assertLess(rms, 1e-12)
        order, _ = fit_convergence_order([0.1], [1.0])
        self.assertTrue(np.isnan(order))

    def test_extrapolate_limit(self):
        """Polynomial extrapolation returns the constant term."""
        eps = np.array([0.2, 0.1, 0.05, 0.025])
        limit, rms = extrapolate_limit(eps, 4.0 + 0.5 * eps ** 2, powers=(0, 2))
        self.assertAlmostEqual(limit, 4.0, places=12)
        self.assertLess(rms, 1e-12)


if __name__ == "__main__":
    unittest.main()
