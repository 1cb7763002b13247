import unittest
import logging
import numpy as np

from agents.verification_agent import (
    VerificationAgent, random_frames, random_face_data, admissible_matrices, random_unit_vectors,
)
from config.config import Config

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S'
)
logger = logging.getLogger(__name__)


class TestVerification(unittest.TestCase):
    """The seeded identity battery."""

    @classmethod
    def setUpClass(cls):
        cls.report = VerificationAgent(verbose=False).run({"seed": 7, "trials": 300})["report"]

    def test_battery_passes(self):
        """Every identity stays below the acceptance tolerance."""
        failed = [r.identity for r in self.report.identities if r.failures]
        self.assertEqual(failed, [])
        self.assertTrue(self.report.passed)
        for result in self.report.identities:
            self.assertLessEqual(result.max_residual, Config.IDENTITY_TOLERANCE, result.identity)
            self.assertEqual(result.trials, 300)

    def test_expected_identities_present(self):
        """The battery covers the algebra, the graph, the spectral form and the varifold tensor."""
        names = {r.identity for r in self.report.identities}
        for name in ("wedge3_matches_cross_product", "graph_energy_density_equals_Q",
                     "spectral_quadratic_consistency", "spectral_growth_bound",
                     "defect_equals_pi0_norm", "varifold_sign_flip_invariance",
                     "varifold_graph_tensor_matches_shape_tensor"):
            self.assertIn(name, names)
        self.assertTrue(any(n.startswith("spectral_eigen_relation_") for n in names))
        self.assertEqual(self.report.quadratic_form_scale, Config.QUADRATIC_FORM_SCALE)

    def test_deterministic(self):
        """The same seed reproduces the report exactly."""
        again = VerificationAgent(verbose=False).run({"seed": 7, "trials": 300})["report"]
        self.assertEqual(again.model_dump(), self.report.model_dump())

    def test_random_inputs_are_admissible(self):
        """Random frames, director data and matrices satisfy their constraints."""
        rng = np.random.default_rng(5)
        frame = random_frames(rng, 50)
        np.testing.assert_allclose(np.cross(frame.tau1, frame.tau2), frame.nu, atol=1e-14)
        data = random_face_data(rng, frame)
        self.assertTrue(np.all(data.theta_dot_nu >= 1.0 / np.sqrt(10.0) - 1e-12))
        np.testing.assert_allclose(np.einsum('fij,fj->fi', data.L, data.theta_bar), 0.0, atol=1e-12)
        np.testing.assert_allclose(data.L, np.swapaxes(data.L, 1, 2), atol=1e-14)
        self.assertTrue(np.all(data.lambda1 >= data.lambda2))
        y = random_unit_vectors(rng, 50)
        zeta = admissible_matrices(rng, y)
        np.testing.assert_allclose(np.einsum('fij,fj->fi', zeta, y), 0.0, atol=1e-12)
        np.testing.assert_allclose(np.trace(zeta, axis1=1, axis2=2), 0.0, atol=1e-12)

    def test_failure_records_reproducer(self):
        """A residual above tolerance is kept with its trial index and inputs."""
        agent = VerificationAgent(verbose=False)
        agent.results = []
        residuals = np.array([0.0, 1.0, np.nan])
        with self.assertLogs("agents.verification_agent", level="ERROR"):
            agent._record("synthetic", residuals, {"x": np.arange(3.0)})
        result = agent.results[-1]
        self.assertEqual([f["trial"] for f in result.failures], [1, 2])
        self.assertEqual(result.failures[0]["inputs"]["x"], 1.0)
        self.assertEqual(result.max_residual, float("inf"))


if __name__ == "__main__":
    unittest.main()
