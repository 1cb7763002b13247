import dataclasses
import unittest
import logging
import numpy as np

from tools.director_tool import DirectorField, make_normal_director, make_tilted_director, tangent_field
from tools.energy_tool import bending_energy
from tools.gauss_graph_tool import (
    GaussGraphTool, PairingForms, PsiForm, PAIRING_CONSTANT, f_y, graph_xi, graph_face_batch,
    closed_form_residuals, graph_xi_batch, xi_trace_identities, verticality_defect, graph_area, graph_energy,
    current_pairings, catalog_forms, graph_faces_frame,
)
from tools.director_tool import face_director_data
from utils.mesh import generate_primitive, face_frame, face_frames
from utils.multilinear import cofactor, quadratic_form_Q
from utils.errors import PreconditionError, ConsistencyError
from utils.common import CSV_SCHEMAS

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S'
)
logger = logging.getLogger(__name__)


class TestGaussGraph(unittest.TestCase):
    """Graph 2-vectors, graph area, graph energy and pairings."""

    @classmethod
    def setUpClass(cls):
        cls.sphere = generate_primitive("sphere", {"r": 1.0}, 4)
        cls.normal = make_normal_director(cls.sphere)
        cls.w = tangent_field(cls.sphere, "e1_tangent")

    def test_f_y_matches_definition(self):
        """f_y(zeta) = (1/4) <Psi_y, zeta>^2 - (1/6) y.cof(zeta) y on one matrix."""
        rng = np.random.default_rng(3)
        zeta = rng.standard_normal((3, 3))
        y = np.array([2.0, -1.0, 2.0]) / 3.0
        psi = (y[0] * (zeta[1, 2] - zeta[2, 1]) + y[1] * (zeta[2, 0] - zeta[0, 2])
               + y[2] * (zeta[0, 1] - zeta[1, 0]))
        self.assertAlmostEqual(PsiForm(y).pair(zeta), psi, places=13)
        expected = 0.25 * psi ** 2 - y @ cofactor(zeta) @ y / 6.0
        self.assertAlmostEqual(f_y(zeta, y), expected, places=13)
        with self.assertRaises(PreconditionError):
            f_y(zeta, 2.0 * y)

    def test_closed_forms_on_mesh(self):
        """The strata of xi agree with their closed forms on every face."""
        field = make_tilted_director(self.sphere, self.w, 0.2)
        batch = graph_face_batch(self.sphere, field)
        for name, res in closed_form_residuals(batch.frame, batch.data, batch.graph.xi).items():
            self.assertLess(float(np.max(res)), 1e-10, name)

    def test_mixed_part_checked_against_gradient(self):
        """A rescaled L with a matching eigen decomposition still fails the gradient check."""
        field = make_tilted_director(self.sphere, self.w, 0.2)
        batch = graph_face_batch(self.sphere, field)
        data = batch.data
        bad = dataclasses.replace(data, L=1.01 * data.L, lambda1=1.01 * data.lambda1,
                                  lambda2=1.01 * data.lambda2)
        xi = graph_xi_batch(batch.frame, bad, check=False).xi
        res = closed_form_residuals(batch.frame, bad, xi)
        self.assertLess(float(np.max(res["xy_part_closed_form"])), 1e-10)
        self.assertGreater(float(np.max(res["xy_part_from_gradient"])), 1e-4)
        with self.assertRaisesRegex(ConsistencyError, "xy_part_from_gradient"):
            graph_xi_batch(batch.frame, bad)

    def test_single_face_graph(self):
        """Single-face evaluation matches the batch and the trace identities hold."""
        field = make_tilted_director(self.sphere, self.w, 0.1)
        batch = graph_face_batch(self.sphere, field)
        frame = face_frame(self.sphere, 11)
        data = face_director_data(self.sphere, field, 11)
        single = graph_xi(frame, data)
        np.testing.assert_allclose(single.jac, batch.graph.jac[11], rtol=1e-14)
        for name, res in xi_trace_identities(frame, data).items():
            self.assertLess(res, 1e-10, name)
        self.assertAlmostEqual(verticality_defect(frame, data), batch.graph.defect[11], places=14)

    def test_energy_density_on_graph(self):
        """f_y(xi_1) = (theta.nu)^2 Q(L) face by face."""
        field = make_tilted_director(self.sphere, self.w, 0.2)
        batch = graph_face_batch(self.sphere, field)
        lhs = batch.graph.f_y_value
        rhs = batch.graph.theta_dot_nu ** 2 * quadratic_form_Q(batch.data.L)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-12)

    def test_graph_area_of_sphere(self):
        """With theta = nu on the unit sphere jac is 2 and the graph area is 8 pi."""
        cert = graph_area(self.sphere, self.normal)
        self.assertAlmostEqual(cert.graph_area / (8.0 * np.pi), 1.0, delta=0.01)
        self.assertTrue(cert.jac_bound_ok)
        self.assertTrue(cert.area_bound_ok)
        self.assertTrue(cert.eigenvalue_control_ok)
        self.assertLessEqual(cert.graph_area, cert.bound)

    def test_graph_energy_equals_bending(self):
        """Energy evaluated on the graph equals the bending energy when no face is excluded."""
        for field in (self.normal, make_tilted_director(self.sphere, self.w, 0.2)):
            result = graph_energy(self.sphere, field)
            self.assertEqual(result.excluded_faces, 0)
            bending = bending_energy(self.sphere, field)
            self.assertAlmostEqual(result.value, bending, delta=1e-10 * bending)
            self.assertLess(result.membership_residual, 1e-10)

    def test_graph_energy_excludes_grazing_faces(self):
        """Faces with theta.nu below the threshold are counted and skipped."""
        frame = face_frames(self.sphere)
        face_values = np.array(self.normal.face_values)
        face_values[0] = frame.nu[0] + 100.0 * frame.tau1[0]
        face_values[0] /= np.linalg.norm(face_values[0])
        field = DirectorField(self.normal.values, face_values)
        with self.assertLogs("tools.gauss_graph_tool", level="WARNING"):
            result = graph_energy(self.sphere, field)
        self.assertEqual(result.excluded_faces, 1)

    def test_normal_director_has_no_defect(self):
        """theta = nu gives vanishing verticality defect and pairing with phi ^ omega."""
        batch = graph_face_batch(self.sphere, self.normal)
        self.assertLess(float(np.max(batch.graph.defect)), 1e-12)
        pairing = current_pairings(self.sphere, self.normal, catalog_forms("one", "x3_dx2"), batch)
        self.assertAlmostEqual(pairing.pair_phi_wedge, 0.0, places=12)
        self.assertAlmostEqual(pairing.pair_phi_star, self.sphere.area, places=10)
        self.assertLess(pairing.star_consistency, 1e-12)

    def test_pairing_decays_with_eps(self):
        """The phi ^ omega pairing is bounded and shrinks like eps."""
        forms = catalog_forms("one_plus_x1sq", "x3_dx2")
        values = []
        for eps in (0.1, 0.05):
            result = current_pairings(self.sphere, make_tilted_director(self.sphere, self.w, eps), forms)
            self.assertTrue(result.bound_ok)
            self.assertLessEqual(result.ratio, PAIRING_CONSTANT)
            values.append(abs(result.pair_phi_wedge))
        self.assertGreater(values[0], 0.0)
        self.assertAlmostEqual(values[1] / values[0], 0.5, delta=0.05)

    def test_pairing_rejects_negative_g(self):
        forms = PairingForms([(-1.0, (0, 0, 0, 0, 0, 0))], {0: [(1.0, (0, 0, 0, 0, 0, 0))]})
        with self.assertRaises(PreconditionError):
            current_pairings(self.sphere, self.normal, forms)

    def test_unknown_catalog_form(self):
        with self.assertRaises(PreconditionError):
            catalog_forms("one", "dz")

    def test_graph_faces_frame(self):
        """Per-face frame carries the graph_faces columns."""
        tool = GaussGraphTool()
        batch = tool({"mesh": self.sphere, "field": self.normal})
        df = graph_faces_frame(batch.graph, batch.data.faces)
        self.assertEqual(list(df.columns), CSV_SCHEMAS["graph_faces"][1:])
        self.assertEqual(len(df), self.sphere.n_faces)


if __name__ == "__main__":
    unittest.main()
