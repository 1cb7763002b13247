import os
import tempfile
import unittest
import logging
import numpy as np

from tools.director_tool import (
    DirectorField, DirectorTool, face_director_batch, face_director_data, make_normal_director,
    make_tilted_director, tangent_field, tangent_field_energy, tangent_eigen, normal_deviation,
    validate_director, save_director, load_director, barycentric_gradients,
)
from utils.mesh import generate_primitive
from utils.errors import FoldOverError, PreconditionError
from test_mesh import flat_patch

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S'
)
logger = logging.getLogger(__name__)


class TestDirector(unittest.TestCase):
    """Director fields and the per-face director data."""

    def setUp(self):
        self.sphere = generate_primitive("sphere", {"r": 1.0}, 3)
        fd, self.json_path = tempfile.mkstemp(suffix='.json')
        os.close(fd)

    def tearDown(self):
        try:
            os.remove(self.json_path)
        except OSError:
            pass

    def test_barycentric_gradients_sum_to_zero(self):
        """Hat-function gradients of a face sum to zero and reproduce linear functions."""
        grads = barycentric_gradients(self.sphere)
        np.testing.assert_allclose(grads.sum(axis=1), 0.0, atol=1e-10)
        p = self.sphere.corners
        # gradient of x -> x is the tangent projection of the identity
        d = np.einsum('fai,faj->fij', p, grads)
        nu = self.sphere.face_normals
        proj = np.eye(3) - nu[:, :, None] * nu[:, None, :]
        np.testing.assert_allclose(d, proj, atol=1e-9)

    def test_normal_director_on_sphere(self):
        """L of the normal director approximates the tangent projection, both eigenvalues near 1/r."""
        data = face_director_batch(self.sphere, make_normal_director(self.sphere))
        np.testing.assert_allclose(data.theta_dot_nu, 1.0, atol=1e-15)
        self.assertGreater(data.lambda2.min(), 0.9)
        self.assertLess(data.lambda1.max(), 1.1)
        self.assertTrue(np.all(data.lambda1 >= data.lambda2))
        np.testing.assert_allclose(np.einsum('fij,fj->fi', data.L, data.theta_bar), 0.0, atol=1e-12)

    def test_constant_director_on_flat_patch(self):
        """Constant director has L = 0."""
        patch = flat_patch()
        field = DirectorField(np.tile([0.0, 0.0, 1.0], (patch.n_vertices, 1)))
        data = face_director_batch(patch, field)
        np.testing.assert_array_equal(data.L, 0.0)
        np.testing.assert_array_equal(data.theta_dot_nu, 1.0)

    def test_tangent_eigen_frame(self):
        """(v1, v2, theta) is right-handed and diagonalizes L."""
        data = face_director_batch(self.sphere, make_tilted_director(
            self.sphere, tangent_field(self.sphere, "rotation_z"), 0.3))
        v1, v2, theta = data.v1, data.v2, data.theta_bar
        np.testing.assert_allclose(np.einsum('fi,fi->f', np.cross(v1, v2), theta), 1.0, atol=1e-12)
        np.testing.assert_allclose(np.einsum('fij,fj->fi', data.L, v1), data.lambda1[:, None] * v1, atol=1e-10)
        l1, l2, _ = tangent_eigen(data.L, theta)
        np.testing.assert_array_equal(l1, data.lambda1)

    def test_tilted_eps_zero_is_normal(self):
        """eps = 0 gives the normal director."""
        w = tangent_field(self.sphere, "e1_tangent")
        tilted = make_tilted_director(self.sphere, w, 0.0)
        normal = make_normal_director(self.sphere)
        np.testing.assert_array_equal(tilted.values, normal.values)
        np.testing.assert_array_equal(tilted.face_values, normal.face_values)

    def test_zero_field_keeps_normal(self):
        """A vanishing w leaves the normal director untouched bit for bit."""
        w = tangent_field(self.sphere, "zero")
        tilted = make_tilted_director(self.sphere, w, 0.1)
        normal = make_normal_director(self.sphere)
        np.testing.assert_array_equal(tilted.values, normal.values)
        np.testing.assert_array_equal(tilted.face_values, normal.face_values)

    def test_tilted_director_is_transversal(self):
        """Moderate tilts keep theta.nu positive on all faces."""
        w = tangent_field(self.sphere, "e1_tangent")
        field = make_tilted_director(self.sphere, w, 0.2)
        np.testing.assert_allclose(np.linalg.norm(field.values, axis=1), 1.0, atol=1e-14)
        data = face_director_batch(self.sphere, field)
        self.assertTrue(np.all(data.theta_dot_nu > 0.9))

    def test_fold_over_from_tilt(self):
        """A huge tilt makes the vertex directors tangent and some incident face folds over."""
        mesh = generate_primitive("sphere", {"r": 1.0}, 0)
        with self.assertRaises(FoldOverError) as ctx:
            make_tilted_director(mesh, tangent_field(mesh, "e1_tangent"), 1e9)
        self.assertTrue(ctx.exception.vertices)

    def test_fold_over_faces(self):
        """An inverted director reports every face."""
        field = DirectorField(-self.sphere.vertex_normals)
        with self.assertRaises(FoldOverError) as ctx:
            face_director_batch(self.sphere, field)
        self.assertEqual(len(ctx.exception.faces), self.sphere.n_faces)
        self.assertEqual(ctx.exception.exit_code, 2)

    def test_negative_eps(self):
        """eps < 0 is rejected."""
        with self.assertRaises(PreconditionError):
            make_tilted_director(self.sphere, tangent_field(self.sphere, "e1_tangent"), -0.1)

    def test_unknown_field(self):
        with self.assertRaises(PreconditionError):
            tangent_field(self.sphere, "gradient_of_nothing")

    def test_validate_director_shapes(self):
        """Wrong shapes and non-unit values are rejected."""
        with self.assertRaises(PreconditionError):
            validate_director(self.sphere, DirectorField(np.ones((3, 3))))
        with self.assertRaises(PreconditionError):
            validate_director(self.sphere, DirectorField(2.0 * self.sphere.vertex_normals))

    def test_single_face_data(self):
        """Single-face data matches the batch."""
        field = make_normal_director(self.sphere)
        batch = face_director_batch(self.sphere, field)
        single = face_director_data(self.sphere, field, 17)
        np.testing.assert_array_equal(single.L, batch.L[17])
        with self.assertRaises(IndexError):
            face_director_data(self.sphere, field, -1)

    def test_tangent_field_energy_on_sphere(self):
        """(1/2) integral of |P e1|^2 on the unit sphere is 4 pi / 3."""
        mesh = generate_primitive("sphere", {"r": 1.0}, 4)
        energy = tangent_field_energy(mesh, tangent_field(mesh, "e1_tangent"))
        self.assertAlmostEqual(energy / (4.0 * np.pi / 3.0), 1.0, delta=1e-2)

    def test_normal_deviation(self):
        """Vertex normals of a fine sphere are close to the analytic ones."""
        self.assertLess(normal_deviation(self.sphere), 0.05)

    def test_save_load_director(self):
        """Director JSON keeps the values."""
        field = make_tilted_director(self.sphere, tangent_field(self.sphere, "e3_tangent"), 0.1)
        save_director(field, self.json_path)
        loaded = load_director(self.json_path, self.sphere)
        np.testing.assert_array_equal(loaded.values, field.values)
        np.testing.assert_array_equal(loaded.face_values, field.face_values)

    def test_director_tool(self):
        """The tool wraps face_director_batch."""
        tool = DirectorTool()
        data = tool({"mesh": self.sphere, "field": make_normal_director(self.sphere)})
        self.assertEqual(data.L.shape, (self.sphere.n_faces, 3, 3))


if __name__ == "__main__":
    unittest.main()
