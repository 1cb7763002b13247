import io
import os
import json
import shutil
import tempfile
import unittest
import logging
from contextlib import redirect_stdout, redirect_stderr

import numpy as np

from cli import main, parse_director_spec, EXIT_OK, EXIT_VERIFICATION, EXIT_DOMAIN, EXIT_IO
from tools.director_tool import DirectorField, save_director
from utils.mesh import save_off, sidecar_path
from test_mesh import flat_patch

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S'
)
logger = logging.getLogger(__name__)


def run_cli(*argv):
    """Run main() and return (exit code, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


class TestCli(unittest.TestCase):
    """The tiltbend subcommands and their exit codes."""

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir, ignore_errors=True)

    def path(self, name):
        return os.path.join(self.tmpdir, name)

    def test_meshgen(self):
        """meshgen writes the OFF file and sidecar and prints statistics."""
        out = self.path("sphere.off")
        code, stdout, _ = run_cli("meshgen", "sphere", "--level", "1", "--out", out)
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(os.path.exists(out))
        self.assertTrue(os.path.exists(sidecar_path(out)))
        stats = json.loads(stdout)
        self.assertEqual(stats["faces"], 80)
        self.assertEqual(stats["path"], out)

    def test_meshgen_bad_torus(self):
        """R <= r is a domain error."""
        code, _, _ = run_cli("meshgen", "torus", "--R", "1.0", "--r", "1.0", "--out", self.path("t.off"))
        self.assertEqual(code, EXIT_DOMAIN)

    def test_energy_normal(self):
        """The normal director on a fine sphere gives total close to 10 pi / 3 and no tilt."""
        out = self.path("sphere.off")
        run_cli("meshgen", "sphere", "--level", "4", "--out", out)
        code, stdout, _ = run_cli("energy", out)
        self.assertEqual(code, EXIT_OK)
        result = json.loads(stdout)
        self.assertEqual(result["tilt"], 0.0)
        self.assertAlmostEqual(result["total"] / (10.0 * np.pi / 3.0), 1.0, delta=0.02)

    def test_energy_eps_list(self):
        """A tilted spec with several eps prints one breakdown per eps and the graph CSV."""
        out = self.path("sphere.off")
        run_cli("meshgen", "sphere", "--level", "2", "--out", out)
        csv_path = self.path("graph.csv")
        code, stdout, _ = run_cli("energy", out, "--director", "tilted:e1_tangent:0.2,0.1",
                                  "--graph-csv", csv_path)
        self.assertEqual(code, EXIT_OK)
        results = json.loads(stdout)
        self.assertEqual([r["eps"] for r in results], [0.2, 0.1])
        self.assertTrue(os.path.exists(csv_path))

    def test_energy_fold_over(self):
        """A huge tilt on a coarse sphere exits with the domain code and reports faces."""
        out = self.path("ico.off")
        run_cli("meshgen", "sphere", "--level", "0", "--out", out)
        code, _, stderr = run_cli("energy", out, "--director", "tilted:e1_tangent:1e9")
        self.assertEqual(code, EXIT_DOMAIN)
        self.assertIn("fold-over", stderr)

    def test_energy_io_errors(self):
        """Missing meshes and bad director specs exit with the I/O code."""
        code, _, _ = run_cli("energy", self.path("missing.off"))
        self.assertEqual(code, EXIT_IO)
        out = self.path("ico.off")
        run_cli("meshgen", "sphere", "--level", "0", "--out", out)
        code, _, _ = run_cli("energy", out, "--director", "tilted:gradient:0.1")
        self.assertEqual(code, EXIT_IO)

    def test_energy_open_patch_with_file_director(self):
        """A constant director file on a flat patch has zero energy."""
        patch = flat_patch(4)
        mesh_path = save_off(patch, self.path("patch.off"))
        director_path = save_director(DirectorField(np.tile([0.0, 0.0, 1.0], (patch.n_vertices, 1))),
                                      self.path("director.json"))
        code, _, _ = run_cli("energy", mesh_path)
        self.assertEqual(code, EXIT_IO)
        code, stdout, _ = run_cli("energy", mesh_path, "--allow-open", "--director", f"file:{director_path}")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(json.loads(stdout)["total"], 0.0)

    def test_parse_director_spec(self):
        self.assertEqual(parse_director_spec("normal", 0.5), {"kind": "normal", "eps": [0.5]})
        self.assertEqual(parse_director_spec("tilted:rotation_z:0.1,0.05", 1.0)["eps"], [0.1, 0.05])

    def test_verify(self):
        """A small battery passes and is reproducible."""
        code, first, _ = run_cli("verify", "--seed", "3", "--trials", "200", "--out-dir", self.tmpdir)
        self.assertEqual(code, EXIT_OK)
        _, second, _ = run_cli("verify", "--seed", "3", "--trials", "200")
        self.assertEqual(first, second)
        self.assertTrue(json.loads(first)["passed"])
        self.assertTrue(os.path.exists(self.path("verify_identities.csv")))

    def test_sweep(self):
        """A tiny sweep writes its outputs and exits with 0 or 1."""
        config = self.path("sweep.cfg")
        with open(config, "w") as f:
            f.write("surface=sphere\nlevels=1\nepsilons=0.2,0.1\n")
        out_dir = self.path("out")
        code, stdout, _ = run_cli("sweep", config, "--out-dir", out_dir, "--threads", "1")
        self.assertIn(code, (EXIT_OK, EXIT_VERIFICATION))
        summary = json.loads(stdout)
        self.assertEqual(summary["failed_cells"], 0)
        for name in ("sweep_grid.csv", "first_variation.csv", "sweep_report.json"):
            self.assertTrue(os.path.exists(os.path.join(out_dir, name)))


if __name__ == "__main__":
    unittest.main()
