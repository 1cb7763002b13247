import os
import shutil
import tempfile
import unittest
import logging
from unittest import mock

import numpy as np
import pandas as pd
from joblib import Parallel
from pydantic import ValidationError

from models.reports import SweepConfig
from tools.energy_tool import q_zero
from utils.common import CSV_SCHEMAS
from utils.mesh import generate_primitive
from workflow import run_cell, run_sweep, fit_sweep, sweep_frame, write_sweep_outputs, tilt_target

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S'
)
logger = logging.getLogger(__name__)


class TestWorkflow(unittest.TestCase):
    """Sweep cells, fits and report outputs."""

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir, ignore_errors=True)

    def test_run_cell(self):
        """One cell carries the mesh hash and a consistent energy breakdown."""
        config = SweepConfig(levels=[2], epsilons=[0.1])
        cell = run_cell(config, 2, 0.1)
        self.assertIsNone(cell.error)
        self.assertEqual(cell.mesh_hash, generate_primitive("sphere", {"r": 1.0}, 2).content_hash)
        self.assertEqual(cell.energy.total, cell.energy.tilt + cell.energy.bending)
        self.assertEqual(cell.excluded_faces, 0)
        self.assertTrue(cell.area_bound_ok)

    def test_failed_cell_is_recorded(self):
        """A failing stage is captured in the cell instead of raised."""
        config = SweepConfig(levels=[1], epsilons=[0.1], w_field="no_such_field")
        cell = run_cell(config, 1, 0.1)
        self.assertTrue(cell.error.startswith("PreconditionError"))
        self.assertIsNone(cell.energy)

    def test_sweep_independent_of_threads(self):
        """Output files from one, four and eight workers are byte-identical."""
        config = SweepConfig(levels=[1, 2], epsilons=[0.2, 0.1])
        contents = []
        with mock.patch.dict(os.environ, {"TILTBEND_THREADS": "8"}):
            for threads in (1, 4, 8):
                report = run_sweep(config, threads=threads)
                self.assertEqual([(c.level, c.eps) for c in report.cells],
                                 [(1, 0.2), (1, 0.1), (2, 0.2), (2, 0.1)])
                paths = write_sweep_outputs(report, os.path.join(self.tmpdir, f"threads{threads}"))
                files = {}
                for kind in ("grid", "first_variation", "report"):
                    with open(paths[kind], "rb") as f:
                        files[kind] = f.read()
                contents.append(files)
        for files in contents[1:]:
            self.assertEqual(files, contents[0])

    def test_threads_capped_by_environment(self):
        """TILTBEND_THREADS caps the pool size a caller asks for."""
        config = SweepConfig(levels=[1], epsilons=[0.2])
        with mock.patch.dict(os.environ, {"TILTBEND_THREADS": "2"}), \
                mock.patch("workflow.Parallel", wraps=Parallel) as pool:
            run_sweep(config, threads=8)
            self.assertEqual(pool.call_args.kwargs["n_jobs"], 2)
            run_sweep(config)
            self.assertEqual(pool.call_args.kwargs["n_jobs"], 2)
            run_sweep(config, threads=1)
            self.assertEqual(pool.call_args.kwargs["n_jobs"], 1)

    def test_sphere_sweep_limits(self):
        """On the unit sphere the fitted limits match the analytic values."""
        config = SweepConfig(levels=[3, 4])
        report = run_sweep(config, threads=1)
        self.assertEqual(report.failed_cells, 0)
        fits = report.fits
        for check in ("q0_limit", "tilt_limit", "q_eps_limit", "liminf", "area_bound", "jac_bound",
                      "eigenvalue_control", "pairing_order", "defect_order"):
            self.assertTrue(fits.checks[check], check)
        self.assertLessEqual(fits.q_eps_rel_error, 0.02)
        self.assertAlmostEqual(fits.q0_analytic, 10.0 * np.pi / 3.0)
        self.assertAlmostEqual(fits.tilt_target, 4.0 * np.pi / 3.0)
        self.assertAlmostEqual(fits.q_eps_expected, 14.0 * np.pi / 3.0)

    def test_zero_field_sweep(self):
        """With w = 0 every total equals Q0 of its level exactly."""
        config = SweepConfig(levels=[1, 2], epsilons=[0.2, 0.1], w_field="zero")
        report = run_sweep(config, threads=1)
        for cell in report.cells:
            mesh = generate_primitive("sphere", {"r": 1.0}, cell.level)
            self.assertEqual(cell.energy.total, q_zero(mesh))
            self.assertEqual(cell.energy.tilt, 0.0)
        self.assertEqual(tilt_target(config, mesh)[0], 0.0)

    def test_fit_with_single_eps(self):
        """A single eps still yields Q0 and liminf results but no eps fits."""
        config = SweepConfig(levels=[2], epsilons=[0.1])
        cells = [run_cell(config, 2, 0.1)]
        fits = fit_sweep(config, cells)
        self.assertIsNone(fits.q_eps_limit)
        self.assertIn("liminf", fits.checks)
        self.assertNotIn("tilt_limit", fits.checks)

    def test_config_from_file(self):
        """key=value files parse into a SweepConfig."""
        path = os.path.join(self.tmpdir, "sweep.cfg")
        with open(path, "w") as f:
            f.write("surface=torus\nR=2.0\nr=0.5\nlevels=0,1\nepsilons=0.1, 0.05\nw_field=rotation_z\n")
        config = SweepConfig.from_file(path)
        self.assertEqual(config.surface, "torus")
        self.assertEqual(config.levels, [0, 1])
        self.assertEqual(config.epsilons, [0.1, 0.05])
        self.assertEqual(config.config_hash(), SweepConfig.from_file(path).config_hash())

    def test_config_validation(self):
        """Bad radii, epsilons and levels are rejected."""
        with self.assertRaises(ValidationError):
            SweepConfig(surface="torus", R=1.0, r=1.0)
        with self.assertRaises(ValidationError):
            SweepConfig(epsilons=[0.1, -0.1])
        with self.assertRaises(ValidationError):
            SweepConfig(levels=[-1])

    def test_sweep_outputs(self):
        """Grid CSV, first-variation CSV and JSON report are written with their schemas."""
        config = SweepConfig(levels=[1, 2], epsilons=[0.2, 0.1])
        report = run_sweep(config, threads=1)
        paths = write_sweep_outputs(report, self.tmpdir)
        grid = pd.read_csv(paths["grid"])
        self.assertEqual(list(grid.columns), CSV_SCHEMAS["sweep_grid"])
        self.assertEqual(len(grid), 4)
        fv = pd.read_csv(paths["first_variation"])
        self.assertEqual(list(fv.columns), CSV_SCHEMAS["first_variation"])
        self.assertTrue(os.path.exists(paths["report"]))
        self.assertEqual(list(sweep_frame(report).columns), CSV_SCHEMAS["sweep_grid"][1:])


if __name__ == "__main__":
    unittest.main()
