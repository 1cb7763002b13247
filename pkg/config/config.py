import os
import tempfile
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

class Config:
    """Configuration class for tiltbend."""

    # Runtime configuration
    THREADS = max(1, int(os.environ.get('TILTBEND_THREADS', '1')))
    LOG_LEVEL = os.environ.get('TILTBEND_LOG_LEVEL', 'INFO')
    OUTPUT_DIR = os.environ.get('TILTBEND_OUTPUT_DIR', os.path.join(tempfile.gettempdir(), 'tiltbend'))
    DEFAULT_SEED = int(os.environ.get('TILTBEND_SEED', '20240917'))

    # Tolerances
    IDENTITY_TOLERANCE = 1e-9      # acceptance level for the verification battery
    TRANSCRIPTION_TOLERANCE = 1e-10  # eigen-relation guard on A_y
    PRECONDITION_TOLERANCE = 1e-8
    UNIT_TOLERANCE = 1e-12
    PI0_RANK_THRESHOLD = 1e-8      # relative singular value cut for the v0 Gram matrix

    # Graph-side integrals
    GRAPH_EXCLUSION_THRESHOLD = 0.05  # faces with theta.nu below this are excluded
    VERTICAL_THRESHOLD = 1e-12
    DEGENERATE_AREA_FACTOR = 1e-12
    RESIDUAL_FLOOR_FACTOR = 1e-10  # first-variation residuals below this times the area count as exact

    # Verification battery
    DEFAULT_TRIALS = 10000
    MAX_REPORTED_FAILURES = 10

    # u.A_y u = QUADRATIC_FORM_SCALE * f_y(zeta); measured by quadratic_consistency
    QUADRATIC_FORM_SCALE = 12.0

    # CSV report schema
    CSV_SCHEMA_VERSION = 2

    # Test-function catalog for first-variation residuals
    TEST_FUNCTION_CATALOG_VERSION = 1

    @classmethod
    def thread_cap(cls) -> int:
        """Worker cap from TILTBEND_THREADS, read at call time."""
        return max(1, int(os.environ.get('TILTBEND_THREADS', cls.THREADS)))
