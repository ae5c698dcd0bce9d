"""
Configuration settings for the photonic hybrid precoding simulator
"""
import os
from dotenv import load_dotenv

# Load environment variables with override to ensure fresh loading
load_dotenv(override=True)

ARTIFACT_VERSION = "1.0.0"

# Runtime configuration (overridable through .env)
LOG_LEVEL = os.getenv("PHR_LOG_LEVEL", "INFO")
DEFAULT_SEED = int(os.getenv("PHR_DEFAULT_SEED", "42"))
DEFAULT_WORKERS = int(os.getenv("PHR_WORKERS", "1"))
OUTPUT_DIR = os.getenv("PHR_OUTPUT_DIR", "outputs")
DEFAULT_BITS_PER_TRIAL = int(os.getenv("PHR_BITS_PER_TRIAL", "100"))

# Numerical tolerances
RANK_TOLERANCE = 1e-10  # sigma_min / sigma_max below this is a singular channel
NORM_TOLERANCE = 1e-9

# Carrier plan used by the beam-pattern comparison (meters)
REFERENCE_FREQUENCY_HZ = 28e9
FIG3_WAVELENGTHS = [10.70e-3, 7.1e-3, 4.99e-3, 4.10e-3]
FIG3_ANTENNAS = 16
FIG3_SWEEP_STEP_DEG = 0.1

# Monte-Carlo defaults
DEFAULT_SNR_GRID_DB = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0]
DEFAULT_DIVERSITY_WINDOW_DB = (20.0, 40.0)
FIG4_TRIALS = 100000
MASSIVE_MIMO_REALIZATIONS = 100

# Output formatting
CSV_FLOAT_FORMAT = "%.17g"
MANIFEST_SUFFIX = ".manifest.json"

# Exit codes
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_IO = 4
