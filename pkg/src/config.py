"""Configuration management for the project."""
import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Paths
BASE_DIR = Path(__file__).parent.parent
CONFIGS_DIR = BASE_DIR / "configs"
OUTPUT_DIR = BASE_DIR / os.getenv("OUTPUT_DIR", "data/runs")

# Create directories if they don't exist
OUTPUT_DIR.mkdir(parents=True, exist_ok=True)

# Logging
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FILE = BASE_DIR / os.getenv("LOG_FILE", "app.log")

# VP schedule (linear beta)
BETA0 = float(os.getenv("BETA0", "0.1"))
BETA1 = float(os.getenv("BETA1", "20.0"))
T_END = 1.0
T_EPS = float(os.getenv("T_EPS", "1e-3"))

# Numerics
LAMBDA_TOL = 1e-12           # bisection tolerance in log-SNR
SERIES_CUTOFF = 1e-6         # |h| below which phi-functions use their series
RHO_MIN = float(os.getenv("RHO_MIN", "1e-3"))
TIME_MATCH_TOL = 1e-12       # adjoint time counts as a recorded grid time
FD_STEP = float(os.getenv("FD_STEP", "1e-5"))
ROUNDOFF_FLOOR = 1e-13

# Oracles / convergence study
REFERENCE_STEPS = int(os.getenv("REFERENCE_STEPS", "4096"))
QUADRATURE_POINTS = int(os.getenv("QUADRATURE_POINTS", "4096"))
CONVERGENCE_STEPS = [int(m) for m in os.getenv("CONVERGENCE_STEPS", "32,64,128,256,512").split(",")]

# Guided generation
LEARNING_RATE = float(os.getenv("LEARNING_RATE", "0.01"))
N_OPT_STEPS = int(os.getenv("N_OPT_STEPS", "50"))

# Tiny MLP defaults
MLP_HIDDEN = int(os.getenv("MLP_HIDDEN", "8"))
MLP_INIT_SCALE = float(os.getenv("MLP_INIT_SCALE", "0.3"))

# Exit codes
EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3

# CSV column orders
CONVERGENCE_COLUMNS = ["solver", "order", "kind", "M", "h_max", "err_ax", "err_az", "err_atheta"]
HISTORY_COLUMNS = ["step", "loss", "grad_norm_x", "grad_norm_z"]
