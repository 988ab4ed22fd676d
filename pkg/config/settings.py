"""
Configuration settings for tokeneeg
"""
import os
import logging
from typing import Optional

from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler

load_dotenv()


def quiet_loggers() -> None:
    """Silence chatty third-party loggers"""
    for logger_name in [
        "joblib",
        "matplotlib",
        "numba",
        "urllib3.connectionpool",
    ]:
        logger = logging.getLogger(logger_name)
        logger.setLevel(logging.WARNING)
        logger.propagate = False


def configure_logging(level: Optional[str] = None) -> None:
    """Route all log records through rich on stderr

    Args:
        level: Log level name; falls back to TOKENEEG_LOG_LEVEL
    """
    logging.basicConfig(
        level=(level or LOG_LEVEL).upper(),
        format="%(name)s - %(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )
    quiet_loggers()


# Paths configuration
DATA_DIR = os.environ.get("TOKENEEG_DATA_DIR", "data")
ARCHIVE_DIR = os.environ.get("TOKENEEG_ARCHIVE_DIR", "segments")
OUTPUT_DIR = os.environ.get("TOKENEEG_OUTPUT_DIR", "runs")
MANIFEST_NAME = "manifest.jsonl"

# Runtime
SEED = int(os.environ.get("TOKENEEG_SEED", "0"))
LOG_LEVEL = os.environ.get("TOKENEEG_LOG_LEVEL", "INFO")
JOBS = int(os.environ.get("TOKENEEG_JOBS", "1"))

# Preprocessing
TARGET_FS = 128.0
BANDPASS_LO = float(os.environ.get("TOKENEEG_BANDPASS_LO", "0.5"))
BANDPASS_HI = float(os.environ.get("TOKENEEG_BANDPASS_HI", "45.0"))
FILTER_ORDER = int(os.environ.get("TOKENEEG_FILTER_ORDER", "4"))
RESAMPLE_KAISER_BETA = 8.0
RESAMPLE_TAPS_PER_PHASE = 64
RESAMPLE_MAX_DENOMINATOR = 1000
SEGMENT_LENGTH = int(os.environ.get("TOKENEEG_SEGMENT_LENGTH", "128"))
SEGMENT_OVERLAP = float(os.environ.get("TOKENEEG_SEGMENT_OVERLAP", "0.5"))
FLAT_STD = 1e-8
SWT_LEVELS = 4

# Spherical spline
SPLINE_ORDER = int(os.environ.get("TOKENEEG_SPLINE_ORDER", "4"))
SPLINE_TERMS = int(os.environ.get("TOKENEEG_SPLINE_TERMS", "50"))
SPLINE_LAMBDA = float(os.environ.get("TOKENEEG_SPLINE_LAMBDA", "1e-5"))
MONTAGE_FILE = os.environ.get("TOKENEEG_MONTAGE_FILE")

# Model defaults
D_MODEL = int(os.environ.get("TOKENEEG_D_MODEL", "128"))
BOTTLENECK = int(os.environ.get("TOKENEEG_BOTTLENECK", "64"))
K_TOKEN = 7
K_RES = 3
N_STAGES = int(os.environ.get("TOKENEEG_N_STAGES", "3"))
DILATION = 2
MAX_STAGES = 5
N_CLASSES = 2
DROPOUT = 0.1
BN_MOMENTUM = 0.1
NORM_EPS = 1e-5

# Training
EPOCHS = int(os.environ.get("TOKENEEG_EPOCHS", "100"))
BATCH_SIZE = int(os.environ.get("TOKENEEG_BATCH_SIZE", "128"))
LEARNING_RATE = float(os.environ.get("TOKENEEG_LR", "1e-4"))
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
TRAIN_DTYPE = os.environ.get("TOKENEEG_TRAIN_DTYPE", "float32")

# Evaluation
N_FOLDS = int(os.environ.get("TOKENEEG_FOLDS", "5"))
N_REPEATS = int(os.environ.get("TOKENEEG_REPEATS", "5"))

# Benchmark
BENCH_SECONDS = float(os.environ.get("TOKENEEG_BENCH_SECONDS", "10"))
BENCH_BATCH = 128

# Published figures shown next to bench output for context only
REPORTED_PARAMS = 290_000
REPORTED_GFLOPS = 4.67
REPORTED_THROUGHPUT = 26_173
