import os
import getpass
import logging
import socket
from dotenv import load_dotenv

load_dotenv()

# --- Sorting Defaults ---
# Seed used by generate_array when none is given on the command line
DEFAULT_SEED = int(os.getenv("SORTBENCH_SEED", "42"))

# Subarray length below which the cutoff merge sort hands off to the native sort
DEFAULT_CUTOFF = int(os.getenv("SORTBENCH_CUTOFF", "32"))

# --- Benchmark Settings ---
# Repetitions per plan cell; the reported time is the minimum
DEFAULT_REPETITIONS = int(os.getenv("SORTBENCH_REPETITIONS", "3"))

# Worker count whose cell is the speedup reference for its group
DEFAULT_REFERENCE_WORKERS = 1


def _login_name() -> str:
    """Login name for the user column; getpass raises when no account can be found."""
    try:
        return getpass.getuser()
    except (KeyError, OSError):
        return "unknown"


# Free-form metadata columns carried into every BenchRecord
BENCH_USER = os.getenv("SORTBENCH_USER") or _login_name()
BENCH_NODE = os.getenv("SORTBENCH_NODE") or socket.gethostname()

# Stored and recomputed speedup may differ by this much before report warns
SPEEDUP_TOLERANCE = 0.001

# --- Worker Pool Settings ---
# "process" sidesteps the GIL for CPU-bound chunks; "thread" is cheaper to start
POOL_KIND = os.getenv("SORTBENCH_POOL_KIND", "process")

# --- Transport Settings ---
# Backend used by mpi runs unless --backend says otherwise ("in-process" or "socket")
DEFAULT_BACKEND = os.getenv("SORTBENCH_BACKEND", "in-process")

# Wall-clock deadline for a whole world, in seconds
WORLD_TIMEOUT_SECONDS = float(os.getenv("SORTBENCH_TIMEOUT", "30"))

# Socket backend rendezvous. Port 0 lets every rank bind an ephemeral port;
# a fixed port P gives rank r the port P + r.
SOCKET_HOST = os.getenv("SORTBENCH_HOST", "127.0.0.1")
SOCKET_PORT = int(os.getenv("SORTBENCH_PORT", "0"))

# --- Verification Suite ---
VERIFY_SIZES = (0, 1, 2, 10, 1_000, 10_000)
VERIFY_QUICK_MAX_SIZE = 1_000
VERIFY_SEED_COUNT = 10
VERIFY_WORKER_COUNTS = (1, 2, 4, 8)
VERIFY_RANK_COUNTS = (1, 2, 4, 8)

# --- Logging Configuration ---
# Sets the minimum level of messages to log (e.g., INFO, DEBUG, WARNING, ERROR, CRITICAL)
LOG_LEVEL = getattr(logging, os.getenv("SORTBENCH_LOG_LEVEL", "INFO").upper(), logging.INFO)
# Format of log messages
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
# Date and time format within log messages
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
