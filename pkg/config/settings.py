import os
from dotenv import load_dotenv

load_dotenv()

# Worker count for parallel (algorithm, eta, seed) runs; overrides the config file
S3GD_WORKERS = os.getenv("S3GD_WORKERS")

LOG_LEVEL = os.getenv("S3GD_LOG_LEVEL", "INFO")

DEFAULT_OUTPUT_DIR = os.getenv("S3GD_OUTPUT_DIR", "results")


def get_worker_count(configured: int = 1) -> int:
    """Worker count: the environment override wins over the config file value."""
    if S3GD_WORKERS:
        return max(1, int(S3GD_WORKERS))
    return max(1, int(configured))
