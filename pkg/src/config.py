import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Parallelism
THREADS = max(1, int(os.getenv("CMSFLOW_THREADS", "1")))

# Logging Configuration
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FILE = os.getenv("LOG_FILE", "cmsflow.log")

# Numerical floors
DET_FLOOR = float(os.getenv("CMSFLOW_DET_FLOOR", "1e-14"))
FACE_FLOOR = float(os.getenv("CMSFLOW_FACE_FLOOR", "1e-14"))

# Sampling
DEFAULT_SEED = int(os.getenv("CMSFLOW_DEFAULT_SEED", "0"))

# Verification defaults
SPATIAL_STEP = float(os.getenv("CMSFLOW_SPATIAL_STEP", "3e-3"))
EXACT_TOLERANCE = float(os.getenv("CMSFLOW_EXACT_TOLERANCE", "1e-10"))
ORDER_SLACK = 0.3  # accepted shortfall below the nominal scheme order
