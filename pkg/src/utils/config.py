import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# Project Root Directory
# Assuming this file is at src/utils/config.py, so root is two levels up
PROJECT_ROOT = Path(__file__).resolve().parent.parent.parent

# Data Config
DATA_DIR = Path(os.getenv("CUCVAE_DATA_DIR", PROJECT_ROOT / "data"))
CACHE_DIR = DATA_DIR / "cache"

# Output Config
OUTPUT_DIR = Path(os.getenv("CUCVAE_OUTPUT_DIR", PROJECT_ROOT / "output"))
RUNS_DIR = OUTPUT_DIR / "runs"
CHECKPOINT_DIR = OUTPUT_DIR / "checkpoints"

# Bundled resources
LEXICON_PATH = PROJECT_ROOT / "src" / "corpus" / "lexicon.tsv"

# Hugging Face Hub
HF_TOKEN = os.getenv("HF_TOKEN")

# Logging Config (Basic)
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_LEVEL = os.getenv("CUCVAE_LOG_LEVEL", "INFO")
