from pathlib import Path
from typing import Optional, Union
import logging

from huggingface_hub import hf_hub_download

from src.utils.config import HF_TOKEN
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)


def fetch_artifact(
    repo_id: str,
    filename: str,
    local_dir: Optional[Union[str, Path]] = None,
    repo_type: str = "dataset",
    token: Optional[str] = None,
) -> Path:
    """
    Downloads a single artifact (sentence-embedding cache, checkpoint,
    lexicon) from the Hugging Face Hub and returns its local path.

    Args:
        repo_id (str): The ID of the repository (e.g., 'username/repo-name').
        filename (str): Path of the file inside the repository.
        local_dir (Optional[Union[str, Path]]): Directory to place the file in.
            Defaults to the hub cache.
        repo_type (str): 'dataset' or 'model'. Defaults to 'dataset'.
        token (Optional[str]): Hugging Face API token. Defaults to HF_TOKEN.

    Returns:
        Path: Local path of the downloaded file.
    """
    logger.info(f"Fetching {filename} from {repo_id}...")
    local_path = hf_hub_download(
        repo_id=repo_id,
        filename=filename,
        repo_type=repo_type,
        local_dir=local_dir,
        token=token or HF_TOKEN,
    )
    logger.info(f"Fetched to: {local_path}")
    return Path(local_path)


def parse_hub_reference(reference: str) -> tuple:
    """Splits ``repo_owner/repo_name/path/in/repo`` into (repo_id, filename)."""
    parts = reference.strip("/").split("/")
    if len(parts) < 3:
        raise ConfigError(
            f"hub reference must look like owner/repo/path, got {reference!r}"
        )
    return "/".join(parts[:2]), "/".join(parts[2:])
