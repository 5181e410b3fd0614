"""Frozen sentence encoders for cross-utterance pairs.

Two implementations share the ``encode(pair_text) -> [d_ctx]`` contract:

* ``StubContextEncoder``: hashed bag-of-words over a frozen Gaussian table,
  hermetic and deterministic.
* ``CachedContextEncoder``: looks pair vectors up in a JSON-lines cache of
  ``{"pair_text_sha256": ..., "vector": [...]}`` rows produced offline by a
  pretrained language model.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Dict, List, Protocol, Tuple, Union

import torch

from src.corpus.lexicon import normalize_words
from src.utils.errors import ConfigError, ModelInputError
from src.utils.hf_downloader import fetch_artifact, parse_hub_reference

logger = logging.getLogger(__name__)

CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"
STUB_BUCKETS = 4096
# Fixed so that stub vectors never depend on the training seed.
STUB_SEED = 20240229


class ContextEncoder(Protocol):
    dim: int

    def encode(self, pair_text: str) -> torch.Tensor: ...


def text_sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def pair_tokens(pair_text: str) -> List[Tuple[int, str]]:
    """(segment index, word) tokens of a ``[CLS] a [SEP] b`` pair; markers dropped."""
    body = pair_text.replace(CLS_TOKEN, " ")
    tokens = []
    for segment, chunk in enumerate(body.split(SEP_TOKEN)):
        tokens.extend((segment, word) for word in normalize_words(chunk))
    return tokens


class StubContextEncoder:
    def __init__(self, dim: int = 768, n_buckets: int = STUB_BUCKETS, seed: int = STUB_SEED):
        generator = torch.Generator().manual_seed(seed)
        self.dim = dim
        self.n_buckets = n_buckets
        self.table = torch.randn(n_buckets, dim, generator=generator)
        self.empty = torch.randn(dim, generator=generator)

    def _bucket(self, segment: int, word: str) -> int:
        digest = text_sha256(f"{segment}:{word}")
        return int(digest[:8], 16) % self.n_buckets

    def encode(self, pair_text: str) -> torch.Tensor:
        tokens = pair_tokens(pair_text)
        if not tokens:
            return self.empty.clone()
        rows = torch.tensor([self._bucket(s, w) for s, w in tokens], dtype=torch.long)
        return self.table[rows].mean(dim=0)


class CachedContextEncoder:
    def __init__(self, vectors: Dict[str, torch.Tensor], dim: int):
        self.vectors = vectors
        self.dim = dim

    @classmethod
    def load(cls, path: Union[str, Path], dim: int) -> "CachedContextEncoder":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"embedding cache not found: {path}")
        vectors = {}
        with open(path, "r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                    key, values = row["pair_text_sha256"], row["vector"]
                except (json.JSONDecodeError, KeyError, TypeError) as e:
                    raise ConfigError(f"{path}:{line_no}: bad embedding row ({e})") from e
                if len(values) != dim:
                    raise ConfigError(
                        f"{path}:{line_no}: vector has {len(values)} dims, expected {dim}"
                    )
                vectors[key] = torch.tensor(values, dtype=torch.float32)
        logger.info(f"Loaded {len(vectors)} cached pair embeddings from {path}")
        return cls(vectors, dim)

    def encode(self, pair_text: str) -> torch.Tensor:
        key = text_sha256(pair_text)
        if key in self.vectors:
            return self.vectors[key].clone()
        if not pair_tokens(pair_text):
            return torch.zeros(self.dim)
        raise ModelInputError(f"no cached embedding for pair {pair_text!r}")


def build_context_encoder(config) -> ContextEncoder:
    """Selects the encoder named by ``config.model.context_encoder``."""
    model, paths = config.model, config.paths
    if model.context_encoder == "stub":
        return StubContextEncoder(dim=model.d_ctx)
    cache_path = paths.embedding_cache
    if paths.embedding_cache_repo:
        repo_id, filename = parse_hub_reference(paths.embedding_cache_repo)
        cache_path = fetch_artifact(repo_id, filename)
    if not cache_path:
        raise ConfigError("context_encoder 'cache' needs paths.embedding_cache or embedding_cache_repo")
    return CachedContextEncoder.load(cache_path, model.d_ctx)
