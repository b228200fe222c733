"""Embedding value type, cosine geometry, and a deterministic toy embedder.

The embedder maps text to a fixed-dimension vector by hashing character
n-grams into seeded signed slots. It is cheap, deterministic across
processes, and invertible by exhaustive search at small scale, which makes
ground truth computable for every attack experiment. Callers only ever see
the black-box surface: text in, vector out, one query counted per call.
"""

import hashlib
import threading
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class ConfigError(ValueError):
    """Invalid configuration value."""


@dataclass(frozen=True, eq=False)
class Embedding:
    """Fixed-dimension real vector with an optional language tag."""

    values: np.ndarray
    lang: str | None = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 1:
            raise ValueError("embedding values must be one-dimensional")
        if values.size < 2:
            raise ValueError("embedding dimension must be at least 2")
        if not np.all(np.isfinite(values)):
            raise ValueError("embedding components must be finite")

    @property
    def dim(self) -> int:
        return int(self.values.size)

    def with_values(self, values: np.ndarray) -> "Embedding":
        return Embedding(values, lang=self.lang)

    def with_lang(self, lang: str | None) -> "Embedding":
        return Embedding(self.values, lang=lang)


@dataclass(frozen=True)
class TextSample:
    """Identified, language-tagged text record."""

    id: str
    text: str
    lang: str


def cosine(a: "Embedding | np.ndarray", b: "Embedding | np.ndarray") -> float:
    """Cosine similarity in [-1, 1].

    Dimension mismatch raises; an all-zero vector on either side yields 0.0
    by convention so metric aggregation never aborts on degenerate inputs.
    """
    va = a.values if isinstance(a, Embedding) else np.asarray(a, dtype=np.float64)
    vb = b.values if isinstance(b, Embedding) else np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(np.dot(va, vb) / (na * nb), -1.0, 1.0))


@dataclass(frozen=True)
class NgramConfig:
    """Configuration of the hashed character n-gram embedder.

    ``n`` is the maximum gram order; all orders 1..n contribute, so partial
    texts still land near their completions and greedy search has a usable
    score landscape.
    """

    n: int = 3
    dim: int = 256
    seed: int = 0
    unit_norm: bool = True

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigError("n-gram order must be >= 1")
        if self.dim < 2:
            raise ConfigError("embedding dimension must be >= 2")


# (seed, dim, gram) -> (slot index, sign); grams repeat heavily across texts.
_SLOT_CACHE: dict[tuple[int, int, str], tuple[int, float]] = {}


def _gram_slot(gram: str, seed: int, dim: int) -> tuple[int, float]:
    key = (seed, dim, gram)
    slot = _SLOT_CACHE.get(key)
    if slot is None:
        salt = (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
        digest = hashlib.blake2b(gram.encode("utf-8"), key=salt, digest_size=8).digest()
        h = int.from_bytes(digest, "little")
        slot = (h % dim, 1.0 if (h >> 63) == 0 else -1.0)
        _SLOT_CACHE[key] = slot
    return slot


def embed_ngram(text: str, config: NgramConfig) -> Embedding:
    """Hashed character n-gram embedding; a pure function of (text, config)."""
    vec = np.zeros(config.dim, dtype=np.float64)
    grams: Counter[str] = Counter()
    for order in range(1, config.n + 1):
        for i in range(len(text) - order + 1):
            grams[text[i : i + order]] += 1
    for gram, count in grams.items():
        idx, sign = _gram_slot(gram, config.seed, config.dim)
        vec[idx] += sign * count
    if config.unit_norm:
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            vec /= norm
    return Embedding(vec)


class BlackBoxEmbedder(ABC):
    """Encoder reachable only through embed queries.

    Implementations must be deterministic per input and count exactly one
    query per embed call; the counter must be safe under concurrent use.
    """

    @abstractmethod
    def embed(self, text: str) -> Embedding: ...

    @abstractmethod
    def dimension(self) -> int: ...

    @abstractmethod
    def queries_used(self) -> int: ...

    def embed_many(self, texts: Sequence[str]) -> list[Embedding]:
        return [self.embed(t) for t in texts]


class NgramEmbedder(BlackBoxEmbedder):
    """The toy embedder behind the black-box interface."""

    def __init__(self, config: NgramConfig | None = None, **kwargs):
        if config is not None and kwargs:
            raise ConfigError("pass either a config object or keyword fields, not both")
        self.config = config or NgramConfig(**kwargs)
        self._lock = threading.Lock()
        self._queries = 0

    def embed(self, text: str) -> Embedding:
        with self._lock:
            self._queries += 1
        return embed_ngram(text, self.config)

    def dimension(self) -> int:
        return self.config.dim

    def queries_used(self) -> int:
        with self._lock:
            return self._queries
