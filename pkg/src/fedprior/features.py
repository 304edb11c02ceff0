"""Hashed word uni+bigram features."""

from __future__ import annotations

import hashlib
import re

import numpy as np

DEFAULT_DIM = 4096

_TOKEN = re.compile(r"[a-z0-9]+(?:'[a-z0-9]+)*")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def ngrams(tokens: list[str]) -> list[str]:
    grams = list(tokens)
    grams.extend(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
    return grams


def bucket(gram: str, dim: int, seed: int) -> int:
    key = seed.to_bytes(8, "little", signed=True)
    digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8, key=key).digest()
    return int.from_bytes(digest, "little") % dim


def featurize(text: str, hash_seed: int = 0, dim: int = DEFAULT_DIM) -> np.ndarray:
    """L2-normalised bucket counts of the lowercased unigrams and bigrams of ``text``."""
    vec = np.zeros(dim)
    for gram in ngrams(tokenize(text)):
        vec[bucket(gram, dim, hash_seed)] += 1.0
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec


def featurize_all(texts, hash_seed: int = 0, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Stack :func:`featurize` over ``texts`` into an ``(n, dim)`` matrix."""
    out = np.zeros((len(texts), dim))
    for i, text in enumerate(texts):
        out[i] = featurize(text, hash_seed, dim)
    return out
