"""Deterministic seed derivation from a master seed and named coordinates."""

from __future__ import annotations

import hashlib
import json
import random


def derive_seed(master_seed: int, *coords) -> int:
    """64-bit seed from SHA-256 over the JSON encoding of ``[master_seed, *coords]``."""
    payload = json.dumps([master_seed, *coords], sort_keys=True, separators=(",", ":"))
    return int.from_bytes(hashlib.sha256(payload.encode()).digest()[:8], "big")


def derive_rng(master_seed: int, *coords) -> random.Random:
    return random.Random(derive_seed(master_seed, *coords))
