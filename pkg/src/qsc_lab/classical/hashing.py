"""Domain-separated SHA-256."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

DIGEST_SIZE = 32


@dataclass(frozen=True)
class HashConfig:
    name: str = "sha256"
    tags: dict = field(default_factory=lambda: {
        "kdf": b"qsc-lab/kdf",
        "mac": b"qsc-lab/mac",
        "leaf": b"qsc-lab/leaf",
        "node": b"qsc-lab/node",
        "challenge": b"qsc-lab/challenge",
    })

    def __post_init__(self):
        if len(set(self.tags.values())) != len(self.tags):
            raise ValueError("domain-separation tags must be pairwise distinct")
        if hashlib.new(self.name).digest_size != DIGEST_SIZE:
            raise ValueError("hash function must produce 256-bit digests")

    def __hash__(self):
        return hash((self.name, tuple(sorted(self.tags.items()))))

    def digest(self, use: str, *parts: bytes) -> bytes:
        h = hashlib.new(self.name)
        tag = self.tags[use]
        h.update(len(tag).to_bytes(1, "big") + tag)
        for p in parts:
            h.update(p)
        return h.digest()


DEFAULT_HASH = HashConfig()
