"""Lamport one-time signatures lifted to a stateful Merkle many-time scheme.

Signature layout (fixed length for a given depth d)::

    leaf index     4 bytes, big endian
    revealed      256 x 32 bytes   (preimage selected by each digest bit)
    leaf vk       512 x 32 bytes   (vk[i][0], vk[i][1] for i = 0..255)
    auth path       d x 32 bytes   (siblings from leaf level upwards)
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .hashing import DEFAULT_HASH, DIGEST_SIZE, HashConfig

OTS_BITS = 256
MAX_DEPTH = 16
SEED_SIZE = 32


class LeafExhaustedError(RuntimeError):
    """Every one-time leaf of a Merkle signer has been used."""


@dataclass(frozen=True)
class OtsKeypair:
    sk: tuple[tuple[bytes, bytes], ...]
    vk: tuple[tuple[bytes, bytes], ...]

    def vk_bytes(self) -> bytes:
        return b"".join(a + b for a, b in self.vk)


def ots_from_seed(seed: bytes, cfg: HashConfig = DEFAULT_HASH) -> OtsKeypair:
    sk = tuple(
        tuple(cfg.digest("kdf", seed, struct.pack(">HB", i, b)) for b in (0, 1))
        for i in range(OTS_BITS)
    )
    vk = tuple(tuple(cfg.digest("leaf", s) for s in pair) for pair in sk)
    return OtsKeypair(sk, vk)


def message_bits(msg: bytes, cfg: HashConfig = DEFAULT_HASH) -> np.ndarray:
    d = cfg.digest("challenge", msg)
    return np.unpackbits(np.frombuffer(d, dtype=np.uint8))


def ots_sign(kp: OtsKeypair, msg: bytes, cfg: HashConfig = DEFAULT_HASH) -> bytes:
    bits = message_bits(msg, cfg)
    return b"".join(kp.sk[i][b] for i, b in enumerate(bits))


def ots_verify(vk_flat: bytes, msg: bytes, sig: bytes, cfg: HashConfig = DEFAULT_HASH) -> bool:
    if len(sig) != OTS_BITS * DIGEST_SIZE or len(vk_flat) != 2 * OTS_BITS * DIGEST_SIZE:
        return False
    bits = message_bits(msg, cfg)
    for i, b in enumerate(bits):
        s = sig[i * DIGEST_SIZE:(i + 1) * DIGEST_SIZE]
        off = (2 * i + int(b)) * DIGEST_SIZE
        if cfg.digest("leaf", s) != vk_flat[off:off + DIGEST_SIZE]:
            return False
    return True


def leaf_hash(vk_flat: bytes, cfg: HashConfig = DEFAULT_HASH) -> bytes:
    return cfg.digest("node", b"\x00", vk_flat)


def node_hash(left: bytes, right: bytes, cfg: HashConfig = DEFAULT_HASH) -> bytes:
    return cfg.digest("node", b"\x01", left, right)


@dataclass(eq=False)
class MerkleSigKeypair:
    """Stateful signer. One handle must not be used from two threads at once."""

    depth: int
    leaf_seeds: tuple[bytes, ...]
    root: bytes
    next_leaf: int = 0
    cfg: HashConfig = field(default=DEFAULT_HASH, repr=False)
    levels: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if len(self.leaf_seeds) != 2 ** self.depth:
            raise ValueError("need 2^depth leaf seeds")
        if not 0 <= self.next_leaf <= 2 ** self.depth:
            raise ValueError("leaf counter out of range")
        if not self.levels:
            self.levels = tree_levels(self.leaf_seeds, self.cfg)
        if self.levels[-1][0] != self.root:
            raise ValueError("root does not match the leaf seeds")

    @property
    def remaining(self) -> int:
        return 2 ** self.depth - self.next_leaf


def tree_levels(seeds, cfg: HashConfig) -> list[list[bytes]]:
    level = [leaf_hash(ots_from_seed(s, cfg).vk_bytes(), cfg) for s in seeds]
    levels = [level]
    while len(level) > 1:
        level = [node_hash(level[i], level[i + 1], cfg) for i in range(0, len(level), 2)]
        levels.append(level)
    return levels


def ds_keygen(depth: int, rng: np.random.Generator, cfg: HashConfig = DEFAULT_HASH) -> MerkleSigKeypair:
    if not 0 <= depth <= MAX_DEPTH:
        raise ValueError(f"depth must be in [0, {MAX_DEPTH}]")
    seeds = tuple(rng.bytes(SEED_SIZE) for _ in range(2 ** depth))
    levels = tree_levels(seeds, cfg)
    return MerkleSigKeypair(depth, seeds, levels[-1][0], 0, cfg, levels)


def signature_length(depth: int) -> int:
    return 4 + OTS_BITS * DIGEST_SIZE + 2 * OTS_BITS * DIGEST_SIZE + depth * DIGEST_SIZE


def ds_sign(kp: MerkleSigKeypair, msg: bytes) -> bytes:
    """Sign with the next unused leaf and advance the counter."""
    if kp.next_leaf >= 2 ** kp.depth:
        raise LeafExhaustedError(f"all {2 ** kp.depth} leaves used")
    idx = kp.next_leaf
    kp.next_leaf += 1
    ots = ots_from_seed(kp.leaf_seeds[idx], kp.cfg)
    path = []
    pos = idx
    for level in kp.levels[:-1]:
        path.append(level[pos ^ 1])
        pos >>= 1
    return struct.pack(">I", idx) + ots_sign(ots, msg, kp.cfg) + ots.vk_bytes() + b"".join(path)


def ds_verify(root: bytes, msg: bytes, sig: bytes, depth: int, cfg: HashConfig = DEFAULT_HASH) -> bool:
    """Stateless verification against the Merkle root."""
    if len(sig) != signature_length(depth):
        return False
    (idx,) = struct.unpack_from(">I", sig, 0)
    if idx >= 2 ** depth:
        return False
    pos = 4
    ots_sig = sig[pos:pos + OTS_BITS * DIGEST_SIZE]
    pos += OTS_BITS * DIGEST_SIZE
    vk_flat = sig[pos:pos + 2 * OTS_BITS * DIGEST_SIZE]
    pos += 2 * OTS_BITS * DIGEST_SIZE
    if not ots_verify(vk_flat, msg, ots_sig, cfg):
        return False
    node = leaf_hash(vk_flat, cfg)
    for level in range(depth):
        sibling = sig[pos:pos + DIGEST_SIZE]
        pos += DIGEST_SIZE
        node = node_hash(sibling, node, cfg) if (idx >> level) & 1 else node_hash(node, sibling, cfg)
    return node == root
