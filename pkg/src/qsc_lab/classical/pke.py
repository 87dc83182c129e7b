"""Hashed-ElGamal (DHIES-style) public-key encryption.

Ciphertext sections: group element ``u = g^r``, body ``m XOR stream``, and a
32-byte HMAC-SHA256 tag over ``u || body``. Stream and MAC keys are derived
from the shared element ``y^r`` and ``u`` with separate hash domains.
"""
from __future__ import annotations

import hmac
from dataclasses import dataclass

import numpy as np

from .hashing import DEFAULT_HASH, DIGEST_SIZE, HashConfig
from .wire import MalformedError, pack_sections, unpack_sections

MAX_MESSAGE_BYTES = 4096


@dataclass(frozen=True)
class Group:
    name: str
    code: int
    p: int
    q: int
    g: int

    @property
    def element_size(self) -> int:
        return (self.p.bit_length() + 7) // 8

    def encode(self, x: int) -> bytes:
        return x.to_bytes(self.element_size, "big")

    def is_element(self, x: int) -> bool:
        return 1 < x < self.p and pow(x, self.q, self.p) == 1


_MODP2048_P = int(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74020BBEA63B139B22514A08798E3404DD"
    "EF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF0598DA48361C55D39A69163FA8FD24CF5F"
    "83655D23DCA3AD961C62F356208552BB9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF6955817183995497CEA956AE515D2261898FA0510"
    "15728E5A8AACAA68FFFFFFFFFFFFFFFF",
    16,
)

GROUPS = {
    # safe prime p = 2q + 1 just below 2^64; 4 = 2^2 generates the order-q subgroup
    "test64": Group("test64", 1, 18446744073709550147, 9223372036854775073, 4),
    # 2048-bit MODP group (RFC 3526 group 14)
    "modp2048": Group("modp2048", 2, _MODP2048_P, (_MODP2048_P - 1) // 2, 2),
}
GROUPS_BY_CODE = {g.code: g for g in GROUPS.values()}


def get_group(name: str) -> Group:
    try:
        return GROUPS[name]
    except KeyError:
        raise ValueError(f"unknown group {name!r}; choose from {sorted(GROUPS)}") from None


def random_exponent(group: Group, rng: np.random.Generator) -> int:
    """Uniform integer in [1, q)."""
    nbytes = (group.q.bit_length() + 7) // 8 + 8
    while True:
        v = int.from_bytes(rng.bytes(nbytes), "big") % group.q
        if v:
            return v


@dataclass(frozen=True)
class PkePublicKey:
    group: Group
    y: int

    def to_bytes(self) -> bytes:
        return bytes([self.group.code]) + self.group.encode(self.y)


@dataclass(frozen=True)
class PkeKeypair:
    group: Group
    x: int
    y: int

    def __post_init__(self):
        if pow(self.group.g, self.group.q, self.group.p) != 1:
            raise ValueError("generator does not have order q")
        if not 1 <= self.x < self.group.q or pow(self.group.g, self.x, self.group.p) != self.y:
            raise ValueError("inconsistent PKE key pair")

    @property
    def public(self) -> PkePublicKey:
        return PkePublicKey(self.group, self.y)


def pke_keygen(group: Group | str, rng: np.random.Generator) -> PkeKeypair:
    group = get_group(group) if isinstance(group, str) else group
    x = random_exponent(group, rng)
    return PkeKeypair(group, x, pow(group.g, x, group.p))


def _keys(group: Group, u: int, shared: int, length: int, cfg: HashConfig) -> tuple[bytes, bytes]:
    ub, sb = group.encode(u), group.encode(shared)
    blocks = []
    for counter in range((length + DIGEST_SIZE - 1) // DIGEST_SIZE):
        blocks.append(cfg.digest("kdf", sb, ub, counter.to_bytes(4, "big")))
    stream = b"".join(blocks)[:length]
    return stream, cfg.digest("mac", sb, ub)


def _xor(a: bytes, b: bytes) -> bytes:
    return (np.frombuffer(a, dtype=np.uint8) ^ np.frombuffer(b, dtype=np.uint8)).tobytes()


def pke_enc(pk: PkePublicKey, m: bytes, rng: np.random.Generator, cfg: HashConfig = DEFAULT_HASH) -> bytes:
    if len(m) > MAX_MESSAGE_BYTES:
        raise ValueError(f"message longer than {MAX_MESSAGE_BYTES} bytes")
    g = pk.group
    r = random_exponent(g, rng)
    u = pow(g.g, r, g.p)
    stream, mac_key = _keys(g, u, pow(pk.y, r, g.p), len(m), cfg)
    body = _xor(m, stream)
    tag = hmac.new(mac_key, g.encode(u) + body, "sha256").digest()
    return pack_sections([g.encode(u), body, tag])


def pke_parts(c: bytes) -> list[bytes]:
    return unpack_sections(c, 3)


def pke_dec(kp: PkeKeypair, c: bytes, cfg: HashConfig = DEFAULT_HASH) -> bytes | None:
    """Plaintext, or None on any integrity failure."""
    g = kp.group
    try:
        ub, body, tag = pke_parts(c)
    except MalformedError:
        return None
    if len(ub) != g.element_size or len(tag) != DIGEST_SIZE or len(body) > MAX_MESSAGE_BYTES:
        return None
    u = int.from_bytes(ub, "big")
    if not g.is_element(u):
        return None
    stream, mac_key = _keys(g, u, pow(u, kp.x, g.p), len(body), cfg)
    expected = hmac.new(mac_key, ub + body, "sha256").digest()
    if not hmac.compare_digest(expected, tag):
        return None
    return _xor(body, stream)
