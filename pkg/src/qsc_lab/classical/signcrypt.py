"""Encrypt-then-sign classical signcryption and its two-keypair symmetric variant.

Ciphertext sections, in order::

    u       group element of the DHIES encryption (big endian, fixed width)
    body    plaintext XOR key stream
    mac     HMAC-SHA256 over u || body
    sig     Merkle/Lamport signature over e || vk_S || ek_R,
            where e = sections(u, body, mac)

The signature binds the sender's full public key and the receiver's
encryption key, so a ciphertext cannot be re-targeted or re-attributed
without a fresh signature.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .hashing import DEFAULT_HASH, DIGEST_SIZE
from .hashsig import MAX_DEPTH, SEED_SIZE, MerkleSigKeypair, ds_keygen, ds_sign, ds_verify, tree_levels
from .pke import (
    GROUPS_BY_CODE,
    PkeKeypair,
    PkePublicKey,
    get_group,
    pke_dec,
    pke_enc,
    pke_keygen,
)
from .wire import MalformedError, pack_sections, unpack_sections

KEY_FORMAT_VERSION = 1
DEFAULT_DEPTH = 2
DEFAULT_GROUP = "test64"


@dataclass(frozen=True)
class SCPublicKey:
    """vek: signature verification root plus encryption key; also carries n and an optional ID."""

    n: int
    depth: int
    root: bytes
    enc: PkePublicKey
    user_id: str = ""

    def to_bytes(self) -> bytes:
        head = struct.pack(">BHB", KEY_FORMAT_VERSION, self.n, self.depth)
        return pack_sections([head, self.root, self.enc.to_bytes(), self.user_id.encode()])

    @classmethod
    def from_bytes(cls, data: bytes) -> "SCPublicKey":
        head, root, enc, uid = unpack_sections(data, 4)
        if len(head) != 4 or head[0] != KEY_FORMAT_VERSION:
            raise MalformedError("bad public key header")
        _, n, depth = struct.unpack(">BHB", head)
        if depth > MAX_DEPTH or len(root) != DIGEST_SIZE or not enc:
            raise MalformedError("bad public key fields")
        group = GROUPS_BY_CODE.get(enc[0])
        if group is None or len(enc) != 1 + group.element_size:
            raise MalformedError("unknown group or bad element width")
        y = int.from_bytes(enc[1:], "big")
        if not group.is_element(y):
            raise MalformedError("encryption key is not a subgroup element")
        try:
            user_id = uid.decode()
        except UnicodeDecodeError:
            raise MalformedError("user id is not UTF-8") from None
        return cls(n, depth, root, PkePublicKey(group, y), user_id)

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()[:16]


@dataclass(eq=False)
class SCSecretKey:
    """sdk: signing state and decryption exponent; includes the matching vek."""

    n: int
    signer: MerkleSigKeypair
    dec: PkeKeypair
    user_id: str = ""

    @property
    def vek(self) -> SCPublicKey:
        return SCPublicKey(self.n, self.signer.depth, self.signer.root, self.dec.public, self.user_id)

    def to_bytes(self) -> bytes:
        head = struct.pack(">BHBI", KEY_FORMAT_VERSION, self.n, self.signer.depth, self.signer.next_leaf)
        g = self.dec.group
        return pack_sections([
            head,
            b"".join(self.signer.leaf_seeds),
            bytes([g.code]) + g.encode(self.dec.x),
            self.user_id.encode(),
        ])

    @classmethod
    def from_bytes(cls, data: bytes) -> "SCSecretKey":
        head, seeds, xs, uid = unpack_sections(data, 4)
        if len(head) != 8 or head[0] != KEY_FORMAT_VERSION:
            raise MalformedError("bad secret key header")
        _, n, depth, next_leaf = struct.unpack(">BHBI", head)
        if depth > MAX_DEPTH or len(seeds) != SEED_SIZE * 2 ** depth or not xs:
            raise MalformedError("bad secret key fields")
        group = GROUPS_BY_CODE.get(xs[0])
        if group is None or len(xs) != 1 + group.element_size:
            raise MalformedError("unknown group or bad exponent width")
        x = int.from_bytes(xs[1:], "big")
        leaf_seeds = tuple(seeds[i:i + SEED_SIZE] for i in range(0, len(seeds), SEED_SIZE))
        try:
            levels = tree_levels(leaf_seeds, DEFAULT_HASH)
            signer = MerkleSigKeypair(depth, leaf_seeds, levels[-1][0], next_leaf, DEFAULT_HASH, levels)
            dec = PkeKeypair(group, x, pow(group.g, x, group.p))
            user_id = uid.decode()
        except (ValueError, UnicodeDecodeError) as exc:
            raise MalformedError(f"inconsistent secret key: {exc}") from None
        return cls(n, signer, dec, user_id)


@dataclass(frozen=True)
class SCKeys:
    sdk: SCSecretKey
    vek: SCPublicKey


def sc_keygen(n: int, rng: np.random.Generator, depth: int = DEFAULT_DEPTH,
              group: str = DEFAULT_GROUP, user_id: str = "") -> SCKeys:
    """Fresh signcryption key pair. ``n`` is recorded in the public key."""
    if not 0 <= n < 2 ** 16:
        raise ValueError("security parameter out of range")
    signer = ds_keygen(depth, rng)
    dec = pke_keygen(get_group(group), rng)
    sdk = SCSecretKey(n, signer, dec, user_id)
    return SCKeys(sdk, sdk.vek)


def _signed_payload(e: bytes, vek_s: SCPublicKey, ek_r: PkePublicKey) -> bytes:
    return pack_sections([e, vek_s.to_bytes(), ek_r.to_bytes()])


def sc_sigenc(sdk_s: SCSecretKey, vek_r: SCPublicKey, m: bytes, rng: np.random.Generator) -> bytes:
    """Encrypt to the receiver, then sign the ciphertext with the sender's next leaf."""
    e = pke_enc(vek_r.enc, m, rng)
    sig = ds_sign(sdk_s.signer, _signed_payload(e, sdk_s.vek, vek_r.enc))
    return pack_sections(unpack_sections(e, 3) + [sig])


def sc_verdec(vek_s: SCPublicKey, sdk_r: SCSecretKey, c: bytes) -> bytes | None:
    """Plaintext, or None for every kind of failure (parse, signature, MAC)."""
    try:
        u, body, mac, sig = unpack_sections(c, 4)
    except MalformedError:
        return None
    e = pack_sections([u, body, mac])
    if not ds_verify(vek_s.root, _signed_payload(e, vek_s, sdk_r.dec.public), sig, vek_s.depth):
        return None
    return pke_dec(sdk_r.dec, e)


@dataclass(frozen=True)
class SharpKey:
    """Symmetric key made of two signcryption key pairs (sender side first)."""

    sender: SCKeys
    receiver: SCKeys


def sharp_keygen(n: int, rng: np.random.Generator, depth: int = DEFAULT_DEPTH,
                 group: str = DEFAULT_GROUP) -> SharpKey:
    return SharpKey(sc_keygen(n, rng, depth, group), sc_keygen(n, rng, depth, group))


def sharp_enc(k: SharpKey, m: bytes, rng: np.random.Generator) -> bytes:
    c = sc_sigenc(k.sender.sdk, k.receiver.vek, m, rng)
    return pack_sections([c, k.sender.vek.to_bytes(), k.receiver.vek.to_bytes()])


def sharp_dec(k: SharpKey, c: bytes) -> bytes | None:
    try:
        inner, vek, vek2 = unpack_sections(c, 3)
    except MalformedError:
        return None
    if vek != k.sender.vek.to_bytes() or vek2 != k.receiver.vek.to_bytes():
        return None
    return sc_verdec(k.sender.vek, k.receiver.sdk, inner)
