"""Hybrid quantum signcryption and the schemes derived from it.

A quantum ciphertext is a classical byte string plus the label of a register
inside a :class:`~qsc_lab.context.QContext`. The quantum payload scheme is
the Clifford trap code; a fresh trap key is encapsulated by a classical
scheme (signcryption, symmetric, or public-key) and erased afterwards.

Every quantum scheme built here exposes the same triple::

    keygen(rng) -> (encryption-side key, decryption-side key)
    encrypt(ctx, enc_key, label, rng) -> HybridCiphertext
    decrypt(ctx, dec_key, ct, out_label) -> label of an (m-qubit + reject) register

so the security games can drive any of them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Protocol

import numpy as np

from .auth import (
    TrapAuthKey,
    auth_keygen,
    decrypt_register,
    encrypt_register,
)
from .classical.signcrypt import (
    DEFAULT_DEPTH,
    DEFAULT_GROUP,
    SCKeys,
    SCPublicKey,
    SCSecretKey,
    SharpKey,
    sc_keygen,
    sc_sigenc,
    sc_verdec,
    sharp_dec,
    sharp_enc,
    sharp_keygen,
)
from .classical.pke import PkeKeypair, PkePublicKey, pke_dec, pke_enc, pke_keygen
from .classical.wire import MalformedError, pack_sections, unpack_sections
from .context import QContext
from .qsim import LayoutError


@dataclass(frozen=True)
class HybridCiphertext:
    classical: bytes
    quantum: str

    def with_classical(self, classical: bytes) -> "HybridCiphertext":
        return HybridCiphertext(bytes(classical), self.quantum)


class QuantumScheme(Protocol):
    m: int

    def keygen(self, rng: np.random.Generator) -> tuple[Any, Any]: ...

    def encrypt(self, ctx: QContext, key: Any, label: str, rng: np.random.Generator) -> HybridCiphertext: ...

    def decrypt(self, ctx: QContext, key: Any, ct: HybridCiphertext, out_label: str) -> str: ...


def reject_into(ctx: QContext, out_label: str, m: int, *discard: str) -> str:
    """Discard registers and put a fresh reject state in their place."""
    ctx.discard(*[lab for lab in discard if ctx.has(lab)])
    return ctx.add_basis(out_label, 2 ** m + 1, 2 ** m, reject_extended=True)


# -- quantum payload scheme ------------------------------------------------------------

@dataclass(frozen=True)
class TrapCode:
    """The Clifford trap code as a symmetric-key quantum encryption scheme."""

    m: int
    t: int
    allow_no_traps: bool = False

    @property
    def cipher_qubits(self) -> int:
        return self.m + self.t

    def fresh_key(self, rng: np.random.Generator) -> TrapAuthKey:
        return auth_keygen(self.m, self.t, rng, allow_no_traps=self.allow_no_traps)

    def keygen(self, rng: np.random.Generator) -> tuple[TrapAuthKey, TrapAuthKey]:
        k = self.fresh_key(rng)
        return k, k

    def key_from_bytes(self, data: bytes) -> TrapAuthKey | None:
        try:
            k = TrapAuthKey.from_bytes(data)
        except ValueError:
            return None
        return k if (k.m, k.t) == (self.m, self.t) else None

    def encrypt(self, ctx: QContext, key: TrapAuthKey, label: str, rng=None) -> HybridCiphertext:
        out = ctx.fresh("C")
        encrypt_register(ctx, key, label, out)
        return HybridCiphertext(b"", out)

    def decrypt(self, ctx: QContext, key: TrapAuthKey, ct: HybridCiphertext, out_label: str) -> str:
        if not ctx.has(ct.quantum) or ctx.dim(ct.quantum) != 2 ** self.cipher_qubits:
            return reject_into(ctx, out_label, self.m, ct.quantum)
        return decrypt_register(ctx, key, ct.quantum, out_label)


# -- key encapsulation + payload -----------------------------------------------------

def _encapsulate(ctx: QContext, payload: TrapCode, seal: Callable[[bytes, np.random.Generator], bytes],
                 label: str, rng: np.random.Generator) -> HybridCiphertext:
    k = payload.fresh_key(rng)
    kb = bytearray(k.to_bytes())
    try:
        classical = seal(bytes(kb), rng)
    finally:
        kb[:] = bytes(len(kb))
    ct = payload.encrypt(ctx, k, label, rng)
    del k
    return HybridCiphertext(classical, ct.quantum)


def _decapsulate(ctx: QContext, payload: TrapCode, unseal: Callable[[bytes], bytes | None],
                 ct: HybridCiphertext, out_label: str) -> str:
    kb = unseal(ct.classical)
    k = payload.key_from_bytes(kb) if kb is not None else None
    if k is None:
        return reject_into(ctx, out_label, payload.m, ct.quantum)
    return payload.decrypt(ctx, k, HybridCiphertext(b"", ct.quantum), out_label)


# -- classical signcryption as a pluggable scheme ------------------------------------------

@dataclass(frozen=True)
class ClassicalSC:
    """Encrypt-then-sign signcryption with fixed parameters."""

    n: int
    depth: int = DEFAULT_DEPTH
    group: str = DEFAULT_GROUP

    def keygen(self, rng: np.random.Generator, user_id: str = "") -> SCKeys:
        return sc_keygen(self.n, rng, self.depth, self.group, user_id)

    def sigenc(self, sdk_s: SCSecretKey, vek_r: SCPublicKey, m: bytes, rng: np.random.Generator) -> bytes:
        return sc_sigenc(sdk_s, vek_r, m, rng)

    def verdec(self, vek_s: SCPublicKey, sdk_r: SCSecretKey, c: bytes) -> bytes | None:
        return sc_verdec(vek_s, sdk_r, c)


@dataclass(frozen=True)
class SharpSKE:
    """Symmetric encryption from two signcryption key pairs."""

    sc: ClassicalSC

    def keygen(self, rng: np.random.Generator) -> SharpKey:
        return sharp_keygen(self.sc.n, rng, self.sc.depth, self.sc.group)

    def enc(self, k: SharpKey, m: bytes, rng: np.random.Generator) -> bytes:
        return sharp_enc(k, m, rng)

    def dec(self, k: SharpKey, c: bytes) -> bytes | None:
        return sharp_dec(k, c)


@dataclass(frozen=True)
class DhiesPKE:
    group: str = DEFAULT_GROUP

    def keygen(self, rng: np.random.Generator) -> PkeKeypair:
        return pke_keygen(self.group, rng)

    def enc(self, ek: PkePublicKey, m: bytes, rng: np.random.Generator) -> bytes:
        return pke_enc(ek, m, rng)

    def dec(self, dk: PkeKeypair, c: bytes) -> bytes | None:
        return pke_dec(dk, c)


# -- the hybrid QSC ----------------------------------------------------------------

@dataclass(frozen=True)
class QscKeypair:
    sdk: SCSecretKey
    vek: SCPublicKey

    @property
    def n(self) -> int:
        return self.vek.n

    @property
    def user_id(self) -> str:
        return self.vek.user_id


@dataclass(frozen=True)
class HybridQSC:
    """Signcrypt a fresh trap key classically; encrypt the quantum payload under it."""

    classical: ClassicalSC
    payload: TrapCode

    @property
    def m(self) -> int:
        return self.payload.m

    @classmethod
    def build(cls, m: int = 1, t: int = 1, depth: int = DEFAULT_DEPTH, group: str = DEFAULT_GROUP,
              allow_no_traps: bool = False) -> "HybridQSC":
        """Security parameter n is taken to be the trap count t."""
        return cls(ClassicalSC(t, depth, group), TrapCode(m, t, allow_no_traps))

    def keygen(self, rng: np.random.Generator, user_id: str = "") -> QscKeypair:
        keys = self.classical.keygen(rng, user_id)
        return QscKeypair(keys.sdk, keys.vek)

    def sigenc(self, ctx: QContext, sdk_s: SCSecretKey, vek_r: SCPublicKey, label: str,
               rng: np.random.Generator) -> HybridCiphertext:
        return _encapsulate(ctx, self.payload, lambda kb, r: self.classical.sigenc(sdk_s, vek_r, kb, r),
                            label, rng)

    def verdec(self, ctx: QContext, vek_s: SCPublicKey, sdk_r: SCSecretKey, ct: HybridCiphertext,
               out_label: str) -> str:
        return _decapsulate(ctx, self.payload, lambda c: self.classical.verdec(vek_s, sdk_r, c), ct, out_label)


@dataclass(frozen=True)
class DerivedScheme:
    """Signature (kind 'qs') or public-key encryption (kind 'pkqe') from a QSC.

    Both bundle two key pairs the same way: the encryption/signing side holds
    (sdk_S, vek_R) and the decryption/verification side holds (vek_S, sdk_R).
    """

    qsc: HybridQSC
    kind: str = "pkqe"

    @property
    def m(self) -> int:
        return self.qsc.m

    def keygen(self, rng: np.random.Generator):
        s = self.qsc.keygen(rng)
        r = self.qsc.keygen(rng)
        return (s.sdk, r.vek), (s.vek, r.sdk)

    def encrypt(self, ctx, key, label, rng) -> HybridCiphertext:
        sdk_s, vek_r = key
        return self.qsc.sigenc(ctx, sdk_s, vek_r, label, rng)

    def decrypt(self, ctx, key, ct, out_label) -> str:
        vek_s, sdk_r = key
        return self.qsc.verdec(ctx, vek_s, sdk_r, ct, out_label)


def derive_qs(qsc: HybridQSC) -> DerivedScheme:
    return DerivedScheme(qsc, "qs")


def derive_pkqe(qsc: HybridQSC) -> DerivedScheme:
    return DerivedScheme(qsc, "pkqe")


@dataclass(frozen=True)
class SharpScheme:
    """Symmetric-key quantum encryption whose key is two QSC key pairs."""

    qsc: HybridQSC

    @property
    def m(self) -> int:
        return self.qsc.m

    def keygen(self, rng: np.random.Generator):
        k = (self.qsc.keygen(rng), self.qsc.keygen(rng))
        return k, k

    def encrypt(self, ctx, key, label, rng) -> HybridCiphertext:
        first, second = key
        ct = self.qsc.sigenc(ctx, first.sdk, second.vek, label, rng)
        return ct.with_classical(pack_sections([ct.classical, first.vek.to_bytes(), second.vek.to_bytes()]))

    def decrypt(self, ctx, key, ct, out_label) -> str:
        first, second = key
        try:
            inner, vek, vek2 = unpack_sections(ct.classical, 3)
        except MalformedError:
            return reject_into(ctx, out_label, self.m, ct.quantum)
        if vek != first.vek.to_bytes() or vek2 != second.vek.to_bytes():
            return reject_into(ctx, out_label, self.m, ct.quantum)
        return self.qsc.verdec(ctx, first.vek, second.sdk, ct.with_classical(inner), out_label)


def sharp(qsc: HybridQSC) -> SharpScheme:
    return SharpScheme(qsc)


@dataclass(frozen=True)
class SymmetricHybrid:
    """Symmetric-key quantum encryption: a classical SKE carries the trap key."""

    ske: Any
    payload: TrapCode

    @property
    def m(self) -> int:
        return self.payload.m

    def keygen(self, rng: np.random.Generator):
        k = self.ske.keygen(rng)
        return k, k

    def encrypt(self, ctx, key, label, rng) -> HybridCiphertext:
        return _encapsulate(ctx, self.payload, lambda kb, r: self.ske.enc(key, kb, r), label, rng)

    def decrypt(self, ctx, key, ct, out_label) -> str:
        return _decapsulate(ctx, self.payload, lambda c: self.ske.dec(key, c), ct, out_label)


@dataclass(frozen=True)
class PublicKeyHybrid:
    """Public-key quantum encryption: a classical PKE carries the trap key."""

    pke: Any
    payload: TrapCode

    @property
    def m(self) -> int:
        return self.payload.m

    def keygen(self, rng: np.random.Generator):
        kp = self.pke.keygen(rng)
        return kp.public, kp

    def encrypt(self, ctx, key, label, rng) -> HybridCiphertext:
        return _encapsulate(ctx, self.payload, lambda kb, r: self.pke.enc(key, kb, r), label, rng)

    def decrypt(self, ctx, key, ct, out_label) -> str:
        return _decapsulate(ctx, self.payload, lambda c: self.pke.dec(key, c), ct, out_label)


def skqe_hybrid(ske, payload: TrapCode) -> SymmetricHybrid:
    return SymmetricHybrid(ske, payload)


def pkqe_hybrid(pke, payload: TrapCode) -> PublicKeyHybrid:
    return PublicKeyHybrid(pke, payload)


# -- multi-user wrapper ----------------------------------------------------------------

class UnknownUserError(KeyError):
    """An ID has no entry in the public directory."""


@dataclass
class MultiUserQSC:
    """Attach (sender ID, receiver ID) as a basis register before signcrypting.

    The directory maps IDs to public keys; an ID's index in the directory is
    its ``id_bits``-bit encoding in the attached register.
    """

    m: int
    t: int
    id_bits: int = 2
    depth: int = DEFAULT_DEPTH
    group: str = DEFAULT_GROUP
    max_id_bytes: int = 32
    directory: dict[str, SCPublicKey] = field(default_factory=dict)

    def __post_init__(self):
        self.inner = HybridQSC.build(self.m + 2 * self.id_bits, self.t, self.depth, self.group)

    @property
    def id_dim(self) -> int:
        return 2 ** (2 * self.id_bits)

    def keygen(self, rng: np.random.Generator, user_id: str) -> QscKeypair:
        if not user_id or len(user_id.encode()) > self.max_id_bytes:
            raise ValueError(f"user id must be 1..{self.max_id_bytes} bytes")
        if user_id in self.directory:
            raise ValueError(f"user id {user_id!r} already registered")
        if len(self.directory) >= 2 ** self.id_bits:
            raise ValueError("directory is full for this id width")
        kp = self.inner.keygen(rng, user_id)
        self.directory[user_id] = kp.vek
        return kp

    def lookup(self, user_id: str) -> SCPublicKey:
        try:
            return self.directory[user_id]
        except KeyError:
            raise UnknownUserError(user_id) from None

    def index_of(self, user_id: str) -> int:
        self.lookup(user_id)
        return list(self.directory).index(user_id)

    def id_code(self, sender: str, receiver: str) -> int:
        return self.index_of(sender) * 2 ** self.id_bits + self.index_of(receiver)

    def sigenc(self, ctx: QContext, sdk_s: SCSecretKey, receiver: str, label: str,
               rng: np.random.Generator) -> HybridCiphertext:
        vek_r = self.lookup(receiver)
        ids = ctx.add_basis(ctx.fresh("ID"), self.id_dim, self.id_code(sdk_s.user_id, receiver))
        plain = ctx.merge([label, ids], ctx.fresh("MI"))
        return self.inner.sigenc(ctx, sdk_s, vek_r, plain, rng)

    def verdec(self, ctx: QContext, sdk_r: SCSecretKey, sender: str, ct: HybridCiphertext,
               out_label: str, rng: np.random.Generator) -> tuple[str | None, str | None, str]:
        """Returns (sender ID, receiver ID, output register); IDs are None on reject."""
        vek_s = self.lookup(sender)
        joint = self.inner.verdec(ctx, vek_s, sdk_r, ct, ctx.fresh("Y"))
        dm, di = 2 ** self.m, self.id_dim
        diag = np.real(np.diag(ctx.state([joint]).matrix))
        # outcome j < di: attached IDs read j; outcome di: reject
        probs = np.append(diag[:-1].reshape(dm, di).sum(axis=0), diag[-1])
        probs = np.clip(probs, 0, None)
        outcome = int(rng.choice(di + 1, p=probs / probs.sum()))
        if outcome == di:
            return None, None, reject_into(ctx, out_label, self.m, joint)
        names = list(self.directory)
        s_idx, r_idx = divmod(outcome, 2 ** self.id_bits)
        s_id = names[s_idx] if s_idx < len(names) else None
        r_id = names[r_idx] if r_idx < len(names) else None
        if (s_id, r_id) != (sender, sdk_r.user_id):
            return s_id, r_id, reject_into(ctx, out_label, self.m, joint)
        op = np.zeros((dm + 1, dm * di + 1), dtype=complex)
        op[np.arange(dm), np.arange(dm) * di + outcome] = 1 / np.sqrt(probs[outcome])
        ctx.apply_kraus([op], [joint], [(out_label, dm + 1)], reject_extended=[out_label])
        return s_id, r_id, out_label


def multiuser_wrap(m: int, t: int, id_bits: int = 2, depth: int = DEFAULT_DEPTH,
                   group: str = DEFAULT_GROUP) -> MultiUserQSC:
    return MultiUserQSC(m, t, id_bits, depth, group)


def check_layout(ctx: QContext, label: str, dim: int) -> None:
    if ctx.dim(label) != dim:
        raise LayoutError(f"register {label!r} has dim {ctx.dim(label)}, expected {dim}")
