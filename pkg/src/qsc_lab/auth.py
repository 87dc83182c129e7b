"""Clifford trap-code one-time authentication and effective-channel analysis.

Encryption appends ``t`` trap qubits in ``|0>`` and applies a secret random
Clifford on all ``m + t`` qubits (message qubits first, most significant).
Decryption undoes the Clifford and accepts iff every trap reads 0; the
rejected weight is moved to the reject vector of ``H_M + |reject>``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .clifford import (
    CliffordElement,
    clifford_from_index,
    clifford_group_order,
    enumerate_cliffords,
    enumerated_unitaries,
    pack_clifford,
    random_clifford,
    uniform_below,
    unpack_clifford,
    KEY_VERSION,
)
from .context import QContext
from .qsim import (
    DensityState,
    KrausChannel,
    LayoutError,
    MAX_QUBITS,
    RegisterLayout,
    choi,
    choi_from_kraus_stack,
    kraus_from_choi,
    trace_norm,
)

EXACT_MAX_QUBITS = 2


@dataclass(frozen=True, eq=False)
class TrapAuthKey:
    clifford: CliffordElement
    m: int
    t: int

    def __post_init__(self):
        if self.m < 1 or self.t < 0:
            raise ValueError("need m >= 1 message qubits and t >= 0 traps")
        if self.clifford.n != self.m + self.t:
            raise ValueError("Clifford size does not match m + t")

    @property
    def n_qubits(self) -> int:
        return self.m + self.t

    def unitary(self) -> np.ndarray:
        return self.clifford.unitary()

    def to_bytes(self) -> bytes:
        return bytes([KEY_VERSION, self.m, self.t]) + pack_clifford(self.clifford)

    @classmethod
    def from_bytes(cls, data: bytes) -> "TrapAuthKey":
        if len(data) < 3 or data[0] != KEY_VERSION:
            raise ValueError("unsupported trap key encoding")
        m, t = data[1], data[2]
        if m < 1 or m + t > MAX_QUBITS:
            raise ValueError("trap key header out of range")
        return cls(unpack_clifford(bytes(data[3:]), m + t), m, t)

    def __eq__(self, other):
        return isinstance(other, TrapAuthKey) and self.to_bytes() == other.to_bytes()

    def __hash__(self):
        return hash(self.to_bytes())


def auth_keygen(m: int, t: int, rng: np.random.Generator, allow_no_traps: bool = False) -> TrapAuthKey:
    """Uniform Clifford key on m + t qubits.

    Up to two qubits the key is an index into the enumerated group; larger
    keys come from the canonical-form sampler. ``allow_no_traps`` admits the
    deliberately insecure t = 0 variant used as a negative control.
    """
    if t < 1 and not allow_no_traps:
        raise ValueError("at least one trap qubit is required")
    n = m + t
    if n > MAX_QUBITS:
        raise ValueError(f"m + t = {n} exceeds the {MAX_QUBITS}-qubit cap")
    if n <= EXACT_MAX_QUBITS:
        c = clifford_from_index(uniform_below(clifford_group_order(n), rng), n)
    else:
        c = random_clifford(n, rng)
    return TrapAuthKey(c, m, t)


def enumerate_keys(m: int, t: int) -> list[TrapAuthKey]:
    return [TrapAuthKey(c, m, t) for c in enumerate_cliffords(m + t)]


# -- layouts and Kraus forms ---------------------------------------------------------

def message_layout(m: int, label: str = "M") -> RegisterLayout:
    return RegisterLayout(((label, 2 ** m),))


def cipher_layout(m: int, t: int, label: str = "C") -> RegisterLayout:
    return RegisterLayout(((label, 2 ** (m + t)),))


def accept_indices(m: int, t: int) -> np.ndarray:
    """Basis indices of M (x) T with all traps 0."""
    return np.arange(2 ** m) * 2 ** t


def enc_isometry(u: np.ndarray, m: int, t: int) -> np.ndarray:
    return u[:, accept_indices(m, t)]


def dec_kraus_stack(u: np.ndarray, m: int, t: int) -> np.ndarray:
    """Kraus stack (ops, 2^m + 1, 2^(m+t)) of decryption under Clifford unitary u."""
    dm, dc = 2 ** m, 2 ** (m + t)
    udag = u.conj().T
    acc = accept_indices(m, t)
    rej = np.setdiff1d(np.arange(dc), acc)
    ops = np.zeros((1 + rej.size, dm + 1, dc), dtype=complex)
    ops[0, :dm, :] = udag[acc, :]
    ops[np.arange(1, 1 + rej.size), dm, :] = udag[rej, :]
    return ops


def enc_channel(k: TrapAuthKey) -> KrausChannel:
    return KrausChannel((enc_isometry(k.unitary(), k.m, k.t),), message_layout(k.m), cipher_layout(k.m, k.t))


def dec_channel(k: TrapAuthKey) -> KrausChannel:
    ops = dec_kraus_stack(k.unitary(), k.m, k.t)
    return KrausChannel(tuple(ops), cipher_layout(k.m, k.t), message_layout(k.m).extended())


def auth_enc(k: TrapAuthKey, rho: DensityState) -> DensityState:
    """C_k (rho (x) |0^t><0^t|) C_k^dag."""
    if rho.dim != 2 ** k.m or rho.layout.reject_extended:
        raise LayoutError(f"plaintext must be a {k.m}-qubit state")
    v = enc_isometry(k.unitary(), k.m, k.t)
    return DensityState(cipher_layout(k.m, k.t), v @ rho.matrix @ v.conj().T, validate=False)


def auth_dec(k: TrapAuthKey, sigma: DensityState) -> DensityState:
    """Undo C_k, accept on all-zero traps, move the rest to the reject vector."""
    if sigma.dim != 2 ** k.n_qubits:
        raise LayoutError(f"ciphertext must be a {k.n_qubits}-qubit state")
    u = k.unitary()
    x = u.conj().T @ sigma.matrix @ u
    acc = accept_indices(k.m, k.t)
    dm = 2 ** k.m
    out = np.zeros((dm + 1, dm + 1), dtype=complex)
    out[:dm, :dm] = x[np.ix_(acc, acc)]
    out[dm, dm] = np.real(np.trace(x)) - np.real(np.trace(out[:dm, :dm]))
    return DensityState(message_layout(k.m).extended(), out, validate=False)


# -- context versions --------------------------------------------------------------

def encrypt_register(ctx: QContext, k: TrapAuthKey, label: str, out_label: str) -> str:
    if ctx.dim(label) != 2 ** k.m:
        raise LayoutError(f"register {label!r} is not {k.m} qubits")
    traps = ctx.add_basis(ctx.fresh("trap"), 2 ** k.t, 0)
    ctx.merge([label, traps], out_label)
    ctx.apply_unitary(k.unitary(), [out_label])
    return out_label


def decrypt_register(ctx: QContext, k: TrapAuthKey, label: str, out_label: str) -> str:
    if ctx.dim(label) != 2 ** k.n_qubits:
        raise LayoutError(f"register {label!r} is not {k.n_qubits} qubits")
    ctx.apply_unitary(k.unitary().conj().T, [label])
    return ctx.compress_or_reject(label, accept_indices(k.m, k.t), out_label)


# -- effective channel ---------------------------------------------------------------

def _ops(c) -> np.ndarray:
    return c.stacked if isinstance(c, KrausChannel) else np.asarray(c, dtype=complex)


def effective_channel(enc: Callable, dec: Callable, attack: KrausChannel,
                      keys: Iterable, side_dim: int = 1) -> tuple[KrausChannel, int]:
    """Key average E_k[Dec_k o attack o Enc_k], with a side register B of dim ``side_dim``.

    ``enc(k)``/``dec(k)`` return Kraus channels (or Kraus stacks) on the
    ciphertext; the attack acts on C (x) B with C first. Returns the averaged
    channel on M (x) B -> (M + reject) (x) B and the number of keys used.
    """
    eye_b = np.eye(side_dim)
    a_ops = attack.stacked
    total = None
    count = 0
    dm = dmp = None
    for k in keys:
        e = _ops(enc(k))
        d = _ops(dec(k))
        if side_dim > 1:
            e = np.stack([np.kron(x, eye_b) for x in e])
            d = np.stack([np.kron(x, eye_b) for x in d])
        if a_ops.shape[2] != e.shape[1]:
            raise LayoutError("attack does not act on ciphertext (x) side register")
        comp = np.einsum("qab,pbc,ecd->qpead", d, a_ops, e, optimize=True)
        comp = comp.reshape(-1, d.shape[1], e.shape[2])
        j = choi_from_kraus_stack(comp, e.shape[2])
        total = j if total is None else total + j
        count += 1
        dm = e.shape[2] // side_dim
        dmp = d.shape[1] // side_dim
    if count == 0:
        raise ValueError("no keys supplied")
    in_layout = RegisterLayout((("M", dm), ("B", side_dim))) if side_dim > 1 else RegisterLayout((("M", dm),))
    if side_dim > 1:
        out_layout = RegisterLayout((("M'", dmp), ("B", side_dim)))
    else:
        out_layout = RegisterLayout((("M", dmp - 1),), reject_extended=True)
    return kraus_from_choi(total / count, in_layout, out_layout), count


def clifford_effective_choi(m: int, t: int, attack: KrausChannel, side_dim: int = 1,
                            keys: Sequence[TrapAuthKey] | None = None) -> np.ndarray:
    """Vectorized normalized Choi of the key-averaged effective channel.

    Uses every Clifford of the enumerated group when ``keys`` is None.
    """
    if keys is None:
        us = enumerated_unitaries(m + t)
    else:
        us = np.stack([k.unitary() for k in keys])
    dm, dc = 2 ** m, 2 ** (m + t)
    acc = accept_indices(m, t)
    rej = np.setdiff1d(np.arange(dc), acc)
    a = attack.stacked
    if a.shape[1:] != (dc * side_dim, dc * side_dim):
        raise LayoutError("attack must act on ciphertext (x) side register")
    a = a.reshape(a.shape[0], dc, side_dim, dc, side_dim)
    enc = us[:, :, acc]                      # (K, dc, dm)
    udag = us.conj().transpose(0, 2, 1)      # (K, dc, dc)
    # attacked ciphertext components: (K, a, dc_out, b_out, dm_in, b_in)
    att = np.einsum("apbqc,kqm->kapbmc", a, enc, optimize=True)
    dec_full = np.einsum("krp,kapbmc->karbmc", udag, att, optimize=True)
    kn = us.shape[0]
    din = dm * side_dim
    dout = (dm + 1) * side_dim
    # accept Kraus op: rows acc of decrypted; reject ops: each rejected row onto reject
    acc_part = dec_full[:, :, acc]           # (K, a, dm, b, dm, b)
    ops_acc = np.zeros((kn, a.shape[0], dm + 1, side_dim, dm, side_dim), dtype=complex)
    ops_acc[:, :, :dm] = acc_part
    vec_acc = ops_acc.reshape(-1, dout, din)
    j = choi_from_kraus_stack(vec_acc, din)
    rej_part = dec_full[:, :, rej]           # (K, a, nrej, b, dm, b)
    ops_rej = np.zeros((kn, a.shape[0], rej.size, dm + 1, side_dim, dm, side_dim), dtype=complex)
    ops_rej[:, :, np.arange(rej.size), dm] = rej_part
    j = j + choi_from_kraus_stack(ops_rej.reshape(-1, dout, din), din)
    return j / kn


# -- DNS simulator fit -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DnsFit:
    p_acc: float
    acc_channel: KrausChannel
    rej_channel: KrausChannel
    residual: float


def dns_blocks(j: np.ndarray, dm: int, db: int = 1) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split a normalized Choi of M B -> (M + reject) B into simulator blocks.

    Returns (J_acc, J_rej, J_fit): the side-register Chois of the accept and
    reject parts and the Choi of the closest simulator form
    ``id_M (x) acc + |reject><reject| (x) rej o Tr_M`` read off those blocks.
    """
    dmp = dm + 1
    t = j.reshape(dm, db, dmp, db, dm, db, dmp, db)
    j_acc = np.einsum("iaibkckd->abcd", t[:, :, :dm, :, :, :, :dm, :]) / dm
    j_rej = np.einsum("iabicd->abcd", t[:, :, dm, :, :, :, dm, :])
    fit = np.zeros_like(t)
    eye = np.eye(dm)
    fit[:, :, :dm, :, :, :, :dm, :] = np.einsum("ip,kq,abcd->iapbkcqd", eye, eye, j_acc) / dm
    fit[:, :, dm, :, :, :, dm, :] = np.einsum("ik,abcd->iabkcd", eye, j_rej) / dm
    size = dm * db * dmp * db
    fit = fit.reshape(size, size)
    return j_acc.reshape(db * db, db * db), j_rej.reshape(db * db, db * db), fit


def dns_fit(eff: KrausChannel) -> DnsFit:
    """Best simulator decomposition of an effective channel, read from Choi blocks."""
    dm = eff.in_layout.dims[0]
    db = eff.in_layout.total_dim // dm
    if eff.out_layout.total_dim != (dm + 1) * db:
        raise LayoutError("effective channel must map M(B) to (M + reject)(B)")
    j = choi(eff)
    j_acc, j_rej, j_fit = dns_blocks(j, dm, db)
    residual = trace_norm(j - j_fit)
    p_acc = float(np.clip(np.real(np.trace(j_acc)), 0.0, 1.0))
    side = RegisterLayout((("B", db),))
    acc = kraus_from_choi(j_acc, side, side, trace_class="non-increasing")
    rej = kraus_from_choi(j_rej, side, side, trace_class="non-increasing")
    return DnsFit(p_acc, acc, rej, residual)
