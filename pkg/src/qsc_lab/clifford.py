"""Clifford group elements as symplectic tableaux over GF(2).

Row ``i < n`` of the symplectic matrix is the image of ``X_i`` and row
``n + i`` the image of ``Z_i``; columns are ``(x_1..x_n | z_1..z_n)``. The
phase vector holds the sign bit of each image, with Paulis written in the
Hermitian convention ``Y = iXZ``. A tableau fixes the unitary up to a global
phase, so ``(symplectic, phases)`` pairs are in bijection with the group
modulo phases.

Symplectic matrices are indexed with the canonical-form construction of
Koenig and Smolin: integers ``0 <= i < |Sp(2n, 2)|`` map bijectively onto the
group, which gives both exhaustive enumeration (small n) and exact uniform
sampling (any n).
"""
from __future__ import annotations

import functools
import math
import struct
from dataclasses import dataclass

import numpy as np

from .qsim import MAX_QUBITS

KEY_VERSION = 1


def symplectic_form(n: int) -> np.ndarray:
    z = np.zeros((n, n), dtype=np.uint8)
    i = np.eye(n, dtype=np.uint8)
    return np.block([[z, i], [i, z]])


def is_symplectic(s: np.ndarray) -> bool:
    s = np.asarray(s, dtype=np.int64)
    n = s.shape[0] // 2
    omega = symplectic_form(n).astype(np.int64)
    return bool(np.array_equal((s @ omega @ s.T) % 2, omega))


def symplectic_group_order(n: int) -> int:
    return 2 ** (n * n) * math.prod(4 ** j - 1 for j in range(1, n + 1))


def clifford_group_order(n: int) -> int:
    """Order of the n-qubit Clifford group modulo global phases."""
    return 2 ** (n * n + 2 * n) * math.prod(4 ** j - 1 for j in range(1, n + 1))


# -- canonical symplectic indexing (pairs (x_j, z_j) interleaved) ---------------

def _inner(v: np.ndarray, w: np.ndarray) -> int:
    return int(np.sum(v[0::2] * w[1::2] + w[0::2] * v[1::2]) % 2)


def _transvection(k: np.ndarray, v: np.ndarray) -> np.ndarray:
    return (v + _inner(k, v) * k) % 2


def _int_to_bits(i: int, n: int) -> np.ndarray:
    return np.array([(i >> j) & 1 for j in range(n)], dtype=np.int64)


def _find_transvection(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two transvection vectors (h1, h2) whose product maps x to y."""
    size = len(x)
    h1 = np.zeros(size, dtype=np.int64)
    h2 = np.zeros(size, dtype=np.int64)
    if np.array_equal(x, y):
        return h1, h2
    if _inner(x, y) == 1:
        return (x + y) % 2, h2
    z = np.zeros(size, dtype=np.int64)
    for i in range(size // 2):
        a, b = 2 * i, 2 * i + 1
        if (x[a] + x[b]) != 0 and (y[a] + y[b]) != 0:
            z[a] = (x[a] + y[a]) % 2
            z[b] = (x[b] + y[b]) % 2
            if (z[a] + z[b]) == 0:
                z[b] = 1
                if x[a] != x[b]:
                    z[a] = 1
            return (x + z) % 2, (y + z) % 2
    for i in range(size // 2):
        a, b = 2 * i, 2 * i + 1
        if (x[a] + x[b]) != 0 and (y[a] + y[b]) == 0:
            if x[a] == x[b]:
                z[b] = 1
            else:
                z[b] = x[a]
                z[a] = x[b]
            break
    for i in range(size // 2):
        a, b = 2 * i, 2 * i + 1
        if (x[a] + x[b]) == 0 and (y[a] + y[b]) != 0:
            if y[a] == y[b]:
                z[b] = 1
            else:
                z[b] = y[a]
                z[a] = y[b]
            break
    return (x + z) % 2, (y + z) % 2


def _symplectic_interleaved(i: int, n: int) -> np.ndarray:
    nn = 2 * n
    s = (1 << nn) - 1
    k = (i % s) + 1
    i //= s
    f1 = _int_to_bits(k, nn)
    e1 = np.zeros(nn, dtype=np.int64)
    e1[0] = 1
    t1, t2 = _find_transvection(e1, f1)
    bits = _int_to_bits(i % (1 << (nn - 1)), nn - 1)
    eprime = e1.copy()
    eprime[2:] = bits[1:]
    h0 = _transvection(t1, eprime)
    h0 = _transvection(t2, h0)
    if bits[0] == 1:
        f1 = np.zeros(nn, dtype=np.int64)
    g = np.eye(nn, dtype=np.int64)
    if n > 1:
        g[2:, 2:] = _symplectic_interleaved(i >> (nn - 1), n - 1)
    for j in range(nn):
        row = g[j]
        row = _transvection(t1, row)
        row = _transvection(t2, row)
        row = _transvection(h0, row)
        row = _transvection(f1, row)
        g[j] = row
    return g


def symplectic_from_index(i: int, n: int) -> np.ndarray:
    """The i-th element of Sp(2n, 2) in (x | z) column/row ordering."""
    if not 0 <= i < symplectic_group_order(n):
        raise ValueError("symplectic index out of range")
    g = _symplectic_interleaved(i, n)
    perm = [2 * j for j in range(n)] + [2 * j + 1 for j in range(n)]
    return g[np.ix_(perm, perm)].astype(np.uint8)


# -- tableau element -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CliffordElement:
    """An n-qubit Clifford modulo global phase, stored as (symplectic, phases)."""

    symplectic: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.symplectic, dtype=np.uint8) % 2
        r = np.asarray(self.phases, dtype=np.uint8).reshape(-1) % 2
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2:
            raise ValueError("symplectic matrix must be 2n x 2n")
        if r.shape[0] != s.shape[0]:
            raise ValueError("phase vector must have 2n bits")
        if not is_symplectic(s):
            raise ValueError("matrix violates the symplectic condition")
        s.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "symplectic", s)
        object.__setattr__(self, "phases", r)

    @property
    def n(self) -> int:
        return self.symplectic.shape[0] // 2

    @classmethod
    def identity(cls, n: int) -> "CliffordElement":
        return cls(np.eye(2 * n, dtype=np.uint8), np.zeros(2 * n, dtype=np.uint8))

    def key(self) -> bytes:
        return self.symplectic.tobytes() + self.phases.tobytes()

    def __eq__(self, other):
        return isinstance(other, CliffordElement) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def unitary(self) -> np.ndarray:
        return _cached_unitary(self.n, self.key())

    def compose(self, other: "CliffordElement") -> "CliffordElement":
        """Tableau of ``self @ other`` (apply ``other`` first)."""
        return clifford_from_unitary(self.unitary() @ other.unitary())

    def to_bytes(self) -> bytes:
        return pack_clifford(self)


# -- gate synthesis ------------------------------------------------------------------

class _Tableau:
    """Mutable rows (x, z, r) used during synthesis."""

    def __init__(self, c: CliffordElement):
        n = c.n
        self.n = n
        self.x = c.symplectic[:, :n].astype(np.uint8).copy()
        self.z = c.symplectic[:, n:].astype(np.uint8).copy()
        self.r = c.phases.astype(np.uint8).copy()
        self.gates: list[tuple] = []

    def h(self, a):
        self.r ^= self.x[:, a] & self.z[:, a]
        self.x[:, a], self.z[:, a] = self.z[:, a].copy(), self.x[:, a].copy()
        self.gates.append(("H", a))

    def s(self, a):
        self.r ^= self.x[:, a] & self.z[:, a]
        self.z[:, a] ^= self.x[:, a]
        self.gates.append(("S", a))

    def cnot(self, a, b):
        self.r ^= self.x[:, a] & self.z[:, b] & (self.x[:, b] ^ self.z[:, a] ^ 1)
        self.x[:, b] ^= self.x[:, a]
        self.z[:, a] ^= self.z[:, b]
        self.gates.append(("CNOT", a, b))

    def swap(self, a, b):
        self.cnot(a, b)
        self.cnot(b, a)
        self.cnot(a, b)

    def pauli_x(self, a):
        self.r ^= self.z[:, a]
        self.gates.append(("X", a))

    def pauli_z(self, a):
        self.r ^= self.x[:, a]
        self.gates.append(("Z", a))


def synthesize(c: CliffordElement) -> list[tuple]:
    """Gate list g_1..g_k (H, S, CNOT, X, Z) whose product g_1 ... g_k equals C.

    The reduction applies gates on the output side until the tableau is the
    identity; C is then the product of the inverses in order.
    """
    t = _Tableau(c)
    n = t.n
    for i in range(n):
        # image of X_i -> X_i
        row = i
        if not t.x[row, i:].any():
            k = i + int(np.flatnonzero(t.z[row, i:])[0])
            t.h(k)
        if not t.x[row, i]:
            k = i + int(np.flatnonzero(t.x[row, i:])[0])
            t.swap(i, k)
        for j in range(i + 1, n):
            if t.x[row, j]:
                t.cnot(i, j)
        if t.z[row, i]:
            t.s(i)
        for j in range(i + 1, n):
            if t.z[row, j]:
                t.h(j)
                t.cnot(i, j)
        # image of Z_i -> Z_i, keeping X_i fixed
        row = n + i
        if t.x[row, i]:
            t.h(i)
            t.s(i)
            t.h(i)
        for j in range(i + 1, n):
            if t.x[row, j] and t.z[row, j]:
                t.s(j)
            if t.x[row, j]:
                t.h(j)
            if t.z[row, j]:
                t.cnot(j, i)
    for i in range(n):
        if t.r[i]:
            t.pauli_z(i)
        if t.r[n + i]:
            t.pauli_x(i)
    if not (np.array_equal(t.x, np.vstack([np.eye(n), np.zeros((n, n))]))
            and np.array_equal(t.z, np.vstack([np.zeros((n, n)), np.eye(n)]))
            and not t.r.any()):
        raise RuntimeError("tableau reduction did not reach the identity")
    return _inverse_gates(t.gates)


def _inverse_gates(gates: list[tuple]) -> list[tuple]:
    # C = g_1^dag g_2^dag ... g_k^dag where the reduction applied g_1 first
    out = []
    for g in gates:
        out.append(("SDG", g[1]) if g[0] == "S" else g)
    return out


_GATE = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "S": np.diag([1, 1j]).astype(complex),
    "SDG": np.diag([1, -1j]).astype(complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
}
_CNOT = np.eye(4, dtype=complex)[[0, 1, 3, 2]]


def _left_apply(gate: tuple, u: np.ndarray, n: int) -> np.ndarray:
    """gate @ u for an n-qubit matrix u."""
    d = u.shape[1]
    t = u.reshape((2,) * n + (d,))
    if gate[0] == "CNOT":
        a, b = gate[1], gate[2]
        g = _CNOT.reshape(2, 2, 2, 2)
        t = np.tensordot(g, t, axes=([2, 3], [a, b]))
        t = np.moveaxis(t, [0, 1], [a, b])
    else:
        a = gate[1]
        t = np.tensordot(_GATE[gate[0]], t, axes=([1], [a]))
        t = np.moveaxis(t, 0, a)
    return t.reshape(2 ** n, d)


def gates_to_unitary(gates: list[tuple], n: int) -> np.ndarray:
    """Product g_1 g_2 ... g_k of the listed gates."""
    u = np.eye(2 ** n, dtype=complex)
    for g in reversed(gates):
        u = _left_apply(g, u, n)
    return u


@functools.lru_cache(maxsize=32768)
def _cached_unitary(n: int, key: bytes) -> np.ndarray:
    nn = 2 * n
    s = np.frombuffer(key[: nn * nn], dtype=np.uint8).reshape(nn, nn)
    r = np.frombuffer(key[nn * nn:], dtype=np.uint8)
    u = gates_to_unitary(synthesize(CliffordElement(s, r)), n)
    u.setflags(write=False)
    return u


# -- Paulis ----------------------------------------------------------------------

def pauli_matrix(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Hermitian Pauli with bits (x, z) per qubit (Y for x = z = 1)."""
    out = np.eye(1, dtype=complex)
    for xi, zi in zip(x, z):
        if xi and zi:
            p = np.array([[0, -1j], [1j, 0]])
        elif xi:
            p = _GATE["X"]
        elif zi:
            p = _GATE["Z"]
        else:
            p = np.eye(2)
        out = np.kron(out, p)
    return out


def tableau_row_operator(c: CliffordElement, row: int) -> np.ndarray:
    """Signed Pauli that C maps the row-th generator to."""
    n = c.n
    sign = -1 if c.phases[row] else 1
    return sign * pauli_matrix(c.symplectic[row, :n], c.symplectic[row, n:])


def generator(row: int, n: int) -> np.ndarray:
    x = np.zeros(n, dtype=np.uint8)
    z = np.zeros(n, dtype=np.uint8)
    if row < n:
        x[row] = 1
    else:
        z[row - n] = 1
    return pauli_matrix(x, z)


def _decompose_pauli(m: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray, int]:
    d = 2 ** n
    for code in range(4 ** n):
        x = np.array([(code >> (2 * j)) & 1 for j in range(n)], dtype=np.uint8)
        z = np.array([(code >> (2 * j + 1)) & 1 for j in range(n)], dtype=np.uint8)
        p = pauli_matrix(x, z)
        overlap = np.trace(p.conj().T @ m) / d
        if abs(abs(overlap) - 1) < 1e-8:
            if abs(overlap - 1) < 1e-8:
                return x, z, 0
            if abs(overlap + 1) < 1e-8:
                return x, z, 1
            break
    raise ValueError("operator is not a Hermitian Pauli; input is not Clifford")


def clifford_from_unitary(u: np.ndarray) -> CliffordElement:
    """Read the tableau off a Clifford unitary by conjugating the generators."""
    u = np.asarray(u, dtype=complex)
    n = int(round(math.log2(u.shape[0])))
    if n > 3:
        raise ValueError("tableau extraction by Pauli search is limited to 3 qubits")
    s = np.zeros((2 * n, 2 * n), dtype=np.uint8)
    r = np.zeros(2 * n, dtype=np.uint8)
    for row in range(2 * n):
        x, z, sign = _decompose_pauli(u @ generator(row, n) @ u.conj().T, n)
        s[row, :n] = x
        s[row, n:] = z
        r[row] = sign
    return CliffordElement(s, r)


# -- enumeration and sampling ----------------------------------------------------------

def clifford_from_index(index: int, n: int) -> CliffordElement:
    """Bijection {0..|C_n|-1} -> Clifford group mod phase."""
    nphase = 1 << (2 * n)
    s = symplectic_from_index(index // nphase, n)
    phase_bits = index % nphase
    r = np.array([(phase_bits >> j) & 1 for j in range(2 * n)], dtype=np.uint8)
    return CliffordElement(s, r)


@functools.lru_cache(maxsize=4)
def enumerate_cliffords(n: int) -> tuple[CliffordElement, ...]:
    if n > 2:
        raise ValueError("exhaustive enumeration is limited to n <= 2")
    return tuple(clifford_from_index(i, n) for i in range(clifford_group_order(n)))


@functools.lru_cache(maxsize=4)
def enumerated_unitaries(n: int) -> np.ndarray:
    """Stack of unitaries for every enumerated Clifford (same order).

    The phase vector r is realized as C_r = C_0 P with P = Z^{r_x} X^{r_z}, so
    only the symplectic part is synthesized.
    """
    nphase = 1 << (2 * n)
    out = []
    for sidx in range(symplectic_group_order(n)):
        base = gates_to_unitary(synthesize(CliffordElement(
            symplectic_from_index(sidx, n), np.zeros(2 * n, dtype=np.uint8))), n)
        for bits in range(nphase):
            r = [(bits >> j) & 1 for j in range(2 * n)]
            out.append(base @ pauli_matrix(r[n:], r[:n]))
    out = np.stack(out)
    out.setflags(write=False)
    return out


def uniform_below(bound: int, rng: np.random.Generator) -> int:
    """Exact uniform integer in [0, bound) by rejection on random bytes."""
    nbytes = (bound.bit_length() + 7) // 8 + 1
    limit = (256 ** nbytes // bound) * bound
    while True:
        v = int.from_bytes(rng.bytes(nbytes), "big")
        if v < limit:
            return v % bound


def random_clifford(n: int, rng: np.random.Generator) -> CliffordElement:
    """Uniformly random Clifford via a uniform canonical index."""
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"Clifford size must be between 1 and {MAX_QUBITS} qubits")
    return clifford_from_index(uniform_below(clifford_group_order(n), rng), n)


# -- serialization -----------------------------------------------------------------

def pack_clifford(c: CliffordElement) -> bytes:
    bits = np.concatenate([c.symplectic.reshape(-1), c.phases])
    return np.packbits(bits).tobytes()


def unpack_clifford(data: bytes, n: int) -> CliffordElement:
    nn = 2 * n
    nbits = nn * nn + nn
    if len(data) != (nbits + 7) // 8:
        raise ValueError("Clifford encoding has the wrong length")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))[:nbits]
    return CliffordElement(bits[: nn * nn].reshape(nn, nn), bits[nn * nn:])


def clifford_header(m: int, t: int) -> bytes:
    return struct.pack(">BBB", KEY_VERSION, m, t)
