"""Dense simulation of small labelled quantum registers.

States are density matrices over a :class:`RegisterLayout`; channels are
Kraus-operator lists. Everything here is immutable and side-effect free.

Distances between channels use the normalized Choi matrix
``J(c) = (1/d_in) sum_ij |i><j| (x) c(|i><j|)`` and the raw trace norm of the
difference. This is a lower bound on the diamond-norm distance; multiplying by
``d_in`` gives an upper bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 8
MAX_DIM = 2 ** MAX_QUBITS

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
CHANNEL_TOL = 1e-9
PROJECTOR_TOL = 1e-10


class RegisterCapError(ValueError):
    """A layout exceeds the dense-simulation size cap."""


class LayoutError(ValueError):
    """Layouts are inconsistent with the requested operation."""


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered labelled subsystems, optionally followed by a 1-dim reject sector."""

    subsystems: tuple[tuple[str, int], ...]
    reject_extended: bool = False

    def __post_init__(self):
        subs = tuple((str(lab), int(dim)) for lab, dim in self.subsystems)
        object.__setattr__(self, "subsystems", subs)
        labels = [lab for lab, _ in subs]
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate register labels in {labels}")
        for lab, dim in subs:
            if dim < 1:
                raise LayoutError(f"register {lab!r} has non-positive dimension {dim}")
        if self.product_dim > MAX_DIM:
            raise RegisterCapError(
                f"layout dimension {self.product_dim} exceeds the {MAX_QUBITS}-qubit cap ({MAX_DIM})"
            )

    @classmethod
    def of(cls, *subsystems: tuple[str, int], reject_extended: bool = False) -> "RegisterLayout":
        return cls(tuple(subsystems), reject_extended)

    @classmethod
    def qubits(cls, label: str, n: int) -> "RegisterLayout":
        return cls(((label, 2 ** n),))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.subsystems)

    @property
    def product_dim(self) -> int:
        return math.prod(self.dims)

    @property
    def total_dim(self) -> int:
        return self.product_dim + (1 if self.reject_extended else 0)

    def dim_of(self, label: str) -> int:
        return self.subsystems[self.index(label)][1]

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown register label {label!r}; have {self.labels}") from None

    def concat(self, other: "RegisterLayout") -> "RegisterLayout":
        if self.reject_extended or other.reject_extended:
            raise LayoutError("cannot tensor reject-extended layouts")
        return RegisterLayout(self.subsystems + other.subsystems)

    def select(self, labels: Iterable[str]) -> "RegisterLayout":
        return RegisterLayout(tuple((lab, self.dim_of(lab)) for lab in labels))

    def extended(self) -> "RegisterLayout":
        if self.reject_extended:
            raise LayoutError("layout is already reject-extended")
        return RegisterLayout(self.subsystems, True)

    def without_reject(self) -> "RegisterLayout":
        return RegisterLayout(self.subsystems, False)


def _check_square(matrix: np.ndarray, dim: int, what: str) -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (dim, dim):
        raise LayoutError(f"{what} has shape {m.shape}, expected ({dim}, {dim})")
    return m


@dataclass(frozen=True, eq=False)
class DensityState:
    """A density operator together with its register layout."""

    layout: RegisterLayout
    matrix: np.ndarray
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = _check_square(self.matrix, self.layout.total_dim, "density matrix")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if self.validate:
            check_density(m)

    @property
    def dim(self) -> int:
        return self.layout.total_dim

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def probability_of_reject(self) -> float:
        """Weight on the reject vector (0 for non-extended layouts)."""
        if not self.layout.reject_extended:
            return 0.0
        return float(np.real(self.matrix[-1, -1]))


def check_density(m: np.ndarray) -> None:
    if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise ValueError("matrix is not Hermitian")
    if abs(np.trace(m) - 1) > TRACE_TOL:
        raise ValueError(f"trace {np.trace(m).real:.3g} is not 1")
    if np.linalg.eigvalsh((m + m.conj().T) / 2).min() < -PSD_TOL:
        raise ValueError("matrix is not positive semidefinite")


def pure_state(layout: RegisterLayout, amplitudes: Sequence[complex]) -> DensityState:
    """Density matrix of a normalized pure state."""
    psi = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if psi.shape[0] != layout.total_dim:
        raise LayoutError(f"amplitude vector length {psi.shape[0]} != {layout.total_dim}")
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("zero vector is not a state")
    psi = psi / norm
    return DensityState(layout, np.outer(psi, psi.conj()))


def basis_state(layout: RegisterLayout, index: int) -> DensityState:
    m = np.zeros((layout.total_dim, layout.total_dim), dtype=complex)
    m[index, index] = 1.0
    return DensityState(layout, m)


def maximally_mixed(layout: RegisterLayout) -> DensityState:
    d = layout.total_dim
    return DensityState(layout, np.eye(d, dtype=complex) / d)


def haar_state(layout: RegisterLayout, rng: np.random.Generator) -> DensityState:
    d = layout.total_dim
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return pure_state(layout, v)


def random_mixed_state(layout: RegisterLayout, rng: np.random.Generator, rank: int | None = None) -> DensityState:
    """Ginibre-ensemble mixed state of the given rank (full rank by default)."""
    d = layout.total_dim
    k = rank or d
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    m = g @ g.conj().T
    return DensityState(layout, m / np.trace(m))


def tensor(a: DensityState, b: DensityState) -> DensityState:
    layout = a.layout.concat(b.layout)
    return DensityState(layout, np.kron(a.matrix, b.matrix), validate=False)


def _as_tensor(m: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    return m.reshape(tuple(dims) + tuple(dims))


def partial_trace(s: DensityState, keep: Iterable[str]) -> DensityState:
    """Reduced state on ``keep`` (in the order given)."""
    keep = list(keep)
    layout = s.layout
    if layout.reject_extended:
        if set(keep) == set(layout.labels) and keep == list(layout.labels):
            return s
        raise LayoutError("partial trace is undefined on a reject-extended layout")
    for lab in keep:
        layout.index(lab)
    if len(set(keep)) != len(keep):
        raise LayoutError("duplicate labels in keep set")
    n = len(layout.dims)
    t = _as_tensor(s.matrix, layout.dims)
    keep_idx = [layout.index(lab) for lab in keep]
    drop_idx = [i for i in range(n) if i not in keep_idx]
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = [letters[i] for i in range(n)]
    col = [letters[i].upper() for i in range(n)]
    for i in drop_idx:
        col[i] = row[i]
    out = "".join(row[i] for i in keep_idx) + "".join(col[i] for i in keep_idx)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    sub = layout.select(keep)
    return DensityState(sub, reduced.reshape(sub.total_dim, sub.total_dim), validate=False)


def operator_on(layout: RegisterLayout, op: np.ndarray, on: Sequence[str]) -> np.ndarray:
    """Full-space matrix of ``op`` acting on registers ``on`` (identity elsewhere)."""
    if layout.reject_extended:
        raise LayoutError("local operators are undefined on a reject-extended layout")
    on = list(on)
    dims = layout.dims
    idx = [layout.index(lab) for lab in on]
    d_on = math.prod(dims[i] for i in idx)
    op = _check_square(op, d_on, "local operator")
    rest = [i for i in range(len(dims)) if i not in idx]
    d_rest = math.prod(dims[i] for i in rest)
    full = np.kron(op, np.eye(d_rest))
    perm = idx + rest
    src_dims = [dims[i] for i in perm]
    t = full.reshape(src_dims + src_dims)
    inv = list(np.argsort(perm))
    n = len(dims)
    t = t.transpose(inv + [n + i for i in inv])
    return t.reshape(layout.total_dim, layout.total_dim)


def is_unitary(u: np.ndarray, tol: float = CHANNEL_TOL) -> bool:
    u = np.asarray(u)
    return u.shape[0] == u.shape[1] and np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=tol)


def apply_unitary(s: DensityState, u: np.ndarray, on: Sequence[str] | None = None) -> DensityState:
    """Conjugate ``s`` by ``u`` on the named registers (whole space if ``on`` is None)."""
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u):
        raise ValueError("operator is not unitary")
    full = u if on is None else operator_on(s.layout, u, on)
    if full.shape[0] != s.dim:
        raise LayoutError("unitary dimension does not match state")
    return DensityState(s.layout, full @ s.matrix @ full.conj().T, validate=False)


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """A completely positive map given by Kraus operators."""

    kraus_ops: tuple[np.ndarray, ...]
    in_layout: RegisterLayout
    out_layout: RegisterLayout
    trace_class: str = "preserving"

    def __post_init__(self):
        din, dout = self.in_layout.total_dim, self.out_layout.total_dim
        ops = []
        for k in self.kraus_ops:
            k = np.array(k, dtype=complex)
            if k.shape != (dout, din):
                raise LayoutError(f"Kraus operator shape {k.shape}, expected {(dout, din)}")
            k.setflags(write=False)
            ops.append(k)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        object.__setattr__(self, "kraus_ops", tuple(ops))
        gram = sum(k.conj().T @ k for k in ops)
        if self.trace_class == "preserving":
            if np.max(np.abs(gram - np.eye(din))) > CHANNEL_TOL:
                raise ValueError("Kraus operators are not trace preserving")
        elif self.trace_class == "non-increasing":
            if np.linalg.eigvalsh(gram).max() > 1 + CHANNEL_TOL:
                raise ValueError("Kraus operators increase trace")
        else:
            raise ValueError(f"unknown trace class {self.trace_class!r}")

    @property
    def stacked(self) -> np.ndarray:
        return np.stack(self.kraus_ops)

    def __call__(self, s: DensityState) -> DensityState:
        return apply_channel(self, s)

    def then(self, other: "KrausChannel") -> "KrausChannel":
        """Composite ``other o self``."""
        if other.in_layout.total_dim != self.out_layout.total_dim:
            raise LayoutError("channel composition dimension mismatch")
        ops = [b @ a for a in self.kraus_ops for b in other.kraus_ops]
        tc = "preserving" if self.trace_class == other.trace_class == "preserving" else "non-increasing"
        return KrausChannel(tuple(ops), self.in_layout, other.out_layout, tc)


def apply_channel(c: KrausChannel, s: DensityState) -> DensityState:
    if s.dim != c.in_layout.total_dim:
        raise LayoutError("state does not match channel input")
    out = sum(k @ s.matrix @ k.conj().T for k in c.kraus_ops)
    return DensityState(c.out_layout, out, validate=c.trace_class == "preserving")


def unitary_channel(u: np.ndarray, layout: RegisterLayout) -> KrausChannel:
    return KrausChannel((np.asarray(u, dtype=complex),), layout, layout)


def identity_channel(layout: RegisterLayout) -> KrausChannel:
    return unitary_channel(np.eye(layout.total_dim), layout)


def local_channel(c: KrausChannel, layout: RegisterLayout, on: Sequence[str]) -> KrausChannel:
    """Extend a same-dimension channel on registers ``on`` by the identity elsewhere."""
    if c.in_layout.total_dim != c.out_layout.total_dim:
        raise LayoutError("local extension needs a dimension-preserving channel")
    ops = tuple(operator_on(layout, k, on) for k in c.kraus_ops)
    return KrausChannel(ops, layout, layout, c.trace_class)


def tensor_channels(a: KrausChannel, b: KrausChannel) -> KrausChannel:
    ops = tuple(np.kron(x, y) for x in a.kraus_ops for y in b.kraus_ops)
    tc = "preserving" if a.trace_class == b.trace_class == "preserving" else "non-increasing"
    return KrausChannel(ops, a.in_layout.concat(b.in_layout), _concat_out(a.out_layout, b.out_layout), tc)


def _concat_out(a: RegisterLayout, b: RegisterLayout) -> RegisterLayout:
    # a reject-extended output is folded into an ordinary register of dim d+1
    def flat(l: RegisterLayout) -> RegisterLayout:
        if not l.reject_extended:
            return l
        if len(l.subsystems) != 1:
            raise LayoutError("cannot tensor a multi-register reject-extended layout")
        lab, d = l.subsystems[0]
        return RegisterLayout(((lab, d + 1),))

    return flat(a).concat(flat(b))


def depolarizing_channel(layout: RegisterLayout) -> KrausChannel:
    """Completely depolarizing channel X -> Tr(X) I/d via d^2 Weyl operators."""
    d = layout.total_dim
    w = np.exp(2j * np.pi / d)
    shift = np.roll(np.eye(d), 1, axis=0)
    clock = np.diag(w ** np.arange(d))
    ops = tuple(
        np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b) / d
        for a in range(d)
        for b in range(d)
    )
    return KrausChannel(ops, layout, layout)


def reject_map(in_layout: RegisterLayout, out_layout: RegisterLayout) -> KrausChannel:
    """X -> Tr(X)|reject><reject| into a reject-extended output."""
    if not out_layout.reject_extended:
        raise LayoutError("reject map needs a reject-extended output layout")
    din, dout = in_layout.total_dim, out_layout.total_dim
    ops = []
    for i in range(din):
        k = np.zeros((dout, din), dtype=complex)
        k[-1, i] = 1.0
        ops.append(k)
    return KrausChannel(tuple(ops), in_layout, out_layout)


def embed_channel(layout: RegisterLayout) -> KrausChannel:
    """Identity on ``layout`` into its reject extension (id + 0)."""
    ext = layout.extended()
    k = np.zeros((ext.total_dim, layout.total_dim), dtype=complex)
    k[: layout.total_dim, :] = np.eye(layout.total_dim)
    return KrausChannel((k,), layout, ext)


# -- measurements -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TwoOutcomeMeasurement:
    """Projective measurement {1 - P, P}; outcome 1 corresponds to ``projector``."""

    projector: np.ndarray
    layout: RegisterLayout

    def __post_init__(self):
        p = _check_square(self.projector, self.layout.total_dim, "projector").copy()
        if np.max(np.abs(p @ p - p), initial=0.0) > PROJECTOR_TOL or np.max(
            np.abs(p - p.conj().T), initial=0.0
        ) > PROJECTOR_TOL:
            raise ValueError("matrix is not an orthogonal projector")
        p.setflags(write=False)
        object.__setattr__(self, "projector", p)

    @property
    def complement(self) -> np.ndarray:
        return np.eye(self.layout.total_dim) - self.projector

    def extended(self) -> "TwoOutcomeMeasurement":
        """Same projector on the reject-extended space (reject counts as outcome 0)."""
        d = self.layout.total_dim
        p = np.zeros((d + 1, d + 1), dtype=complex)
        p[:d, :d] = self.projector
        return TwoOutcomeMeasurement(p, self.layout.extended())


def projector_onto(vectors: Sequence[Sequence[complex]] | np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the span of the given vectors."""
    v = np.atleast_2d(np.asarray(vectors, dtype=complex))
    q, r = np.linalg.qr(v.T)
    rank = int(np.sum(np.abs(np.diag(r)) > 1e-12))
    q = q[:, :rank]
    return q @ q.conj().T


def outcome_layout(label: str = "out") -> RegisterLayout:
    return RegisterLayout(((label, 2),))


def measurement_channel(m: TwoOutcomeMeasurement, label: str = "out") -> KrausChannel:
    """X -> Tr((1-P)X)|0><0| + Tr(PX)|1><1| on a fresh outcome qubit."""
    d = m.layout.total_dim
    ops = []
    for bit, proj in ((0, m.complement), (1, m.projector)):
        w, v = np.linalg.eigh(proj)
        for j in np.flatnonzero(w > 0.5):
            k = np.zeros((2, d), dtype=complex)
            k[bit] = v[:, j].conj()
            ops.append(k)
    return KrausChannel(tuple(ops), m.layout, outcome_layout(label))


def instrument(s: DensityState, m: TwoOutcomeMeasurement, on: Sequence[str] | None = None
               ) -> list[tuple[float, DensityState | None, int]]:
    """Branches (probability, renormalized post-state, outcome) for outcomes 0 and 1.

    Zero-probability branches carry ``None`` as post-state.
    """
    if on is None:
        if m.layout.total_dim != s.dim:
            raise LayoutError("measurement does not match state")
        p1 = m.projector
    else:
        p1 = operator_on(s.layout, m.projector, on)
    p0 = np.eye(s.dim) - p1
    out = []
    for bit, proj in ((0, p0), (1, p1)):
        post = proj @ s.matrix @ proj
        prob = float(np.real(np.trace(post)))
        if prob <= 1e-15:
            out.append((max(prob, 0.0), None, bit))
        else:
            out.append((prob, DensityState(s.layout, post / prob, validate=False), bit))
    return out


def sequential_measure(s: DensityState, first: TwoOutcomeMeasurement, second: TwoOutcomeMeasurement
                       ) -> np.ndarray:
    """Joint distribution of applying ``first`` then ``second``.

    Each outcome stays tied to the measurement that produced it: entry
    ``2*r_first + r_second``, i.e. the order ``(0,0), (0,1), (1,0), (1,1)``.
    """
    probs = np.zeros(4)
    for p_a, post_a, a in instrument(s, first):
        if post_a is None:
            continue
        for p_b, _, b in instrument(post_a, second):
            probs[2 * a + b] = p_a * p_b
    return probs


# -- distances ----------------------------------------------------------------

def trace_norm(m: np.ndarray) -> float:
    """Schatten 1-norm of a Hermitian matrix (singular values otherwise)."""
    m = np.asarray(m)
    if np.allclose(m, m.conj().T, atol=1e-12):
        return float(np.sum(np.abs(np.linalg.eigvalsh((m + m.conj().T) / 2))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def _same_layout(a: DensityState, b: DensityState) -> None:
    if a.layout.total_dim != b.layout.total_dim or a.layout.dims != b.layout.dims:
        raise LayoutError("states have different layouts")


def trace_norm_distance(a: DensityState, b: DensityState) -> float:
    """Raw ||a - b||_1."""
    _same_layout(a, b)
    return trace_norm(a.matrix - b.matrix)


def trace_distance(a: DensityState, b: DensityState) -> float:
    """Halved trace distance (1/2)||a - b||_1 in [0, 1]."""
    return trace_norm_distance(a, b) / 2


def choi(c: KrausChannel) -> np.ndarray:
    """Normalized Choi matrix, input factor first: (1/d) sum_k |K_k>><<K_k|."""
    din = c.in_layout.total_dim
    vecs = np.stack([k.T.reshape(-1) for k in c.kraus_ops])
    return vecs.T @ vecs.conj() / din


def choi_from_kraus_stack(ops: np.ndarray, din: int) -> np.ndarray:
    """Normalized Choi of a Kraus stack shaped (n, d_out, d_in)."""
    vecs = ops.transpose(0, 2, 1).reshape(ops.shape[0], -1)
    return vecs.T @ vecs.conj() / din


def kraus_from_choi(j: np.ndarray, in_layout: RegisterLayout, out_layout: RegisterLayout,
                    trace_class: str = "preserving", tol: float = 1e-13) -> KrausChannel:
    """Minimal Kraus representation of a normalized Choi matrix."""
    din, dout = in_layout.total_dim, out_layout.total_dim
    j = (j + j.conj().T) / 2
    w, v = np.linalg.eigh(j * din)
    ops = []
    for lam, vec in zip(w, v.T):
        if lam > tol:
            ops.append(np.sqrt(lam) * vec.reshape(din, dout).T)
    if not ops:
        ops.append(np.zeros((dout, din), dtype=complex))
    if trace_class == "preserving":
        # tiny eigenvalue clipping can leave ~1e-13 drift; re-normalize exactly
        gram = sum(k.conj().T @ k for k in ops)
        w2, v2 = np.linalg.eigh(gram)
        fix = v2 @ np.diag(w2 ** -0.5) @ v2.conj().T
        ops = [k @ fix for k in ops]
    return KrausChannel(tuple(ops), in_layout, out_layout, trace_class)


def channel_distance(c1: KrausChannel, c2: KrausChannel) -> float:
    """Raw trace norm between normalized Choi matrices."""
    if (c1.in_layout.total_dim, c1.out_layout.total_dim) != (c2.in_layout.total_dim, c2.out_layout.total_dim):
        raise LayoutError("channels act between different spaces")
    return trace_norm(choi(c1) - choi(c2))


def choi_by_action(c: KrausChannel) -> np.ndarray:
    """Normalized Choi computed by feeding half of a maximally entangled state."""
    din = c.in_layout.total_dim
    phi = np.eye(din).reshape(-1) / np.sqrt(din)
    rho = np.outer(phi, phi.conj())
    out = 0
    for k in c.kraus_ops:
        big = np.kron(np.eye(din), k)
        out = out + big @ rho @ big.conj().T
    return out


# -- standard objects ------------------------------------------------------------

def bell_vector(d: int) -> np.ndarray:
    return np.eye(d).reshape(-1) / np.sqrt(d)


def bell_pair(d: int, labels: tuple[str, str] = ("A", "B")) -> DensityState:
    if d < 2:
        raise ValueError("Bell pair needs d >= 2")
    layout = RegisterLayout(((labels[0], d), (labels[1], d)))
    return pure_state(layout, bell_vector(d))


def bell_projector(d: int, labels: tuple[str, str] = ("A", "B")) -> TwoOutcomeMeasurement:
    """Bell test whose outcome 1 is the maximally entangled projector."""
    phi = bell_vector(d)
    layout = RegisterLayout(((labels[0], d), (labels[1], d)))
    return TwoOutcomeMeasurement(np.outer(phi, phi.conj()), layout)


def reflection(p: np.ndarray) -> np.ndarray:
    """The reflection I - 2P about a projector."""
    p = np.asarray(p, dtype=complex)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValueError("projector must be square")
    if np.max(np.abs(p @ p - p), initial=0.0) > PROJECTOR_TOL or np.max(np.abs(p - p.conj().T), initial=0.0) > PROJECTOR_TOL:
        raise ValueError("matrix is not an orthogonal projector")
    return np.eye(p.shape[0]) - 2 * p


@dataclass(frozen=True, eq=False)
class StinespringDilation:
    """Isometry V from the input space into output (x) environment (environment last)."""

    isometry: np.ndarray
    in_layout: RegisterLayout
    out_layout: RegisterLayout
    env_layout: RegisterLayout

    def __post_init__(self):
        v = np.asarray(self.isometry, dtype=complex)
        if v.shape != (self.out_layout.total_dim * self.env_layout.total_dim, self.in_layout.total_dim):
            raise LayoutError("dilation shape does not match layouts")
        if not np.allclose(v.conj().T @ v, np.eye(v.shape[1]), atol=1e-9):
            raise ValueError("dilation is not an isometry")

    def channel(self) -> KrausChannel:
        dout, de = self.out_layout.total_dim, self.env_layout.total_dim
        t = self.isometry.reshape(dout, de, -1)
        ops = tuple(t[:, e, :] for e in range(de))
        return KrausChannel(ops, self.in_layout, self.out_layout)


def stinespring(c: KrausChannel, env_label: str = "E") -> StinespringDilation:
    """V|psi> = sum_i K_i|psi> (x) |i>_E."""
    if c.trace_class != "preserving":
        raise ValueError("Stinespring dilation needs a trace-preserving channel")
    ops = c.stacked
    n, dout, din = ops.shape
    v = ops.transpose(1, 0, 2).reshape(dout * n, din)
    return StinespringDilation(v, c.in_layout, c.out_layout, RegisterLayout(((env_label, n),)))


def embed_reject(s: DensityState) -> DensityState:
    """Embed into the reject-extended space with zero reject weight."""
    layout = s.layout.extended()
    m = np.zeros((layout.total_dim, layout.total_dim), dtype=complex)
    m[:-1, :-1] = s.matrix
    return DensityState(layout, m, validate=False)


def make_reject(layout: RegisterLayout) -> DensityState:
    """The reject state on the extension of ``layout``."""
    ext = layout if layout.reject_extended else layout.extended()
    m = np.zeros((ext.total_dim, ext.total_dim), dtype=complex)
    m[-1, -1] = 1.0
    return DensityState(ext, m, validate=False)


# -- Pauli helpers ---------------------------------------------------------------

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def pauli_string(label: str) -> np.ndarray:
    """Dense matrix of a Pauli string such as ``"XIZ"`` (qubit 0 leftmost)."""
    out = np.eye(1, dtype=complex)
    for ch in label:
        out = np.kron(out, PAULI[ch])
    return out


def qubit_operator(op: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """``op`` on one qubit of an n-qubit register (qubit 0 most significant)."""
    return np.kron(np.kron(np.eye(2 ** qubit), op), np.eye(2 ** (n - qubit - 1)))
