"""A single-threaded joint quantum state over named registers.

Games and the hybrid scheme keep every register (plaintexts, ciphertexts,
Bell halves, adversary memory) in one :class:`QContext`, so entanglement
between them is tracked exactly. Measurements are sampled with the
context's caller-supplied generator and collapse the joint state.

Registers whose last basis vector is the reject symbol are ordinary
registers of dimension ``d + 1``; :meth:`QContext.is_reject_extended`
records which ones they are.
"""
from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np

from .qsim import (
    MAX_DIM,
    DensityState,
    LayoutError,
    RegisterCapError,
    RegisterLayout,
    partial_trace,
)


class QContext:
    def __init__(self):
        self.labels: list[str] = []
        self.dims: list[int] = []
        self.rho = np.ones((1, 1), dtype=complex)
        self._extended: set[str] = set()
        self._counter = itertools.count()

    # -- bookkeeping ---------------------------------------------------------
    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    def layout(self) -> RegisterLayout:
        return RegisterLayout(tuple(zip(self.labels, self.dims)))

    def fresh(self, prefix: str) -> str:
        while True:
            label = f"{prefix}{next(self._counter)}"
            if label not in self.labels:
                return label

    def dim(self, label: str) -> int:
        return self.dims[self._idx(label)]

    def has(self, label: str) -> bool:
        return label in self.labels

    def is_reject_extended(self, label: str) -> bool:
        return label in self._extended

    def _idx(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"no register {label!r} in context") from None

    def _check_cap(self, dims: Sequence[int]) -> None:
        if math.prod(dims) > MAX_DIM:
            raise RegisterCapError(
                f"joint state dimension {math.prod(dims)} exceeds the cap {MAX_DIM}"
            )

    # -- adding and removing ---------------------------------------------------
    def add(self, label: str, matrix: np.ndarray, reject_extended: bool = False) -> str:
        if label in self.labels:
            raise LayoutError(f"register {label!r} already exists")
        m = np.asarray(matrix, dtype=complex)
        d = m.shape[0]
        self._check_cap(self.dims + [d])
        self.rho = np.kron(self.rho, m)
        self.labels.append(label)
        self.dims.append(d)
        if reject_extended:
            self._extended.add(label)
        return label

    def add_state(self, label: str, state: DensityState) -> str:
        return self.add(label, state.matrix, reject_extended=state.layout.reject_extended)

    def add_pure(self, label: str, amplitudes: Sequence[complex], reject_extended: bool = False) -> str:
        v = np.asarray(amplitudes, dtype=complex)
        v = v / np.linalg.norm(v)
        return self.add(label, np.outer(v, v.conj()), reject_extended)

    def add_basis(self, label: str, dim: int, index: int = 0, reject_extended: bool = False) -> str:
        m = np.zeros((dim, dim), dtype=complex)
        m[index, index] = 1
        return self.add(label, m, reject_extended)

    def add_joint(self, labels: Sequence[str], dims: Sequence[int], amplitudes: Sequence[complex]) -> list[str]:
        """Add several registers in a joint pure state."""
        for lab in labels:
            if lab in self.labels:
                raise LayoutError(f"register {lab!r} already exists")
        v = np.asarray(amplitudes, dtype=complex).reshape(-1)
        v = v / np.linalg.norm(v)
        if v.shape[0] != math.prod(dims):
            raise LayoutError("amplitude vector does not match register dims")
        self._check_cap(self.dims + list(dims))
        self.rho = np.kron(self.rho, np.outer(v, v.conj()))
        self.labels.extend(labels)
        self.dims.extend(dims)
        return list(labels)

    def discard(self, *labels: str) -> None:
        """Trace out registers."""
        if not labels:
            return
        keep = [lab for lab in self.labels if lab not in labels]
        for lab in labels:
            self._idx(lab)
        self.rho = self._reduced_matrix(keep)
        self.dims = [self.dims[self._idx(lab)] for lab in keep]
        self.labels = keep
        self._extended -= set(labels)

    def rename(self, old: str, new: str) -> str:
        if new in self.labels:
            raise LayoutError(f"register {new!r} already exists")
        i = self._idx(old)
        self.labels[i] = new
        if old in self._extended:
            self._extended.discard(old)
            self._extended.add(new)
        return new

    # -- tensor reshuffling ------------------------------------------------------
    def _tensor(self) -> np.ndarray:
        return self.rho.reshape(tuple(self.dims) * 2)

    def _front(self, targets: Sequence[str]) -> tuple[np.ndarray, int, int, list[int]]:
        """rho permuted to (targets, rest) and reshaped to (dT, dR, dT, dR)."""
        idx = [self._idx(lab) for lab in targets]
        if len(set(idx)) != len(idx):
            raise LayoutError("duplicate target registers")
        rest = [i for i in range(len(self.dims)) if i not in idx]
        n = len(self.dims)
        perm = idx + rest
        t = self._tensor().transpose(perm + [n + i for i in perm])
        dt = math.prod(self.dims[i] for i in idx)
        dr = math.prod(self.dims[i] for i in rest)
        return t.reshape(dt, dr, dt, dr), dt, dr, rest

    def _set_from_front(self, x: np.ndarray, new_labels: Sequence[str], new_dims: Sequence[int],
                        rest: Sequence[int]) -> None:
        """Install (new_targets, rest) ordering: new registers take the front."""
        rest_labels = [self.labels[i] for i in rest]
        rest_dims = [self.dims[i] for i in rest]
        dims = list(new_dims) + rest_dims
        self._check_cap(dims)
        d = math.prod(dims)
        self.rho = x.reshape(d, d)
        self.labels = list(new_labels) + rest_labels
        self.dims = dims

    def reorder(self, labels: Sequence[str]) -> None:
        """Move the named registers to the front (in order)."""
        x, dt, dr, rest = self._front(labels)
        dims = [self.dim(lab) for lab in labels]
        self._set_from_front(x, list(labels), dims, rest)

    def merge(self, labels: Sequence[str], new_label: str) -> str:
        """Fuse registers into one (first label most significant)."""
        x, dt, dr, rest = self._front(labels)
        for lab in labels:
            self._extended.discard(lab)
        self._set_from_front(x, [new_label], [dt], rest)
        return new_label

    def split(self, label: str, parts: Sequence[tuple[str, int]]) -> list[str]:
        """Split one register into several whose dims multiply to its dim."""
        if math.prod(d for _, d in parts) != self.dim(label):
            raise LayoutError("split dims do not multiply to the register dim")
        x, dt, dr, rest = self._front([label])
        self._extended.discard(label)
        self._set_from_front(x, [p for p, _ in parts], [d for _, d in parts], rest)
        return [p for p, _ in parts]

    # -- dynamics --------------------------------------------------------------
    def apply_unitary(self, u: np.ndarray, targets: Sequence[str]) -> None:
        u = np.asarray(u, dtype=complex)
        x, dt, dr, rest = self._front(targets)
        if u.shape != (dt, dt):
            raise LayoutError(f"unitary shape {u.shape} does not match target dim {dt}")
        y = np.tensordot(u, x, axes=([1], [0]))
        y = np.tensordot(y, u.conj(), axes=([2], [1])).transpose(0, 1, 3, 2)
        dims = [self.dim(lab) for lab in targets]
        self._set_from_front(y, list(targets), dims, rest)

    def apply_kraus(self, ops: Sequence[np.ndarray], targets: Sequence[str],
                    outputs: Sequence[tuple[str, int]], reject_extended: Sequence[str] = ()) -> list[str]:
        """Apply a channel from the target registers to new output registers."""
        x, dt, dr, rest = self._front(targets)
        k = np.stack([np.asarray(o, dtype=complex) for o in ops])
        dout = math.prod(d for _, d in outputs)
        if k.shape[1:] != (dout, dt):
            raise LayoutError(f"Kraus shape {k.shape[1:]} does not match {(dout, dt)}")
        y = np.einsum("kai,irjs,kbj->arbs", k, x, k.conj(), optimize=True)
        for lab in targets:
            self._extended.discard(lab)
        self._set_from_front(y, [o for o, _ in outputs], [d for _, d in outputs], rest)
        self._extended.update(reject_extended)
        return [o for o, _ in outputs]

    def compress_or_reject(self, label: str, keep: Sequence[int], out_label: str) -> str:
        """Keep the listed basis vectors of a register; collapse the rest onto reject.

        The output register has dimension ``len(keep) + 1``: the state restricted
        to the kept subspace, plus the weight outside it on the reject vector
        (correlations of that weight with other registers are preserved).
        """
        x, dt, dr, rest = self._front([label])
        keep = np.asarray(keep, dtype=int)
        k = len(keep)
        drop = np.setdiff1d(np.arange(dt), keep)
        y = np.zeros((k + 1, dr, k + 1, dr), dtype=complex)
        y[:k, :, :k, :] = x[keep][:, :, keep, :]
        if drop.size:
            y[k, :, k, :] = np.einsum("iris->rs", x[drop][:, :, drop, :])
        self._extended.discard(label)
        self._set_from_front(y, [out_label], [k + 1], rest)
        self._extended.add(out_label)
        return out_label

    def probability(self, projector: np.ndarray, targets: Sequence[str]) -> float:
        x, dt, dr, rest = self._front(targets)
        return float(np.real(np.einsum("ij,jrir->", projector, x)))

    def measure(self, projector: np.ndarray, targets: Sequence[str], rng: np.random.Generator) -> int:
        """Sample the measurement {1 - P, P}; returns 1 for P and collapses the state."""
        p = np.asarray(projector, dtype=complex)
        x, dt, dr, rest = self._front(targets)
        p1 = float(np.real(np.einsum("ij,jrir->", p, x)))
        p1 = min(max(p1, 0.0), 1.0)
        outcome = 1 if rng.random() < p1 else 0
        proj = p if outcome else np.eye(dt) - p
        prob = p1 if outcome else 1.0 - p1
        y = np.tensordot(proj, x, axes=([1], [0]))
        y = np.tensordot(y, proj.conj(), axes=([2], [1])).transpose(0, 1, 3, 2)
        y = y / prob
        dims = [self.dim(lab) for lab in targets]
        self._set_from_front(y, list(targets), dims, rest)
        return outcome

    def measure_basis(self, label: str, rng: np.random.Generator) -> int:
        """Sample a computational-basis measurement of one register (collapsing it)."""
        x, dt, dr, rest = self._front([label])
        probs = np.real(np.einsum("irir->i", x))
        probs = np.clip(probs, 0, None)
        probs = probs / probs.sum()
        outcome = int(rng.choice(dt, p=probs))
        y = np.zeros_like(x)
        y[outcome, :, outcome, :] = x[outcome, :, outcome, :] / probs[outcome]
        dims = [self.dim(label)]
        self._set_from_front(y, [label], dims, rest)
        return outcome

    # -- inspection ------------------------------------------------------------
    def _reduced_matrix(self, keep: Sequence[str]) -> np.ndarray:
        if not keep:
            return np.ones((1, 1), dtype=complex) * np.trace(self.rho)
        state = DensityState(self.layout(), self.rho, validate=False)
        return partial_trace(state, keep).matrix

    def state(self, labels: Sequence[str]) -> DensityState:
        """Reduced state of the named registers (in the given order)."""
        m = self._reduced_matrix(list(labels))
        sub = RegisterLayout(tuple((lab, self.dim(lab)) for lab in labels))
        return DensityState(sub, m, validate=False)
