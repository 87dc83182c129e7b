"""File formats for states, keys and hybrid ciphertexts.

State files are JSON::

    {"format": "qsc-lab-state", "version": 1,
     "layout": [{"label": "q0", "dim": 2}, ...], "reject_extended": false,
     "kind": "pure" | "density", "data": [[re, im], ...]}

``data`` is the amplitude vector for pure states and a row-major list of
rows for density matrices. Key files are hex in armor lines naming the key
type. Ciphertext files are JSON holding the classical part as hex and the
quantum part as an embedded state document.
"""
from __future__ import annotations

import json
import textwrap
from pathlib import Path

import numpy as np

from .classical.signcrypt import SCPublicKey, SCSecretKey
from .classical.wire import MalformedError
from .qsim import DensityState, RegisterLayout, partial_trace, pure_state

STATE_FORMAT = "qsc-lab-state"
CIPHERTEXT_FORMAT = "qsc-lab-ciphertext"
FORMAT_VERSION = 1
PRODUCT_TOL = 1e-9
KEY_TYPES = {"sdk": SCSecretKey, "vek": SCPublicKey}


# -- states -------------------------------------------------------------------

def _pairs(values: np.ndarray) -> list:
    return [[float(v.real), float(v.imag)] for v in values]


def state_to_doc(s: DensityState, pure: bool | None = None) -> dict:
    """Serialize; stores an amplitude vector when the state is pure (or ``pure`` is forced)."""
    lay = s.layout
    doc = {
        "format": STATE_FORMAT,
        "version": FORMAT_VERSION,
        "layout": [{"label": lab, "dim": dim} for lab, dim in lay.subsystems],
        "reject_extended": lay.reject_extended,
    }
    w, v = np.linalg.eigh(s.matrix)
    if pure is None:
        pure = abs(w[-1] - 1) < 1e-12
    if pure:
        vec = v[:, -1]
        # fix the global phase so output is canonical
        k = int(np.argmax(np.abs(vec) > 1e-12))
        vec = vec * np.exp(-1j * np.angle(vec[k]))
        doc.update(kind="pure", data=_pairs(vec))
    else:
        doc.update(kind="density", data=[_pairs(row) for row in s.matrix])
    return doc


def _complex(data, shape: tuple[int, ...]) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError):
        raise MalformedError("state data must be numeric [re, im] pairs") from None
    if arr.shape != shape + (2,):
        raise MalformedError(f"state data has shape {arr.shape[:-1]}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise MalformedError("state data contains non-finite numbers")
    return arr[..., 0] + 1j * arr[..., 1]


def state_from_doc(doc: dict) -> DensityState:
    if not isinstance(doc, dict) or doc.get("format") != STATE_FORMAT or doc.get("version") != FORMAT_VERSION:
        raise MalformedError("not a version-1 state document")
    try:
        subs = tuple((str(r["label"]), int(r["dim"])) for r in doc["layout"])
        layout = RegisterLayout(subs, bool(doc.get("reject_extended", False)))
        kind = doc["kind"]
        data = doc["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedError(f"bad state layout: {exc}") from None
    d = layout.total_dim
    try:
        if kind == "pure":
            vec = _complex(data, (d,))
            norm = np.linalg.norm(vec)
            if abs(norm - 1) > 1e-6:
                raise MalformedError(f"amplitudes have norm {norm:.6g}")
            return pure_state(layout, vec / norm)
        if kind == "density":
            return DensityState(layout, _complex(data, (d, d)))
    except ValueError as exc:
        raise MalformedError(f"invalid state: {exc}") from None
    raise MalformedError(f"unknown state kind {kind!r}")


def read_state(path: str | Path) -> DensityState:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise MalformedError(f"state file is not JSON: {exc}") from None
    return state_from_doc(doc)


def write_state(path: str | Path, s: DensityState) -> None:
    Path(path).write_text(json.dumps(state_to_doc(s), sort_keys=True) + "\n")


def product_defect(s: DensityState) -> float:
    """Trace-norm distance between ``s`` and the product of its single-register marginals."""
    if s.layout.reject_extended:
        raise MalformedError("plaintext states cannot carry the reject symbol")
    prod = np.ones((1, 1), dtype=complex)
    for lab in s.layout.labels:
        prod = np.kron(prod, partial_trace(s, [lab]).matrix)
    return float(np.sum(np.abs(np.linalg.eigvalsh(s.matrix - prod))))


def require_product(s: DensityState, tol: float = PRODUCT_TOL) -> None:
    defect = product_defect(s)
    if defect > tol:
        raise MalformedError(f"input registers are correlated (product defect {defect:.3g})")


# -- keys -----------------------------------------------------------------------

def armor(kind: str, data: bytes) -> str:
    tag = kind.upper()
    body = "\n".join(textwrap.wrap(data.hex(), 64))
    return f"-----BEGIN QSC-LAB {tag}-----\n{body}\n-----END QSC-LAB {tag}-----\n"


def dearmor(kind: str, text: str) -> bytes:
    tag = kind.upper()
    lines = [ln.strip() for ln in text.strip().splitlines()]
    if len(lines) < 2 or lines[0] != f"-----BEGIN QSC-LAB {tag}-----" or lines[-1] != f"-----END QSC-LAB {tag}-----":
        raise MalformedError(f"not an armored {kind} file")
    try:
        return bytes.fromhex("".join(lines[1:-1]))
    except ValueError:
        raise MalformedError("key body is not hex") from None


def write_key(path: str | Path, key: SCSecretKey | SCPublicKey, overwrite: bool = False) -> None:
    kind = "sdk" if isinstance(key, SCSecretKey) else "vek"
    p = Path(path)
    mode = "w" if overwrite else "x"
    with p.open(mode) as fh:
        fh.write(armor(kind, key.to_bytes()))


def read_key(path: str | Path, kind: str):
    cls = KEY_TYPES[kind]
    return cls.from_bytes(dearmor(kind, Path(path).read_text()))


# -- ciphertexts ------------------------------------------------------------------

def ciphertext_to_doc(classical: bytes, quantum: DensityState, message_layout: RegisterLayout,
                      m: int, t: int) -> dict:
    return {
        "format": CIPHERTEXT_FORMAT,
        "version": FORMAT_VERSION,
        "m": m,
        "t": t,
        "message_layout": [{"label": lab, "dim": dim} for lab, dim in message_layout.subsystems],
        "classical": classical.hex(),
        "quantum_state": state_to_doc(quantum),
    }


def ciphertext_from_doc(doc: dict) -> tuple[bytes, DensityState, RegisterLayout, int, int]:
    if not isinstance(doc, dict) or doc.get("format") != CIPHERTEXT_FORMAT or doc.get("version") != FORMAT_VERSION:
        raise MalformedError("not a version-1 ciphertext document")
    try:
        classical = bytes.fromhex(doc["classical"])
        m, t = int(doc["m"]), int(doc["t"])
        msg = RegisterLayout(tuple((str(r["label"]), int(r["dim"])) for r in doc["message_layout"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedError(f"bad ciphertext fields: {exc}") from None
    if msg.total_dim != 2 ** m:
        raise MalformedError("message layout does not match m")
    quantum = state_from_doc(doc["quantum_state"])
    return classical, quantum, msg, m, t


def read_ciphertext(path: str | Path):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise MalformedError(f"ciphertext file is not JSON: {exc}") from None
    return ciphertext_from_doc(doc)
