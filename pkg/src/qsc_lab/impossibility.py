"""Attacks against toy quantum signature schemes, plus the encryption normal form.

A toy scheme signs by a keyed unitary on message (x) tag register with the
tag fixed to |0...0>, and verifies through an explicit unitary dilation whose
environment carries an accept flag. Because the dilation is public, an
attacker can run verification coherently, act on the recovered message, and
run it backwards. That is the whole trick behind both attacks here.

Conventions: qubit 0 is the most significant bit; a two-outcome
measurement's ``projector`` is its outcome-1 projector; the reject symbol
counts as outcome 0.
"""
from __future__ import annotations

import json
import math
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import minimize_scalar
from scipy.stats import unitary_group

from .qsim import (
    HADAMARD,
    DensityState,
    KrausChannel,
    LayoutError,
    RegisterLayout,
    TwoOutcomeMeasurement,
    apply_channel,
    choi,
    choi_from_kraus_stack,
    embed_channel,
    measurement_channel,
    qubit_operator,
    reflection,
    sequential_measure,
    trace_norm,
)

SUPPORT_TOL = 1e-12


# -- toy signature schemes ---------------------------------------------------

@dataclass(frozen=True, eq=False)
class ToyQS:
    """Quantum signature scheme given by explicit circuits.

    ``sign_unitaries[k]`` acts on M (x) T and is fed the tag |0>.
    ``dilations[k]`` is a unitary on C (x) E1 -> M (x) E2 (C = M (x) T), run
    with E1 in |0>; ``accept`` is the accept projector on E2. Verification
    needs only the dilation, so attacks get it but never the sign unitary.
    """

    sign_unitaries: tuple[np.ndarray, ...]
    dilations: tuple[np.ndarray, ...]
    accept: np.ndarray
    dm: int
    dt: int
    de1: int
    tolerance: float = 1e-9

    def __post_init__(self):
        if len(self.sign_unitaries) != len(self.dilations) or not self.dilations:
            raise ValueError("need one sign unitary and one dilation per key")
        dc = self.dc
        for u in self.sign_unitaries:
            if u.shape != (dc, dc):
                raise LayoutError(f"sign unitary shape {u.shape}, expected {(dc, dc)}")
        for w in self.dilations:
            if w.shape != (dc * self.de1, dc * self.de1):
                raise LayoutError(f"dilation shape {w.shape}, expected {(dc * self.de1,) * 2}")
            if not np.allclose(w.conj().T @ w, np.eye(w.shape[0]), atol=1e-9):
                raise ValueError("dilation is not unitary")
        if (dc * self.de1) % self.dm:
            raise LayoutError("dilation output does not factor as M (x) E2")
        if self.accept.shape != (self.de2, self.de2):
            raise LayoutError("accept projector does not act on E2")

    @property
    def dc(self) -> int:
        return self.dm * self.dt

    @property
    def de2(self) -> int:
        return self.dc * self.de1 // self.dm

    @property
    def n_keys(self) -> int:
        return len(self.dilations)

    @property
    def message_layout(self) -> RegisterLayout:
        return RegisterLayout((("M", self.dm),))

    @property
    def cipher_layout(self) -> RegisterLayout:
        return RegisterLayout((("C", self.dc),))

    def sample_keys(self, count: int, rng: np.random.Generator) -> list[int]:
        return [int(k) for k in rng.integers(self.n_keys, size=count)]

    def sign_channel(self, key: int) -> KrausChannel:
        iso = self.sign_unitaries[key][:, :: self.dt]
        return KrausChannel((iso,), self.message_layout, self.cipher_layout)

    def verify_channel(self, key: int) -> KrausChannel:
        w0 = self.dilations[key][:, :: self.de1].reshape(self.dm, self.de2, self.dc)
        vals, vecs = np.linalg.eigh(self.accept)
        out = self.message_layout.extended()
        ops = []
        for lam, q in zip(vals, vecs.T):
            part = np.einsum("e,mec->mc", q.conj(), w0)
            if lam > 0.5:
                k = np.zeros((self.dm + 1, self.dc), dtype=complex)
                k[: self.dm] = part
                ops.append(k)
            else:
                for m in range(self.dm):
                    k = np.zeros((self.dm + 1, self.dc), dtype=complex)
                    k[self.dm] = part[m]
                    ops.append(k)
        return KrausChannel(tuple(ops), self.cipher_layout, out)


def _permutation(n_qubits: int, cnots: Sequence[tuple[int, int]]) -> np.ndarray:
    """Permutation matrix of a CNOT sequence (control, target), applied in order."""
    dim = 2 ** n_qubits
    perm = np.zeros((dim, dim))
    for i in range(dim):
        bits = [(i >> (n_qubits - 1 - q)) & 1 for q in range(n_qubits)]
        for c, t in cnots:
            bits[t] ^= bits[c]
        j = int("".join(map(str, bits)), 2)
        perm[j, i] = 1.0
    return perm


def toy_qs(rng: np.random.Generator, m_qubits: int = 2, t_qubits: int = 1, n_keys: int = 2,
           dephase: str | None = None, dephase_qubit: int = 0) -> ToyQS:
    """Haar-random keyed-unitary signatures with a tag-copying verification dilation.

    Verification applies V_k^dag, copies every tag qubit into E1 and accepts
    iff all copies read 0. ``dephase`` ("Z" or "X") additionally copies one
    message qubit, in that basis, into an extra E1 qubit, which makes the
    scheme correct only for measurements diagonal in that basis.
    """
    if dephase not in (None, "Z", "X"):
        raise ValueError("dephase must be None, 'Z' or 'X'")
    n_sys = m_qubits + t_qubits
    n_env = t_qubits + (1 if dephase else 0)
    n_all = n_sys + n_env
    cnots = [(m_qubits + i, n_sys + i) for i in range(t_qubits)]
    if dephase:
        cnots.append((dephase_qubit, n_sys + t_qubits))
    copy = _permutation(n_all, cnots)
    if dephase == "X":
        h = qubit_operator(HADAMARD, dephase_qubit, n_all)
        copy = h @ copy @ h
    signs, dils = [], []
    for _ in range(n_keys):
        v = unitary_group.rvs(2 ** n_sys, random_state=rng)
        signs.append(v)
        dils.append(copy @ np.kron(v.conj().T, np.eye(2 ** n_env)))
    # E2 = T (x) E1; accept iff the tag copies read 0
    tag_copy = np.zeros((2 ** t_qubits, 2 ** t_qubits))
    tag_copy[0, 0] = 1
    accept = np.kron(np.eye(2 ** t_qubits), np.kron(tag_copy, np.eye(2 ** (n_env - t_qubits))))
    return ToyQS(tuple(signs), tuple(dils), accept, 2 ** m_qubits, 2 ** t_qubits, 2 ** n_env)


def pauli_measurement(pauli: str, qubit: int, n: int) -> TwoOutcomeMeasurement:
    """Measure one qubit in the Z or X basis; outcome 1 is the -1 eigenvalue."""
    one = np.diag([0.0, 1.0]).astype(complex)
    if pauli == "X":
        one = HADAMARD @ one @ HADAMARD
    elif pauli != "Z":
        raise ValueError("only Z and X measurements are built in")
    return TwoOutcomeMeasurement(qubit_operator(one, qubit, n), RegisterLayout((("M", 2 ** n),)))


# -- attacks -------------------------------------------------------------------

def _through_dilation(qs: ToyQS, key: int, u_message: np.ndarray) -> KrausChannel:
    """Channel on C: prepare E1 = |0>, apply W^dag (U (x) 1_E2) W, discard E1."""
    u_message = np.asarray(u_message, dtype=complex)
    if u_message.shape != (qs.dm, qs.dm):
        raise LayoutError(f"message unitary shape {u_message.shape}, expected {(qs.dm, qs.dm)}")
    w = qs.dilations[key]
    full = w.conj().T @ np.kron(u_message, np.eye(qs.de2)) @ w
    blocks = full.reshape(qs.dc, qs.de1, qs.dc, qs.de1)
    ops = tuple(blocks[:, j, :, 0] for j in range(qs.de1))
    return KrausChannel(ops, qs.cipher_layout, qs.cipher_layout)


def reflection_unitary(qs: ToyQS, m0: TwoOutcomeMeasurement, key: int = 0) -> np.ndarray:
    """The attack unitary on C (x) E1: dilation, reflect about the outcome-0 projector, undo."""
    w = qs.dilations[key]
    u = reflection(m0.complement)
    return w.conj().T @ np.kron(u, np.eye(qs.de2)) @ w


def build_reflection_attack(qs: ToyQS, m0: TwoOutcomeMeasurement, key: int = 0,
                            check_correct: bool = True) -> KrausChannel:
    """Coherently verify, apply I - 2P0 to the message, and un-verify.

    P0 is the outcome-0 projector of ``m0``. Refuses schemes that are not
    correct for ``m0``, since then the attacked state need not stay valid.
    """
    if m0.layout.total_dim != qs.dm:
        raise LayoutError("measurement does not act on the message space")
    if check_correct:
        (res,) = check_correct_for(qs, [m0])
        if res > qs.tolerance:
            raise ValueError(f"scheme is not correct for this measurement (residual {res:.3g})")
    return _through_dilation(qs, key, reflection(m0.complement))


def build_swap_attack(qs: ToyQS, prep0: np.ndarray, prep1: np.ndarray, key: int = 0,
                      target: TwoOutcomeMeasurement | None = None) -> KrausChannel:
    """Map a signature of U0|0> to one of U1|0> by acting with U1 U0^dag inside the dilation.

    With ``target`` given, checks that the two prepared states give opposite
    deterministic outcomes of it.
    """
    prep0 = np.asarray(prep0, dtype=complex)
    prep1 = np.asarray(prep1, dtype=complex)
    if target is not None:
        p = target.projector
        outs = [float(np.real(u[:, 0].conj() @ p @ u[:, 0])) for u in (prep0, prep1)]
        if not all(min(o, 1 - o) < 1e-9 for o in outs) or round(outs[0]) == round(outs[1]):
            raise ValueError("prepared states must have opposite deterministic outcomes")
    return _through_dilation(qs, key, prep1 @ prep0.conj().T)


# -- reports -------------------------------------------------------------------

@dataclass(frozen=True)
class AttackReport:
    accept_prob_before: float
    accept_prob_after: float
    outcome_prob_before: float
    outcome_prob_after: float
    advantage: float
    epsilon: float
    fit_p: float
    keys_used: int
    gap: float | None = None

    def __post_init__(self):
        for name in ("accept_prob_before", "accept_prob_after", "outcome_prob_before",
                     "outcome_prob_after", "advantage", "fit_p"):
            v = getattr(self, name)
            if not -1e-9 <= v <= 1 + 1e-9:
                raise ValueError(f"{name}={v} outside [0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class CommutatorGap:
    sequential: float
    squared_norm: float


def commutator_gap(m0: TwoOutcomeMeasurement, m1: TwoOutcomeMeasurement, psi: DensityState) -> CommutatorGap:
    """How much the order of two measurements matters on ``psi``.

    ``sequential`` is the 1-norm distance between the joint outcome
    distributions of (m0 then m1) and (m1 then m0), each outcome tied to its
    measurement. ``squared_norm`` compares ||P0 P1 psi||^2 with
    ||P1 P0 psi||^2 for the outcome-0 projectors (traced form for mixed input).
    """
    a = sequential_measure(psi, m0, m1)
    b = sequential_measure(psi, m1, m0)
    b_tied = b[[0, 2, 1, 3]]
    p0, p1 = m0.complement, m1.complement
    rho = psi.matrix
    one = np.real(np.trace(p0 @ p1 @ rho @ p1 @ p0))
    two = np.real(np.trace(p1 @ p0 @ rho @ p0 @ p1))
    return CommutatorGap(float(np.sum(np.abs(a - b_tied))), float(abs(one - two)))


def _keys(qs: ToyQS, keys: Iterable[int] | None) -> list[int]:
    keys = list(range(qs.n_keys)) if keys is None else [int(k) for k in keys]
    if not keys:
        raise ValueError("no keys supplied")
    return keys


def _verified_choi(qs: ToyQS, meas: TwoOutcomeMeasurement, key: int,
                   attack: KrausChannel | None) -> np.ndarray:
    chain = qs.sign_channel(key)
    if attack is not None:
        chain = chain.then(attack)
    return choi(chain.then(qs.verify_channel(key)).then(measurement_channel(meas.extended())))


def check_correct_for(qs: ToyQS, measurements: Mapping[str, TwoOutcomeMeasurement] | Sequence[TwoOutcomeMeasurement],
                      keys: Iterable[int] | None = None) -> dict[str, float] | list[float]:
    """Per-measurement Choi distance of N o Ver o Sign from N (x) reject-as-0, averaged over keys."""
    keys = _keys(qs, keys)
    named = isinstance(measurements, Mapping)
    items = list(measurements.items()) if named else list(enumerate(measurements))
    embed = embed_channel(qs.message_layout)
    out = {}
    for name, meas in items:
        ideal = choi(embed.then(measurement_channel(meas.extended())))
        dists = [trace_norm(_verified_choi(qs, meas, k, None) - ideal) for k in keys]
        out[name] = float(np.mean(dists))
    return out if named else [out[i] for i in range(len(items))]


AttackSpec = KrausChannel | Callable[[int], KrausChannel] | None


def _attack_for(attack: AttackSpec, key: int) -> KrausChannel | None:
    return attack(key) if callable(attack) and not isinstance(attack, KrausChannel) else attack


def _fit_reject_mixture(j_eff: np.ndarray, j_real: np.ndarray, j_rej: np.ndarray) -> tuple[float, float]:
    def cost(p: float) -> float:
        return trace_norm(j_eff - p * j_real - (1 - p) * j_rej)

    # convex in p, so a bounded scalar search plus the endpoints is exact enough
    res = minimize_scalar(cost, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-10})
    candidates = [(cost(0.0), 0.0), (cost(1.0), 1.0), (float(res.fun), float(res.x))]
    eps, p = min(candidates)
    return eps, p


def _mean_state(qs: ToyQS, keys: list[int], attack: AttackSpec, probe: DensityState) -> np.ndarray:
    total = 0
    for k in keys:
        s = apply_channel(qs.sign_channel(k), probe)
        a = _attack_for(attack, k)
        if a is not None:
            s = apply_channel(a, s)
        total = total + apply_channel(qs.verify_channel(k), s).matrix
    return total / len(keys)


def falsify_security(qs: ToyQS, target: TwoOutcomeMeasurement, attack: AttackSpec,
                     keys: Iterable[int] | None = None, probe: DensityState | None = None,
                     gap: float | None = None) -> AttackReport:
    """Lower-bound the one-time security error of ``qs`` against ``attack``.

    Fits ``target`` o E_k[Ver o A o Sign] by p * target + (1 - p) * (reject,
    read as outcome 0) and reports the smallest Choi distance found. A large
    value proves insecurity; a small one proves nothing. ``attack`` is a
    channel on C or a function from key index to one (attacks may depend on
    the public dilation). Probabilities are for the ``probe`` plaintext,
    maximally mixed by default.
    """
    keys = _keys(qs, keys)
    meas = measurement_channel(target.extended())
    j_eff = np.mean([_verified_choi(qs, target, k, _attack_for(attack, k)) for k in keys], axis=0)
    embed = embed_channel(qs.message_layout)
    j_real = choi(embed.then(meas))
    # reject reads as outcome 0: X -> Tr(X)|0><0|
    rej = KrausChannel(tuple(np.outer([1, 0], row) for row in np.eye(qs.dm)), qs.message_layout, meas.out_layout)
    j_rej = choi(rej)
    eps, p = _fit_reject_mixture(j_eff, j_real, j_rej)
    if probe is None:
        probe = DensityState(qs.message_layout, np.eye(qs.dm) / qs.dm)
    before = _mean_state(qs, keys, None, probe)
    after = _mean_state(qs, keys, attack, probe)
    p_ext = target.extended().projector

    def stats(rho):
        acc = float(np.clip(np.real(np.trace(rho[: qs.dm, : qs.dm])), 0, 1))
        out = float(np.clip(np.real(np.trace(p_ext @ rho)), 0, 1))
        return acc, out

    acc_b, out_b = stats(before)
    acc_a, out_a = stats(after)
    return AttackReport(acc_b, acc_a, out_b, out_a, abs(out_a - out_b), float(eps), float(p), len(keys), gap)


# -- the non-commuting measurement theorem -------------------------------------

@dataclass(frozen=True)
class Imp1Report:
    residuals: tuple[float, float]
    gap: CommutatorGap
    attacks: tuple[AttackReport, AttackReport]
    advantage: float
    epsilon: float
    bound: float
    bound_full_gap: float
    inequality_holds: bool
    full_gap_form_holds: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["residuals"] = list(self.residuals)
        return d


def verify_thm_imp1(qs: ToyQS, m0: TwoOutcomeMeasurement, m1: TwoOutcomeMeasurement, psi: DensityState,
                    keys: Iterable[int] | None = None) -> Imp1Report:
    """Run both reflection attacks and compare the best outcome shift with the gap.

    Reflecting about m0's outcome-0 projector shifts m1's statistics and vice
    versa; the better of the two is the attack advantage. The checked bound
    is advantage >= gap/2 - residuals - epsilon, the factor 1/2 coming from
    converting the sequential 1-norm gap into a single-measurement shift.
    ``bound_full_gap`` is the same with the whole gap, reported for comparison.
    """
    keys = _keys(qs, keys)
    residuals = tuple(check_correct_for(qs, [m0, m1], keys))
    gap = commutator_gap(m0, m1, psi)
    reports = []
    for reflect, target in ((m0, m1), (m1, m0)):
        def attack(k, reflect=reflect):
            return build_reflection_attack(qs, reflect, k, check_correct=False)
        reports.append(falsify_security(qs, target, attack, keys, probe=psi, gap=gap.sequential))
    best = max(reports, key=lambda r: r.advantage)
    slack = sum(residuals) + best.epsilon
    bound = gap.sequential / 2 - slack
    bound_full = gap.sequential - slack
    tol = 1e-9
    return Imp1Report(residuals, gap, (reports[0], reports[1]), best.advantage, best.epsilon, bound, bound_full,
                      best.advantage >= bound - tol, best.advantage >= bound_full - tol)


# -- encryption normal form ----------------------------------------------------

@dataclass(frozen=True, eq=False)
class EncryptionCharacterization:
    """Enc(X) ~= V (X (x) sigma) V^dag with V unitary on M (x) T -> C.

    ``projector`` keeps the eigenvectors of sigma with eigenvalue at least
    ``threshold``. ``fit_error`` is the Choi distance of the reconstruction
    from the original encryption.
    """

    unitary: np.ndarray
    sigma: np.ndarray
    projector: np.ndarray
    fit_error: float
    correctness_error: float
    delta: float
    threshold: float
    isometry_defect: float
    dm: int
    dt: int

    def reconstruction(self) -> KrausChannel:
        lay_m = RegisterLayout((("M", self.dm),))
        lay_c = RegisterLayout((("C", self.unitary.shape[0]),))
        return KrausChannel(tuple(self._kraus()), lay_m, lay_c)

    def _kraus(self) -> list[np.ndarray]:
        v = self.unitary.reshape(-1, self.dm, self.dt)
        vals, vecs = np.linalg.eigh(self.sigma)
        return [math.sqrt(lam) * (v @ vec) for lam, vec in zip(vals, vecs.T) if lam > SUPPORT_TOL]

    def mixture(self) -> list[tuple[float, np.ndarray]]:
        """Classical-randomness form: (probability, pure tag state) pairs from sigma's eigenbasis."""
        vals, vecs = np.linalg.eigh(self.sigma)
        return [(float(lam), vec) for lam, vec in zip(vals, vecs.T) if lam > SUPPORT_TOL]


def _correctness_error(enc: KrausChannel, dec: KrausChannel, dm: int) -> float:
    lay = RegisterLayout((("M", dm),))
    ideal = embed_channel(lay) if dec.out_layout.total_dim == dm + 1 else KrausChannel((np.eye(dm),), lay, lay)
    return trace_norm(choi(enc.then(dec)) - choi(ideal))


def _inv_sqrt(h: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    if w.min() <= SUPPORT_TOL:
        raise ValueError("tag weight operator is singular on the environment support")
    return (v / np.sqrt(w)) @ v.conj().T


def _sqrt_psd(h: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def characterize_encryption(enc: KrausChannel, dec: KrausChannel, max_delta: float = 0.1,
                            threshold: float | None = None, floor: float = 1e-10) -> EncryptionCharacterization:
    """Put a correct encryption into unitary-with-auxiliary-state form.

    Steps: Stinespring both channels; align the environment of Dec o Enc to
    the trivial one by orthogonal Procrustes (SVD of the overlap matrix), which
    yields a pure environment state phi; pull phi back through Dec's dilation
    and polar-correct to an exact isometry; read off sigma on the support of
    phi's F-marginal and complete to a unitary. ``threshold`` defaults to
    (4 delta)^(1/6), with delta = e + 4 sqrt(e) for correctness error e, and
    is never below ``floor``.
    """
    dm = enc.in_layout.total_dim
    dc = enc.out_layout.total_dim
    dmbar = dec.out_layout.total_dim
    if dec.in_layout.total_dim != dc or dmbar not in (dm, dm + 1):
        raise LayoutError("decryption does not invert the encryption's spaces")
    err = _correctness_error(enc, dec, dm)
    delta = err + 4 * math.sqrt(err)
    if delta > max_delta:
        raise ValueError(f"pair is not correct enough (delta={delta:.3g} > {max_delta})")
    u = enc.stacked.transpose(1, 0, 2)                       # (dc, nE, dm)
    w = dec.stacked.transpose(1, 0, 2)                       # (dmbar, nF, dc)
    n_e, n_f = u.shape[1], w.shape[1]
    x = np.einsum("afc,cem->afem", w, u)                     # (dmbar, nF, nE, dm)

    # Procrustes against iota (x) |0>: only the first column of the overlap is nonzero
    overlap = np.zeros((n_f * n_e, n_f * n_e), dtype=complex)
    overlap[:, 0] = np.einsum("mgm->g", x[:dm].reshape(dm, n_f * n_e, dm))
    q, _, rh = np.linalg.svd(overlap)
    align = rh.conj().T @ q.conj().T
    phi = (align.conj().T[:, 0]).reshape(n_f, n_e)

    # B = (W^dag (x) 1_E)(iota (x) phi), then its polar part
    w_msg = w[:dm]                                           # rows of iota(M)
    b = np.einsum("mfc,fe->cem", w_msg.conj(), phi).reshape(dc * n_e, dm)
    _, s, vh = np.linalg.svd(b, full_matrices=False)
    if s.min() <= SUPPORT_TOL:
        raise ValueError("pulled-back dilation is singular")
    corr = vh.conj().T @ np.diag(1 / s) @ vh
    a = np.einsum("mfc,mn->cnf", w_msg.conj(), corr)         # (dc, dm, nF)

    phi_f = phi @ phi.conj().T
    vals, vecs = np.linalg.eigh(phi_f)
    q_s = vecs[:, vals > SUPPORT_TOL]
    r_s = q_s.shape[1]
    if dc % dm:
        raise ValueError("ciphertext dimension is not a multiple of the message dimension")
    dt = dc // dm
    if r_s > dt:
        raise ValueError("environment support too large for a unitary normal form")
    phi_s = q_s.conj().T @ phi_f @ q_s
    a_s = (a @ q_s).reshape(dc, dm * r_s)
    gram = (a_s.conj().T @ a_s).reshape(dm, r_s, dm, r_s)
    kappa = np.einsum("iaib->ab", gram) / dm
    v_s = a_s @ np.kron(np.eye(dm), _inv_sqrt(kappa))
    defect = float(np.max(np.abs(v_s.conj().T @ v_s - np.eye(dm * r_s))))
    uu, _, vvh = np.linalg.svd(v_s, full_matrices=False)
    v_s = uu @ vvh

    full = np.zeros((dc, dm, dt), dtype=complex)
    full[:, :, :r_s] = v_s.reshape(dc, dm, r_s)
    if dt > r_s:
        rest = null_space(v_s.conj().T)
        slots = [(mi, ti) for mi in range(dm) for ti in range(r_s, dt)]
        for col, (mi, ti) in zip(rest.T, slots):
            full[:, mi, ti] = col
    unitary = full.reshape(dc, dm * dt)

    root = _sqrt_psd(kappa)
    sigma = np.zeros((dt, dt), dtype=complex)
    sigma[:r_s, :r_s] = root @ phi_s @ root
    sigma = (sigma + sigma.conj().T) / 2
    thr = max(threshold if threshold is not None else (4 * delta) ** (1 / 6), floor)
    sv, svec = np.linalg.eigh(sigma)
    keep = svec[:, sv >= thr]
    projector = keep @ keep.conj().T

    out = EncryptionCharacterization(unitary, sigma, projector, 0.0, err, delta, thr, defect, dm, dt)
    fit = trace_norm(choi(enc) - choi_from_kraus_stack(np.stack(out._kraus()), dm))
    return EncryptionCharacterization(unitary, sigma, projector, fit, err, delta, thr, defect, dm, dt)


def mixture_error(enc: KrausChannel, char: EncryptionCharacterization) -> float:
    """Choi distance of Enc from sum_r p_r V(. (x) |psi_r><psi_r|)V^dag built from ``char.mixture()``."""
    v = char.unitary.reshape(-1, char.dm, char.dt)
    ops = np.stack([math.sqrt(p) * (v @ psi) for p, psi in char.mixture()])
    return trace_norm(choi(enc) - choi_from_kraus_stack(ops, char.dm))


# -- demos ------------------------------------------------------------------------

@dataclass(frozen=True)
class DemoResult:
    swap: AttackReport | None
    imp1: Imp1Report
    advantage: float
    witnessed: bool
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "swap_attack": None if self.swap is None else self.swap.to_dict(),
            "noncommuting_attack": self.imp1.to_dict(),
            "advantage": self.advantage,
            "witnessed": self.witnessed,
            "verdict": f"theorem witnessed: {'yes' if self.witnessed else 'no'}",
            **self.extra,
        }


def attack_demo(rng: np.random.Generator, commuting: bool = False, n_keys: int = 2) -> DemoResult:
    """Toy scheme on 2 message qubits + 1 tag qubit.

    Default: swap |00> -> |10> (flips Z on qubit 0) and the Z/X reflection
    attack on |00>. With ``commuting`` the measurement pair is Z on qubit 0
    and Z on qubit 1, and no swap attack is run.
    """
    qs = toy_qs(rng, n_keys=n_keys)
    lay = qs.message_layout
    psi = DensityState(lay, np.diag([1.0, 0, 0, 0]).astype(complex))
    z0 = pauli_measurement("Z", 0, 2)
    if commuting:
        imp1 = verify_thm_imp1(qs, z0, pauli_measurement("Z", 1, 2), psi)
        return DemoResult(None, imp1, imp1.advantage, imp1.inequality_holds, {"measurements": "Z0/Z1"})
    x0 = pauli_measurement("X", 0, 2)
    flip = qubit_operator(np.array([[0, 1], [1, 0]], dtype=complex), 0, 2)

    def swap(k):
        return build_swap_attack(qs, np.eye(4), flip, k, target=z0)

    swap_report = falsify_security(qs, z0, swap, probe=psi)
    imp1 = verify_thm_imp1(qs, z0, x0, psi)
    witnessed = swap_report.epsilon >= 0.99 and swap_report.accept_prob_after >= 0.999 and imp1.inequality_holds
    return DemoResult(swap_report, imp1, swap_report.advantage, witnessed, {"measurements": "Z0/X0"})
