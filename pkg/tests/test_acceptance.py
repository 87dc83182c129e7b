"""Acceptance criteria A1 to A12, one test each.

Each test prints a single PASS/FAIL line; the lines are repeated in the
terminal summary. Tolerances are the contractual ones; nothing is loosened.
"""
import json

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracles import bfs_clifford_group, order_formula, simulator_residual, trap_effective_choi
from qsc_lab.adversaries import (
    Adversary,
    ChallengeReplayer,
    ClassicalBitFlipper,
    NeverReplayer,
    PauliTamperer,
    Redirector,
)
from qsc_lab.auth import auth_keygen, clifford_effective_choi, dec_channel, dns_fit, enc_channel
from qsc_lab.cli import main
from qsc_lab.clifford import clifford_group_order, enumerate_cliffords, is_symplectic
from qsc_lab.context import QContext
from qsc_lab.games import (
    hoeffding_radius,
    outcome_counts,
    run_m_out_real,
    run_out_ideal,
    run_out_real,
    run_qwcca2_fake,
    run_trials,
    run_wqae_ideal,
)
from qsc_lab.hybrid import ClassicalSC, HybridQSC, SharpSKE, TrapCode, derive_pkqe, multiuser_wrap, sharp, skqe_hybrid
from qsc_lab.impossibility import (
    build_swap_attack,
    characterize_encryption,
    commutator_gap,
    falsify_security,
    pauli_measurement,
    toy_qs,
)
from qsc_lab.qsim import (
    PAULI,
    KrausChannel,
    RegisterLayout,
    basis_state,
    bell_vector,
    kraus_from_choi,
    qubit_operator,
    trace_norm,
)


def record(tag, ok, detail):
    line = f"{tag} {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def _raw_dist(a, b):
    return float(np.sum(np.abs(np.linalg.eigvalsh(a - b))))


def _embedded(v):
    w = np.append(np.asarray(v, dtype=complex), 0)
    return np.outer(w, w.conj())


class HaarReplay(Adversary):
    """Encrypt a Haar-random state, replay the untouched ciphertext, record the distance."""

    distances: list

    def __init__(self):
        self.distances = []

    def play(self, view, rng):
        d = 2 ** view.m
        v = rng.normal(size=d) + 1j * rng.normal(size=d)
        v /= np.linalg.norm(v)
        out = view.decrypt(view.encrypt(view.ctx.add_pure(view.ctx.fresh("Min"), v)))
        self.distances.append(0.5 * _raw_dist(view.ctx.state([out]).matrix, _embedded(v)))
        return "real"


def test_a1_correctness():
    qsc = HybridQSC.build(1, 1)
    worst_dist, worst_bot = 0.0, 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        s, r = qsc.keygen(rng), qsc.keygen(rng)
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        ctx = QContext()
        ctx.add_pure("M", v)
        out = qsc.verdec(ctx, s.vek, r.sdk, qsc.sigenc(ctx, s.sdk, r.vek, "M", rng), "Y")
        rho = ctx.state([out]).matrix
        worst_dist = max(worst_dist, _raw_dist(rho, _embedded(v)))
        worst_bot = max(worst_bot, float(rho[-1, -1].real))
    record("A1", worst_dist <= 1e-9 and worst_bot <= 1e-9,
           f"max raw distance {worst_dist:.2e}, max reject weight {worst_bot:.2e} over 100 plaintexts")


def test_a2_clifford_enumeration():
    counts = {n: len(enumerate_cliffords(n)) for n in (1, 2)}
    ok = counts == {1: 24, 2: 11520} == {n: order_formula(n) for n in (1, 2)}
    ok &= all(clifford_group_order(n) == order_formula(n) for n in (1, 2))
    ok &= all(is_symplectic(c.symplectic) for n in (1, 2) for c in enumerate_cliffords(n))
    record("A2", ok, f"group orders {counts[1]} and {counts[2]}, all tableaux symplectic")


def test_a3_dns_effective_channel():
    msg = RegisterLayout((("M", 2),))
    cipher = RegisterLayout((("C", 4),))
    group = bfs_clifford_group(2)
    worst, details = 0.0, []
    for name in "XYZ":
        op = qubit_operator(PAULI[name], 0, 2)
        j = clifford_effective_choi(1, 1, KrausChannel((op,), cipher, cipher))
        fit = dns_fit(kraus_from_choi(j, msg, msg.extended()))
        _, res_ref = simulator_residual(trap_effective_choi(group, [op], 1, 1), 2)
        worst = max(worst, abs(fit.residual - res_ref))
        details.append(f"{name}:{fit.residual:.6f}")
    ident = dns_fit(kraus_from_choi(clifford_effective_choi(1, 1, KrausChannel((np.eye(4),), cipher, cipher)),
                                    msg, msg.extended()))
    ok = worst <= 1e-9 and abs(ident.p_acc - 1) <= 1e-9 and ident.residual <= 1e-9
    record("A3", ok, f"residuals {' '.join(details)}, oracle gap {worst:.1e}, identity residual {ident.residual:.1e}")


def test_a4_commutator_gap():
    zero = basis_state(RegisterLayout((("M", 2),)), 0)
    z, x = pauli_measurement("Z", 0, 1), pauli_measurement("X", 0, 1)
    gap = commutator_gap(z, x, zero).sequential
    # 4-outcome distributions by hand: Z then X gives (1/2, 1/2, 0, 0); X then Z gives 1/4 each
    ok = abs(gap - 1.0) <= 1e-9
    two = RegisterLayout((("M", 4),))
    rho = basis_state(two, 1)
    comm = commutator_gap(pauli_measurement("Z", 0, 2), pauli_measurement("Z", 1, 2), rho).sequential
    comm2 = commutator_gap(z, z, zero).sequential
    ok &= comm <= 1e-9 and comm2 <= 1e-9
    record("A4", ok, f"Z/X gap {gap:.12f}, commuting gaps {comm:.1e} {comm2:.1e}")


def test_a5_impossibility_witness():
    qs = toy_qs(np.random.default_rng(2024), m_qubits=2, t_qubits=1, n_keys=2)
    z0 = pauli_measurement("Z", 0, 2)
    flip = qubit_operator(PAULI["X"], 0, 2)
    zero = basis_state(RegisterLayout((("M", 4),)), 0)
    rep = falsify_security(qs, z0, lambda k: build_swap_attack(qs, np.eye(4), flip, k, target=z0), probe=zero)
    ok = rep.outcome_prob_after >= 0.999 and rep.outcome_prob_before <= 1e-3
    ok &= rep.accept_prob_after >= 0.999 and rep.epsilon >= 0.99
    record("A5", ok, f"outcome flip {rep.outcome_prob_after:.6f}, accept {rep.accept_prob_after:.6f}, "
                     f"epsilon {rep.epsilon:.6f}")


def test_a6_characterization():
    worst_fit, invariants = 0.0, True
    rng = np.random.default_rng(6)
    for _ in range(10):
        k = auth_keygen(1, 1, rng)
        c = characterize_encryption(enc_channel(k), dec_channel(k))
        u = c.unitary
        worst_fit = max(worst_fit, c.fit_error)
        invariants &= np.allclose(u.conj().T @ u, np.eye(u.shape[1]), atol=1e-9)
        invariants &= abs(np.trace(c.sigma).real - 1) <= 1e-9 and np.linalg.eigvalsh(c.sigma).min() >= -1e-9
        invariants &= np.allclose(c.projector @ c.projector, c.projector, atol=1e-9)
        # the projector lives on sigma's support
        invariants &= np.allclose(c.projector @ c.sigma @ c.projector, c.sigma, atol=1e-6)
    record("A6", worst_fit <= 1e-6 and invariants, f"max fit {worst_fit:.2e} over 10 keys, invariants {invariants}")


def test_a7_ideal_world_exactness():
    worst = {}
    for name, game, factory in (
        ("out-ideal", run_out_ideal, lambda: HybridQSC.build(1, 1)),
        ("wqae-ideal", run_wqae_ideal, lambda: skqe_hybrid(SharpSKE(ClassicalSC(1)), TrapCode(1, 1))),
    ):
        dists = []
        for seed in range(100):
            adv = HaarReplay()
            game(factory(), adv, 1, np.random.default_rng(seed), seed=seed)
            dists += adv.distances
        worst[name] = max(dists)
    record("A7", max(worst.values()) <= 1e-10,
           " ".join(f"{k} max distance {v:.1e}" for k, v in worst.items()) + " over 100 trials")


def test_a8_forgery_rejection():
    # m + t = 8 is the simulation cap; more traps are not simulable here
    rates = {}
    for name, adv in (("bitflip", ClassicalBitFlipper), ("pauli", PauliTamperer)):
        outs = run_trials(run_out_real, lambda: HybridQSC.build(1, 7), adv, 7, 1000, 8)
        rates[name] = outcome_counts(outs).get("ideal", 0) / 1000
    analytic = 1 - (4 * 2 ** 7 - 1) / (4 ** 8 - 1)
    record("A8", min(rates.values()) >= 0.999,
           f"reject freq bitflip {rates['bitflip']:.3f}, pauli {rates['pauli']:.3f} "
           f"(pauli analytic {analytic:.4f} at 7 traps)")


def test_a9_cheat_detection():
    replay = run_trials(run_qwcca2_fake, lambda: derive_pkqe(HybridQSC.build(1, 1)), ChallengeReplayer, 1, 1000, 9)
    pre = sum(o.details["cheat_before_coin"] for o in replay) / 1000
    # a stray Bell pass on the adversary's own ciphertext has weight 4^-m; m = 2 is the largest
    # plaintext whose game fits the simulation cap
    never = run_trials(run_qwcca2_fake, lambda: derive_pkqe(HybridQSC.build(2, 1)), NeverReplayer, 1, 1000, 10)
    rate = outcome_counts(never).get("cheat", 0) / 1000
    radius = hoeffding_radius(1000, 0.01)
    record("A9", pre == 1.0 and abs(rate - 0.5) <= radius,
           f"challenge-replay pre-coin cheat {pre:.3f}, never-replay cheat {rate:.3f} (radius {radius:.3f})")


def _bell_choi(scheme, seed, tamper):
    rng = np.random.default_rng(seed)
    ek, dk = scheme.keygen(rng)
    ctx = QContext()
    ctx.add_joint(["M", "R"], [2, 2], bell_vector(2))
    ct = tamper(ctx, scheme.encrypt(ctx, ek, "M", rng))
    out = scheme.decrypt(ctx, dk, ct, "Y")
    return ct.classical, ctx.state([out, "R"]).matrix


def _flip_x(ctx, ct):
    ctx.apply_unitary(qubit_operator(PAULI["X"], 0, 2), [ct.quantum])
    return ct


def _flip_byte(ctx, ct):
    data = bytearray(ct.classical)
    data[7] ^= 0x10
    return ct.with_classical(bytes(data))


def test_a10_hybrid_identity():
    qsc = HybridQSC.build(1, 1, depth=1)
    other = skqe_hybrid(SharpSKE(ClassicalSC(1, 1)), TrapCode(1, 1))
    worst, same_bytes = 0.0, True
    for tamper in (lambda ctx, ct: ct, _flip_x, _flip_byte):
        ja, jb = 0, 0
        for seed in range(40):
            ca, a = _bell_choi(sharp(qsc), seed, tamper)
            cb, b = _bell_choi(other, seed, tamper)
            same_bytes &= ca == cb
            ja, jb = ja + a / 40, jb + b / 40
        worst = max(worst, trace_norm(ja - jb))
    record("A10", worst <= 1e-9 and same_bytes,
           f"max Choi distance {worst:.1e} over 3 attacks x 40 seeds, ciphertext bytes equal {same_bytes}")


def test_a11_multi_user_binding():
    outs = run_trials(run_m_out_real, lambda: multiuser_wrap(1, 1), Redirector, 1, 1000, 11)
    accepted, bad = 0, 0
    for o in outs:
        for e in o.transcript:
            if e["oracle"] == "decrypt" and e["result"] != "bot":
                accepted += 1
                bad += e["ids"] != o.details["pair"]
    record("A11", bad == 0 and accepted > 0,
           f"{accepted} accepted decryptions, {bad} with wrong (S,R), over 1000 trials")


def test_a12_reproducibility(tmp_path, capsys):
    runs = [
        ["game", "--game", "out", "--adversary", "pauli", "--trials", "20", "--seed", "12"],
        ["game", "--game", "m-out", "--adversary", "redirect", "--trials", "10", "--seed", "12"],
        ["game", "--game", "qcca2-test", "--adversary", "decrypt-compare", "--trials", "20", "--seed", "12"],
        ["game", "--game", "qwcca2-fake", "--adversary", "never-replay", "--trials", "20", "--seed", "12"],
        ["attack-demo", "--seed", "12"],
    ]
    identical = True
    for i, args in enumerate(runs):
        outputs = []
        for rep in range(2):
            path = tmp_path / f"r{i}_{rep}.json"
            main(args + ["--out", str(path)])
            outputs.append(path.read_bytes())
        identical &= outputs[0] == outputs[1]
        json.loads(outputs[0])
    for rep in range(2):
        main(["keygen", "--seed", "12", "--out-dir", str(tmp_path / f"k{rep}")])
    identical &= (tmp_path / "k0" / "key.sdk").read_bytes() == (tmp_path / "k1" / "key.sdk").read_bytes()
    capsys.readouterr()
    record("A12", identical, f"{len(runs)} reports and one key file byte-identical across reruns")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
