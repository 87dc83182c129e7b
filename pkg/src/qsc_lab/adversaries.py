"""Built-in adversaries for the security games.

Security definitions quantify over all adversaries, so these can only
falsify: each one is a concrete attack archetype. Outsider-style games call
:meth:`Adversary.play`; the CCA-style games call :meth:`Adversary.play_cca`.
Guesses are "real"/"ideal" for outsider games and bits for CCA games.
"""
from __future__ import annotations

import numpy as np

from .games import GameView, extended_bell_projector
from .hybrid import HybridCiphertext
from .qsim import PAULI, bell_vector, qubit_operator


class Adversary:
    name = "base"
    rounds = 1

    def setup(self, view: GameView, rng: np.random.Generator) -> None:
        pass

    def choose_pair(self, view: GameView, rng: np.random.Generator) -> tuple[str, str]:
        names = list(view.public["directory"])
        return names[0], names[1]

    def prepare_plaintext(self, view: GameView, rng: np.random.Generator) -> str:
        return view.ctx.add_basis(view.ctx.fresh("Min"), 2 ** view.m, 0)

    def attack(self, view: GameView, ct: HybridCiphertext, rng: np.random.Generator) -> HybridCiphertext:
        return ct

    def guess(self, view: GameView, outputs: list[str], rng: np.random.Generator) -> str:
        return "real"

    def play(self, view: GameView, rng: np.random.Generator) -> str:
        outputs = []
        for _ in range(self.rounds):
            label = self.prepare_plaintext(view, rng)
            ct = view.encrypt(label)
            ct = self.attack(view, ct, rng)
            outputs.append(view.decrypt(ct))
        return self.guess(view, outputs, rng)

    # CCA-style games
    def prepare_challenge(self, view: GameView, rng: np.random.Generator) -> str:
        return view.ctx.add_basis(view.ctx.fresh("Mch"), 2 ** view.m, 0)

    def after_challenge(self, view: GameView, ct: HybridCiphertext, rng: np.random.Generator) -> int:
        return int(rng.integers(2))

    def play_cca(self, view: GameView, rng: np.random.Generator) -> int:
        label = self.prepare_challenge(view, rng)
        ct = view.challenge(label)
        return self.after_challenge(view, ct, rng)


class RejectWatcher(Adversary):
    """Guesses "ideal" whenever the sampled output is the reject symbol."""

    def guess(self, view, outputs, rng):
        seen = [view.observe_reject(out, rng) for out in outputs]
        return "ideal" if any(seen) else "real"


class PassiveForwarder(Adversary):
    """Forwards ciphertexts untouched and checks the returned plaintext."""

    name = "passive"

    def prepare_plaintext(self, view, rng):
        d = 2 ** view.m
        v = rng.normal(size=d) + 1j * rng.normal(size=d)
        self._psi = v / np.linalg.norm(v)
        return view.ctx.add_pure(view.ctx.fresh("Min"), self._psi)

    def guess(self, view, outputs, rng):
        out = outputs[-1]
        v = np.append(self._psi, 0)
        same = view.ctx.measure(np.outer(v, v.conj()), [out], rng) == 1
        return "real" if same else "ideal"


class PauliTamperer(RejectWatcher):
    """Applies a fixed Pauli to one ciphertext qubit (qubit 0 is most significant)."""

    name = "pauli"

    def __init__(self, pauli: str = "X", qubit: int = 0):
        self.pauli = pauli
        self.qubit = qubit

    def attack(self, view, ct, rng):
        d = view.ctx.dim(ct.quantum)
        n = int(round(np.log2(d)))
        view.ctx.apply_unitary(qubit_operator(PAULI[self.pauli], self.qubit, n), [ct.quantum])
        return ct


class ClassicalBitFlipper(RejectWatcher):
    """Flips one uniformly chosen bit of the classical part."""

    name = "bitflip"

    def attack(self, view, ct, rng):
        data = bytearray(ct.classical)
        pos = int(rng.integers(8 * len(data)))
        data[pos // 8] ^= 0x80 >> (pos % 8)
        return ct.with_classical(bytes(data))


class GarbageResender(RejectWatcher):
    """Discards the ciphertext and sends random bytes plus a maximally mixed register."""

    name = "garbage"

    def attack(self, view, ct, rng):
        d = view.ctx.dim(ct.quantum)
        view.ctx.discard(ct.quantum)
        q = view.ctx.add(view.ctx.fresh("G"), np.eye(d) / d)
        return HybridCiphertext(rng.bytes(len(ct.classical)), q)


class EntangledProbe(Adversary):
    """Encrypts half of a Bell pair and Bell-tests the output against the kept half."""

    name = "entangled"

    def __init__(self, pauli: str | None = None):
        self.pauli = pauli

    def prepare_plaintext(self, view, rng):
        d = 2 ** view.m
        m, b = view.ctx.fresh("Min"), view.ctx.fresh("B")
        view.ctx.add_joint([m, b], [d, d], bell_vector(d))
        self._side = b
        return m

    def attack(self, view, ct, rng):
        if self.pauli is None:
            return ct
        n = int(round(np.log2(view.ctx.dim(ct.quantum))))
        view.ctx.apply_unitary(qubit_operator(PAULI[self.pauli], 0, n), [ct.quantum])
        return ct

    def guess(self, view, outputs, rng):
        d = 2 ** view.m
        ok = view.ctx.measure(extended_bell_projector(d), [outputs[-1], self._side], rng) == 1
        return "real" if ok else "ideal"


class Redirector(Adversary):
    """Multi-user identity attacks using a third party's secret key.

    Each round picks one of: honest replay, a ciphertext signcrypted by the
    third party with the pair's IDs attached by hand, or a plain third-party
    signcryption to the receiver.
    """

    name = "redirect"
    rounds = 2

    def choose_pair(self, view, rng):
        names = list(view.public["directory"])
        picks = rng.choice(len(names), size=2, replace=False)
        return names[int(picks[0])], names[int(picks[1])]

    def play(self, view, rng):
        mu = view.scheme
        sender, receiver = view.public["pair"]
        third, sdk_t = sorted(view.public["others_sdk"].items())[0]
        for _ in range(self.rounds):
            strategy = int(rng.integers(3))
            label = self.prepare_plaintext(view, rng)
            if strategy == 0:
                ct = view.encrypt(label)
            elif strategy == 1:
                ctx = view.ctx
                ids = ctx.add_basis(ctx.fresh("ID"), mu.id_dim, mu.id_code(sender, receiver))
                plain = ctx.merge([label, ids], ctx.fresh("MI"))
                ct = mu.inner.sigenc(ctx, sdk_t, mu.lookup(receiver), plain, rng)
            else:
                ct = mu.sigenc(view.ctx, sdk_t, receiver, label, rng)
            out = view.decrypt(ct)
            view.transcript[-1]["strategy"] = ["replay", "forge-ids", "third-party"][strategy]
            view.ctx.discard(out)
        return "real"


class ThirdPartyForger(Redirector):
    """Only the hand-attached-ID forgery from a third party's key."""

    name = "third-party-forge"
    rounds = 1

    def play(self, view, rng):
        mu = view.scheme
        sender, receiver = view.public["pair"]
        third, sdk_t = sorted(view.public["others_sdk"].items())[0]
        ctx = view.ctx
        label = self.prepare_plaintext(view, rng)
        ids = ctx.add_basis(ctx.fresh("ID"), mu.id_dim, mu.id_code(sender, receiver))
        plain = ctx.merge([label, ids], ctx.fresh("MI"))
        ct = mu.inner.sigenc(ctx, sdk_t, mu.lookup(receiver), plain, rng)
        out = view.decrypt(ct)
        return "ideal" if view.observe_reject(out, rng) else "real"


class Replayer(Adversary):
    """Encrypts and decrypts the same ciphertext; keeps the returned register."""

    name = "replay"

    def play(self, view, rng):
        label = self.prepare_plaintext(view, rng)
        ct = view.encrypt(label)
        self.output = view.decrypt(ct)
        return "real"


class ChallengeReplayer(Adversary):
    """Submits the challenge ciphertext straight to the decryption oracle."""

    name = "challenge-replay"

    def after_challenge(self, view, ct, rng):
        view.decrypt(ct)
        return 0


class NeverReplayer(Adversary):
    """Decrypts only a fresh honest ciphertext of its own, never the challenge."""

    name = "never-replay"

    def after_challenge(self, view, ct, rng):
        ctx = view.ctx
        own = ctx.add_basis(ctx.fresh("Own"), 2 ** view.m, 0)
        mine = view.scheme.encrypt(ctx, view.public["ek"], own, rng)
        self.output = view.decrypt(mine)
        return int(rng.integers(2))


class DecryptAndCompare(Adversary):
    """Sends |0...0>, decrypts the challenge, and guesses b = 0 iff it still reads all zeros."""

    name = "decrypt-compare"

    def after_challenge(self, view, ct, rng):
        out = view.decrypt(ct)
        d = view.ctx.dim(out)
        p = np.zeros((d, d))
        p[0, 0] = 1
        return 0 if view.ctx.measure(p, [out], rng) == 1 else 1


class CoinFlipper(Adversary):
    name = "coin"


ADVERSARIES = {
    cls.name: cls
    for cls in (PassiveForwarder, PauliTamperer, ClassicalBitFlipper, GarbageResender, EntangledProbe,
                Redirector, ThirdPartyForger, Replayer, ChallengeReplayer, NeverReplayer, DecryptAndCompare,
                CoinFlipper)
}
