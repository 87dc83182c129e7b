"""Seedable security experiments with pluggable adversaries.

Each run owns one :class:`QContext`; the adversary acts through a
:class:`GameView` whose oracles log every call to the transcript. Bell tests
use the projector onto the maximally entangled state, zero-extended on the
reject vector; "pass" means the projector outcome.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .auth import clifford_effective_choi, dns_fit, DnsFit
from .context import QContext
from .hybrid import HybridCiphertext, HybridQSC, MultiUserQSC, reject_into
from .qsim import (
    KrausChannel,
    RegisterLayout,
    bell_vector,
    kraus_from_choi,
)

DEFAULT_ORACLE_BUDGET = 8


class OracleBudgetExceeded(RuntimeError):
    pass


class _Abort(Exception):
    """Unwinds the adversary when the challenger aborts with a verdict."""

    def __init__(self, verdict: str):
        super().__init__(verdict)
        self.verdict = verdict


@dataclass
class GameOutcome:
    game: str
    verdict: str
    transcript: list[dict]
    seed: int | None = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"game": self.game, "verdict": self.verdict, "transcript": self.transcript,
                           "seed": self.seed, "details": self.details}, sort_keys=True)


@dataclass(frozen=True)
class AdvantageEstimate:
    estimate: float
    radius: float
    trials: int
    alpha: float
    p_a: float
    p_b: float
    counts_a: dict
    counts_b: dict

    @property
    def significant(self) -> bool:
        return self.estimate > self.radius


def hoeffding_radius(trials: int, alpha: float) -> float:
    if trials < 1 or not 0 < alpha < 1:
        raise ValueError("need trials >= 1 and alpha in (0, 1)")
    return math.sqrt(math.log(2 / alpha) / (2 * trials))


# -- shared helpers ----------------------------------------------------------------

def _digest(b: bytes) -> str:
    return hashlib.sha256(b).hexdigest()[:16]


def reject_weight(ctx: QContext, label: str) -> float:
    d = ctx.dim(label)
    p = np.zeros((d, d))
    p[d - 1, d - 1] = 1
    return ctx.probability(p, [label])


def extended_bell_projector(d: int) -> np.ndarray:
    """Bell projector on (d + 1) x d with the reject row of the first factor zeroed."""
    v = np.zeros((d + 1) * d, dtype=complex)
    for i in range(d):
        v[i * d + i] = 1 / math.sqrt(d)
    return np.outer(v, v.conj())


def embed_into_extended(ctx: QContext, label: str, out_label: str) -> str:
    d = ctx.dim(label)
    iso = np.zeros((d + 1, d), dtype=complex)
    iso[:d, :d] = np.eye(d)
    return ctx.apply_kraus([iso], [label], [(out_label, d + 1)], reject_extended=[out_label])[0]


@dataclass
class PairStore:
    """Bell halves kept by the ideal-world challenger, in insertion order."""

    pairs: list[tuple[str, str]] = field(default_factory=list)
    stored_total: int = 0

    def add(self, half: str, plaintext: str) -> None:
        self.pairs.append((half, plaintext))
        self.stored_total += 1

    def __len__(self) -> int:
        return len(self.pairs)


class GameView:
    """What the adversary sees: the shared context, public data, and oracles."""

    def __init__(self, ctx: QContext, m: int, public: dict, budget: int):
        self.ctx = ctx
        self.m = m
        self.public = public
        self.budget = budget
        self.transcript: list[dict] = []
        self._enc: Callable | None = None
        self._dec: Callable | None = None
        self._challenge: Callable | None = None
        self.scheme: Any = None

    def _log(self, entry: dict) -> None:
        if sum(1 for e in self.transcript if e["oracle"] != "challenge") >= self.budget \
                and entry["oracle"] != "challenge":
            raise OracleBudgetExceeded(f"oracle budget {self.budget} exhausted")
        entry["index"] = len(self.transcript)
        self.transcript.append(entry)

    def encrypt(self, label: str) -> HybridCiphertext:
        if self._enc is None:
            raise RuntimeError("no encryption oracle in this game")
        self._log({"oracle": "encrypt", "register": label})
        ct = self._enc(label)
        self.transcript[-1]["classical"] = _digest(ct.classical)
        return ct

    def decrypt(self, ct: HybridCiphertext) -> str:
        if self._dec is None:
            raise RuntimeError("no decryption oracle in this game")
        self._log({"oracle": "decrypt", "classical": _digest(ct.classical)})
        out, info = self._dec(ct)
        self.transcript[-1].update(info)
        return out

    def challenge(self, label: str) -> HybridCiphertext:
        if self._challenge is None:
            raise RuntimeError("no challenge in this game")
        self._log({"oracle": "challenge", "register": label})
        ct = self._challenge(label)
        self.transcript[-1]["classical"] = _digest(ct.classical)
        return ct

    def observe_reject(self, label: str, rng: np.random.Generator) -> bool:
        """Measure {reject, not reject} on an output register (collapsing) and log it."""
        d = self.ctx.dim(label)
        p = np.zeros((d, d))
        p[d - 1, d - 1] = 1
        bot = self.ctx.measure(p, [label], rng) == 1
        for entry in reversed(self.transcript):
            if entry["oracle"] in ("decrypt", "unsigncrypt") and "observed_reject" not in entry:
                entry["observed_reject"] = bot
                break
        return bot


def _bell_check(ctx: QContext, out: str, store: PairStore, m: int, rng: np.random.Generator):
    """Ideal-world decryption tail: test the output against stored halves."""
    d = 2 ** m
    proj = extended_bell_projector(d)
    for i, (half, plain) in enumerate(store.pairs):
        if ctx.measure(proj, [out, half], rng) == 1:
            ctx.discard(out, half)
            del store.pairs[i]
            res = embed_into_extended(ctx, plain, ctx.fresh("Mo"))
            return res, {"result": "stored", "matched": i}
    return reject_into(ctx, ctx.fresh("Mo"), m, out), {"result": "bot"}


def _ideal_encrypt(ctx: QContext, store: PairStore, m: int, label: str, seal: Callable[[str], HybridCiphertext]):
    d = 2 ** m
    if ctx.dim(label) != d:
        raise ValueError(f"plaintext register must be {m} qubits")
    mp, mpp = ctx.fresh("Mp"), ctx.fresh("Mpp")
    ctx.add_joint([mp, mpp], [d, d], bell_vector(d))
    store.add(mpp, label)
    return seal(mp)


# -- one-time outsider ----------------------------------------------------------------

def run_one_time_outsider(qsc: HybridQSC, adv, n: int, rng: np.random.Generator,
                          seed: int | None = None) -> GameOutcome:
    """Setup, signcrypt the adversary's register, attack, unsigncrypt.

    The verdict is a sampled {reject, accept} measurement of the output.
    """
    ctx = QContext()
    s = qsc.keygen(rng)
    r = qsc.keygen(rng)
    view = GameView(ctx, qsc.m, {"vek_S": s.vek, "vek_R": r.vek, "n": n}, budget=1)
    adv.setup(view, rng)
    label = adv.prepare_plaintext(view, rng)
    ct = qsc.sigenc(ctx, s.sdk, r.vek, label, rng)
    view.transcript.append({"oracle": "signcrypt", "index": 0, "classical": _digest(ct.classical)})
    ct = adv.attack(view, ct, rng)
    out = qsc.verdec(ctx, s.vek, r.sdk, ct, ctx.fresh("Y"))
    weight = reject_weight(ctx, out)
    view.transcript.append({"oracle": "unsigncrypt", "index": 1, "reject_weight": round(weight, 12)})
    final = {lab: ctx.state([lab]) for lab in ctx.labels}
    bot = view.observe_reject(out, rng)
    return GameOutcome("one-time-outsider", "rej" if bot else "acc", view.transcript, seed,
                       {"reject_weight": round(weight, 12), "output": out,
                        "_states": final})


def effective_map_probe(m: int, t: int, attack: KrausChannel, side_dim: int = 1) -> DnsFit:
    """Key-averaged effective map of a quantum-part attack with the classical part held fixed."""
    j = clifford_effective_choi(m, t, attack, side_dim)
    dm = 2 ** m
    if side_dim > 1:
        in_l = RegisterLayout((("M", dm), ("B", side_dim)))
        out_l = RegisterLayout((("M'", dm + 1), ("B", side_dim)))
    else:
        in_l = RegisterLayout((("M", dm),))
        out_l = RegisterLayout((("M", dm),), reject_extended=True)
    return dns_fit(kraus_from_choi(j, in_l, out_l))


# -- many-time outsider -------------------------------------------------------------

def _outsider_setup(qsc: HybridQSC, n: int, rng, budget: int):
    ctx = QContext()
    s = qsc.keygen(rng)
    r = qsc.keygen(rng)
    view = GameView(ctx, qsc.m, {"vek_S": s.vek, "vek_R": r.vek, "n": n}, budget)
    view.scheme = qsc
    return ctx, s, r, view


def run_out_real(qsc: HybridQSC, adv, n: int, rng: np.random.Generator, seed: int | None = None,
                 budget: int = DEFAULT_ORACLE_BUDGET) -> GameOutcome:
    ctx, s, r, view = _outsider_setup(qsc, n, rng, budget)

    def dec(ct):
        out = qsc.verdec(ctx, s.vek, r.sdk, ct, ctx.fresh("Mo"))
        return out, {"result": "plain", "reject_weight": round(reject_weight(ctx, out), 12)}

    view._enc = lambda label: qsc.sigenc(ctx, s.sdk, r.vek, label, rng)
    view._dec = dec
    guess = adv.play(view, rng)
    return GameOutcome("out-real", guess, view.transcript, seed, {"oracle_budget": budget})


def run_out_ideal(qsc: HybridQSC, adv, n: int, rng: np.random.Generator, seed: int | None = None,
                  budget: int = DEFAULT_ORACLE_BUDGET) -> GameOutcome:
    ctx, s, r, view = _outsider_setup(qsc, n, rng, budget)
    store = PairStore()

    def dec(ct):
        out = qsc.verdec(ctx, s.vek, r.sdk, ct, ctx.fresh("Mp"))
        return _bell_check(ctx, out, store, qsc.m, rng)

    view._enc = lambda label: _ideal_encrypt(ctx, store, qsc.m, label,
                                             lambda mp: qsc.sigenc(ctx, s.sdk, r.vek, mp, rng))
    view._dec = dec
    guess = adv.play(view, rng)
    return GameOutcome("out-ideal", guess, view.transcript, seed,
                       {"oracle_budget": budget, "stored_total": store.stored_total})


# -- multi-user outsider --------------------------------------------------------------

def _mu_setup(template: MultiUserQSC, adv, n: int, rng, budget: int, users: tuple[str, ...]):
    mu = dataclasses.replace(template, directory={})
    keys = {u: mu.keygen(rng, u) for u in users}
    ctx = QContext()
    view = GameView(ctx, mu.m, {"directory": dict(mu.directory), "n": n}, budget)
    view.scheme = mu
    adv.setup(view, rng)
    sender, receiver = adv.choose_pair(view, rng)
    if sender == receiver:
        raise ValueError("sender and receiver must differ")
    mu.lookup(sender), mu.lookup(receiver)
    view.public["others_sdk"] = {u: k.sdk for u, k in keys.items() if u not in (sender, receiver)}
    view.public["pair"] = (sender, receiver)
    return mu, keys, ctx, view, sender, receiver


def _mu_decrypt(mu: MultiUserQSC, ctx, keys, sender, receiver, ct, rng):
    s_id, r_id, out = mu.verdec(ctx, keys[receiver].sdk, sender, ct, ctx.fresh("Mp"), rng)
    bot = reject_weight(ctx, out) > 1 - 1e-12
    return s_id, r_id, out, bot


def run_m_out_real(template: MultiUserQSC, adv, n: int, rng: np.random.Generator, seed: int | None = None,
                   budget: int = DEFAULT_ORACLE_BUDGET,
                   users: tuple[str, ...] = ("alice", "bob", "carol", "dave")) -> GameOutcome:
    mu, keys, ctx, view, sender, receiver = _mu_setup(template, adv, n, rng, budget, users)

    def dec(ct):
        s_id, r_id, out, bot = _mu_decrypt(mu, ctx, keys, sender, receiver, ct, rng)
        return out, {"result": "bot" if bot else "plain", "ids": [s_id, r_id]}

    view._enc = lambda label: mu.sigenc(ctx, keys[sender].sdk, receiver, label, rng)
    view._dec = dec
    guess = adv.play(view, rng)
    return GameOutcome("m-out-real", guess, view.transcript, seed,
                       {"oracle_budget": budget, "pair": [sender, receiver]})


def run_m_out_ideal(template: MultiUserQSC, adv, n: int, rng: np.random.Generator, seed: int | None = None,
                    budget: int = DEFAULT_ORACLE_BUDGET,
                    users: tuple[str, ...] = ("alice", "bob", "carol", "dave")) -> GameOutcome:
    mu, keys, ctx, view, sender, receiver = _mu_setup(template, adv, n, rng, budget, users)
    store = PairStore()

    def dec(ct):
        s_id, r_id, out, bot = _mu_decrypt(mu, ctx, keys, sender, receiver, ct, rng)
        res, info = _bell_check(ctx, out, store, mu.m, rng)
        info["ids"] = [s_id, r_id] if info["result"] == "stored" else [None, None]
        return res, info

    view._enc = lambda label: _ideal_encrypt(ctx, store, mu.m, label,
                                             lambda mp: mu.sigenc(ctx, keys[sender].sdk, receiver, mp, rng))
    view._dec = dec
    guess = adv.play(view, rng)
    return GameOutcome("m-out-ideal", guess, view.transcript, seed,
                       {"oracle_budget": budget, "pair": [sender, receiver], "stored_total": store.stored_total})


# -- symmetric-key authenticated encryption ---------------------------------------------

def run_qae_real(skqe, adv, n: int, rng: np.random.Generator, seed: int | None = None,
                 budget: int = DEFAULT_ORACLE_BUDGET) -> GameOutcome:
    ctx = QContext()
    k, _ = skqe.keygen(rng)
    view = GameView(ctx, skqe.m, {"n": n}, budget)

    def dec(ct):
        out = skqe.decrypt(ctx, k, ct, ctx.fresh("Mo"))
        return out, {"result": "plain", "reject_weight": round(reject_weight(ctx, out), 12)}

    view._enc = lambda label: skqe.encrypt(ctx, k, label, rng)
    view._dec = dec
    guess = adv.play(view, rng)
    return GameOutcome("qae-real", guess, view.transcript, seed, {"oracle_budget": budget})


def run_wqae_ideal(skqe, adv, n: int, rng: np.random.Generator, seed: int | None = None,
                   budget: int = DEFAULT_ORACLE_BUDGET) -> GameOutcome:
    ctx = QContext()
    k, _ = skqe.keygen(rng)
    view = GameView(ctx, skqe.m, {"n": n}, budget)
    store = PairStore()

    def dec(ct):
        out = skqe.decrypt(ctx, k, ct, ctx.fresh("Mp"))
        return _bell_check(ctx, out, store, skqe.m, rng)

    view._enc = lambda label: _ideal_encrypt(ctx, store, skqe.m, label,
                                             lambda mp: skqe.encrypt(ctx, k, mp, rng))
    view._dec = dec
    guess = adv.play(view, rng)
    return GameOutcome("wqae-ideal", guess, view.transcript, seed,
                       {"oracle_budget": budget, "stored_total": store.stored_total})


# -- public-key CCA2-style games -----------------------------------------------------------

def _cca_setup(pkqe, n: int, rng, budget: int):
    ctx = QContext()
    ek, dk = pkqe.keygen(rng)
    view = GameView(ctx, pkqe.m, {"ek": ek, "n": n}, budget)
    view.scheme = pkqe

    def plain_dec(ct):
        out = pkqe.decrypt(ctx, dk, ct, ctx.fresh("Mo"))
        return out, {"result": "plain", "reject_weight": round(reject_weight(ctx, out), 12)}

    view._dec = plain_dec
    return ctx, ek, dk, view


def run_qcca2_test(pkqe, adv, n: int, rng: np.random.Generator, seed: int | None = None,
                   budget: int = DEFAULT_ORACLE_BUDGET) -> GameOutcome:
    """Challenge is Enc(M) for b = 0 or Enc(maximally mixed) for b = 1; win iff the guess is b."""
    ctx, ek, dk, view = _cca_setup(pkqe, n, rng, budget)
    b = int(rng.integers(2))
    d = 2 ** pkqe.m

    def challenge(label):
        if ctx.dim(label) != d:
            raise ValueError(f"challenge register must be {pkqe.m} qubits")
        if b == 1:
            ctx.discard(label)
            label = ctx.add(ctx.fresh("Tau"), np.eye(d) / d)
        return pkqe.encrypt(ctx, ek, label, rng)

    view._challenge = challenge
    guess = int(adv.play_cca(view, rng))
    return GameOutcome("qcca2-test", "win" if guess == b else "rej", view.transcript, seed,
                       {"b": b, "guess": guess, "oracle_budget": budget})


def run_qwcca2_fake(pkqe, adv, n: int, rng: np.random.Generator, seed: int | None = None,
                    budget: int = DEFAULT_ORACLE_BUDGET) -> GameOutcome:
    """Challenge replaced by a Bell half; a Bell pass on any decryption aborts with cheat."""
    ctx, ek, dk, view = _cca_setup(pkqe, n, rng, budget)
    d = 2 ** pkqe.m
    stored: dict[str, str] = {}

    def challenge(label):
        if ctx.dim(label) != d:
            raise ValueError(f"challenge register must be {pkqe.m} qubits")
        ctx.discard(label)
        mp, mpp = ctx.fresh("Mp"), ctx.fresh("Mpp")
        ctx.add_joint([mp, mpp], [d, d], bell_vector(d))
        stored["half"] = mpp
        ct = pkqe.encrypt(ctx, ek, mp, rng)

        def fake_dec(ct2):
            out = pkqe.decrypt(ctx, dk, ct2, ctx.fresh("Mo"))
            if ctx.measure(extended_bell_projector(d), [out, stored["half"]], rng) == 1:
                view.transcript[-1].update({"result": "cheat"})
                raise _Abort("cheat")
            return out, {"result": "plain"}

        view._dec = fake_dec
        return ct

    view._challenge = challenge
    try:
        adv.play_cca(view, rng)
    except _Abort as stop:
        return GameOutcome("qwcca2-fake", stop.verdict, view.transcript, seed,
                           {"cheat_before_coin": True, "oracle_budget": budget})
    b = int(rng.integers(2))
    return GameOutcome("qwcca2-fake", "cheat" if b == 1 else "rej", view.transcript, seed,
                       {"cheat_before_coin": False, "coin": b, "oracle_budget": budget})


# -- trial runner and advantage ----------------------------------------------------------

GameFn = Callable[..., GameOutcome]


def trial_seeds(master_seed: int, trials: int) -> list[int]:
    """Per-trial 64-bit seeds derived from the master seed."""
    children = np.random.SeedSequence(master_seed).spawn(trials)
    return [int(c.generate_state(2, dtype=np.uint32).view(np.uint64)[0]) for c in children]


def _one(args):
    game, scheme_factory, adv_factory, n, seed, kwargs = args
    rng = np.random.default_rng(seed)
    outcome = game(scheme_factory(), adv_factory(), n, rng, seed=seed, **kwargs)
    outcome.details.pop("_states", None)
    return outcome


def run_trials(game: GameFn, scheme_factory: Callable, adv_factory: Callable, n: int, trials: int,
               master_seed: int, jobs: int = 1, **kwargs) -> list[GameOutcome]:
    """Independent trials with derived seeds; results ordered by trial index.

    With ``jobs > 1`` the factories and game must be picklable (module-level).
    """
    tasks = [(game, scheme_factory, adv_factory, n, s, kwargs) for s in trial_seeds(master_seed, trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_one, tasks, chunksize=max(1, trials // (4 * jobs))))
    return [_one(t) for t in tasks]


def outcome_counts(outcomes: list[GameOutcome]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for o in outcomes:
        counts[o.verdict] = counts.get(o.verdict, 0) + 1
    return dict(sorted(counts.items()))


def estimate_advantage(game_a: GameFn, game_b: GameFn, scheme_factory: Callable, adv_factory: Callable,
                       trials: int, seed: int, n: int = 1, alpha: float = 0.01, positive: str = "real",
                       jobs: int = 1, **kwargs) -> AdvantageEstimate:
    """|Pr[game_a -> positive] - Pr[game_b -> positive]| with a Hoeffding radius.

    Both games use the same per-trial seed list.
    """
    if trials < 10:
        raise ValueError("need at least 10 trials")
    a = run_trials(game_a, scheme_factory, adv_factory, n, trials, seed, jobs, **kwargs)
    b = run_trials(game_b, scheme_factory, adv_factory, n, trials, seed, jobs, **kwargs)
    ca, cb = outcome_counts(a), outcome_counts(b)
    pa, pb = ca.get(positive, 0) / trials, cb.get(positive, 0) / trials
    return AdvantageEstimate(abs(pa - pb), hoeffding_radius(trials, alpha), trials, alpha, pa, pb, ca, cb)


def report(game: str, trials: int, estimate: float, radius: float, seed: int, counts: dict, **extra) -> str:
    body = {"game": game, "trials": trials, "estimate": estimate, "radius": radius, "seed": seed,
            "per_outcome_counts": counts}
    body.update(extra)
    return json.dumps(body, sort_keys=True)
