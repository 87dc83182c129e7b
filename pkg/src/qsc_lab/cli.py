"""Command-line entry point.

Exit codes: 0 success (or all asserted bounds hold), 1 usage error,
2 cryptographic reject, 3 malformed input, 4 asserted bounds violated.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from functools import partial
from pathlib import Path

import numpy as np

from . import games
from .adversaries import ADVERSARIES
from .classical.pke import GROUPS
from .classical.signcrypt import DEFAULT_DEPTH, DEFAULT_GROUP, SCSecretKey
from .classical.wire import MalformedError
from .context import QContext
from .hybrid import HybridCiphertext, HybridQSC, MultiUserQSC, derive_pkqe, sharp
from .impossibility import attack_demo
from .io import (
    ciphertext_to_doc,
    read_ciphertext,
    read_key,
    read_state,
    require_product,
    write_key,
    write_state,
)
from .qsim import DensityState, LayoutError

EXIT_OK, EXIT_USAGE, EXIT_REJECT, EXIT_MALFORMED, EXIT_BOUNDS = 0, 1, 2, 3, 4
SEED_ENV = "QSC_LAB_SEED"


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    seed: int | None
    trials: int
    alpha: float
    m: int
    t: int
    depth: int
    group: str
    out: str | None
    jobs: int = 1

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise UsageError("--alpha must lie in (0, 1)")
        if self.trials < 1:
            raise UsageError("--trials must be positive")
        if self.m < 1 or self.t < 0 or self.jobs < 1:
            raise UsageError("--m must be >= 1, --traps >= 0, --jobs >= 1")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def require_seed(self) -> int:
        if self.seed is None:
            raise UsageError(f"this command needs --seed or {SEED_ENV}")
        return self.seed


# -- scheme factories (module level so worker processes can unpickle them) --------

def _qsc(m, t, depth, group):
    return HybridQSC.build(m, t, depth, group)


def _mu(m, t, depth, group):
    return MultiUserQSC(m, t, depth=depth, group=group)


def _skqe(m, t, depth, group):
    return sharp(HybridQSC.build(m, t, depth, group))


def _pkqe(m, t, depth, group):
    return derive_pkqe(HybridQSC.build(m, t, depth, group))


# name -> (runner, scheme factory, verdict counted by the estimate)
SINGLE_GAMES = {
    "one-time": (games.run_one_time_outsider, _qsc, "acc"),
    "out-real": (games.run_out_real, _qsc, "real"),
    "out-ideal": (games.run_out_ideal, _qsc, "real"),
    "m-out-real": (games.run_m_out_real, _mu, "real"),
    "m-out-ideal": (games.run_m_out_ideal, _mu, "real"),
    "qae-real": (games.run_qae_real, _skqe, "real"),
    "wqae-ideal": (games.run_wqae_ideal, _skqe, "real"),
    "qcca2-test": (games.run_qcca2_test, _pkqe, "win"),
    "qwcca2-fake": (games.run_qwcca2_fake, _pkqe, "cheat"),
}
PAIRED_GAMES = {
    "out": ("out-real", "out-ideal"),
    "m-out": ("m-out-real", "m-out-ideal"),
    "qae": ("qae-real", "wqae-ideal"),
}


def _emit(text: str, out: str | None) -> None:
    print(text)
    if out:
        Path(out).write_text(text + "\n")


# -- commands ------------------------------------------------------------------

def cmd_keygen(cfg: RunConfig, args) -> int:
    rng = cfg.rng()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.users:
        names = [u.strip() for u in args.users.split(",") if u.strip()]
        id_bits = max(1, (len(names) - 1).bit_length())
        mu = MultiUserQSC(cfg.m, cfg.t, id_bits=id_bits, depth=cfg.depth, group=cfg.group)
        table = []
        for name in names:
            try:
                kp = mu.keygen(rng, name)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
            _write_pair(out_dir / name, kp.sdk, args.force)
            table.append({"id": name, "index": mu.index_of(name), "vek": kp.vek.to_bytes().hex(),
                          "fingerprint": kp.vek.fingerprint()})
        _create(out_dir / "directory.json", json.dumps({"id_bits": id_bits, "users": table}, indent=1) + "\n",
                args.force)
        for row in table:
            print(f"{row['id']}\t{row['fingerprint']}")
        return EXIT_OK
    kp = HybridQSC.build(cfg.m, cfg.t, cfg.depth, cfg.group).keygen(rng, args.user_id or "")
    _write_pair(out_dir / args.name, kp.sdk, args.force)
    print(kp.vek.fingerprint())
    return EXIT_OK


def _create(path: Path, text: str, force: bool) -> None:
    try:
        with path.open("w" if force else "x") as fh:
            fh.write(text)
    except FileExistsError:
        raise UsageError(f"{path} exists; pass --force to overwrite") from None


def _write_pair(stem: Path, sdk: SCSecretKey, force: bool) -> None:
    for suffix, key in ((".sdk", sdk), (".vek", sdk.vek)):
        try:
            write_key(stem.with_suffix(suffix), key, overwrite=force)
        except FileExistsError:
            raise UsageError(f"{stem.with_suffix(suffix)} exists; pass --force to overwrite") from None


def _log2(d: int) -> int:
    m = d.bit_length() - 1
    if 2 ** m != d:
        raise MalformedError("message dimension is not a power of two")
    return m


def cmd_signcrypt(cfg: RunConfig, args) -> int:
    sdk = read_key(args.sender_sdk, "sdk")
    vek_r = read_key(args.receiver_vek, "vek")
    if sdk.n != vek_r.n:
        raise MalformedError("sender and receiver keys use different security parameters")
    state = read_state(args.input)
    if state.layout.reject_extended:
        raise MalformedError("plaintext states cannot carry the reject symbol")
    require_product(state)
    m = _log2(state.dim)
    t = sdk.n
    qsc = HybridQSC.build(m, t, sdk.signer.depth, sdk.dec.group.name)
    ctx = QContext()
    ctx.add("M", state.matrix)
    ct = qsc.sigenc(ctx, sdk, vek_r, "M", cfg.rng())
    doc = ciphertext_to_doc(ct.classical, ctx.state([ct.quantum]), state.layout, m, t)
    Path(args.out).write_text(json.dumps(doc, sort_keys=True) + "\n")
    # the signing leaf is spent: persist the advanced counter
    write_key(args.sender_sdk, sdk, overwrite=True)
    print(json.dumps({"result": "ok", "leaves_left": sdk.signer.remaining}, sort_keys=True))
    return EXIT_OK


def cmd_unsigncrypt(cfg: RunConfig, args) -> int:
    vek_s = read_key(args.sender_vek, "vek")
    sdk = read_key(args.receiver_sdk, "sdk")
    classical, quantum, msg_layout, m, t = read_ciphertext(args.input)
    qsc = HybridQSC.build(m, t, vek_s.depth, sdk.dec.group.name)
    ctx = QContext()
    ctx.add("C", quantum.matrix)
    out = qsc.verdec(ctx, vek_s, sdk, HybridCiphertext(classical, "C"), "Y")
    dm = 2 ** m
    bot = np.zeros((dm + 1, dm + 1))
    bot[dm, dm] = 1
    if ctx.measure(bot, [out], cfg.rng()) == 1:
        print(json.dumps({"result": "reject"}, sort_keys=True))
        return EXIT_REJECT
    rho = ctx.state([out]).matrix[:dm, :dm]
    rho = rho / np.trace(rho)
    write_state(args.out, DensityState(msg_layout, rho))
    print(json.dumps({"result": "ok"}, sort_keys=True))
    return EXIT_OK


def _adversary_factory(name: str):
    try:
        return ADVERSARIES[name]
    except KeyError:
        raise UsageError(f"unknown adversary {name!r}; choose from {sorted(ADVERSARIES)}") from None


def cmd_game(cfg: RunConfig, args) -> int:
    seed = cfg.require_seed()
    adv = _adversary_factory(args.adversary)
    params = (cfg.m, cfg.t, cfg.depth, cfg.group)
    n = cfg.t
    radius = games.hoeffding_radius(cfg.trials, cfg.alpha)
    extra = {"adversary": args.adversary, "alpha": cfg.alpha, "m": cfg.m, "traps": cfg.t,
             "ds_depth": cfg.depth, "group": cfg.group}
    if args.game in PAIRED_GAMES:
        if cfg.trials < 10:
            raise UsageError("paired games need at least 10 trials")
        a, b = PAIRED_GAMES[args.game]
        fa, factory, positive = SINGLE_GAMES[a]
        fb = SINGLE_GAMES[b][0]
        est = games.estimate_advantage(fa, fb, partial(factory, *params), adv, cfg.trials, seed, n=n,
                                       alpha=cfg.alpha, positive=positive, jobs=cfg.jobs)
        estimate = est.estimate
        counts = {a: est.counts_a, b: est.counts_b}
        extra.update(p_a=est.p_a, p_b=est.p_b)
        # a paired game asserts indistinguishability unless told otherwise
        hi = args.max_estimate if args.max_estimate is not None else radius
    elif args.game in SINGLE_GAMES:
        fn, factory, positive = SINGLE_GAMES[args.game]
        outcomes = games.run_trials(fn, partial(factory, *params), adv, n, cfg.trials, seed, cfg.jobs)
        counts = games.outcome_counts(outcomes)
        estimate = counts.get(positive, 0) / cfg.trials
        hi = args.max_estimate
        if args.game == "qwcca2-fake":
            pre = sum(1 for o in outcomes if o.details.get("cheat_before_coin"))
            extra["cheat_before_coin"] = pre
    else:
        choices = sorted(SINGLE_GAMES) + sorted(PAIRED_GAMES)
        raise UsageError(f"unknown game {args.game!r}; choose from {choices}")
    lo = args.min_estimate
    holds = (hi is None or estimate <= hi) and (lo is None or estimate >= lo)
    extra.update(positive=positive, bounds={"max": hi, "min": lo}, bounds_hold=holds)
    _emit(games.report(args.game, cfg.trials, estimate, radius, seed, counts, **extra), cfg.out)
    return EXIT_OK if holds else EXIT_BOUNDS


def cmd_attack_demo(cfg: RunConfig, args) -> int:
    seed = cfg.require_seed()
    result = attack_demo(np.random.default_rng(seed), commuting=args.commuting, n_keys=args.keys)
    body = result.to_dict()
    body["seed"] = seed
    _emit(json.dumps(body, sort_keys=True), cfg.out)
    print(body["verdict"], file=sys.stderr)
    return EXIT_OK if result.witnessed else EXIT_BOUNDS


# -- argument parsing ------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help=f"master seed (falls back to ${SEED_ENV})")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--alpha", type=float, default=0.01, help="confidence parameter of the Hoeffding radius")
    p.add_argument("--m", type=int, default=1, help="plaintext qubits")
    p.add_argument("--traps", type=int, default=1, help="trap qubits (also the security parameter n)")
    p.add_argument("--ds-depth", type=int, default=DEFAULT_DEPTH, help="Merkle tree depth (2^depth signatures)")
    p.add_argument("--group", choices=sorted(GROUPS), default=DEFAULT_GROUP)
    p.add_argument("--out", default=None, help="output path")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for trials")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qsc-lab", description="Quantum signcryption laboratory")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("keygen", help="generate signcryption key files")
    _common(p)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--name", default="key", help="file stem for the .sdk/.vek pair")
    p.add_argument("--user-id", default=None)
    p.add_argument("--users", default=None, help="comma-separated IDs: multi-user mode with a directory table")
    p.add_argument("--force", action="store_true", help="overwrite existing files")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("signcrypt", help="signcrypt a product-state file")
    _common(p)
    p.add_argument("--sender-sdk", required=True)
    p.add_argument("--receiver-vek", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(func=cmd_signcrypt)

    p = sub.add_parser("unsigncrypt", help="verify and decrypt a ciphertext file")
    _common(p)
    p.add_argument("--sender-vek", required=True)
    p.add_argument("--receiver-sdk", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(func=cmd_unsigncrypt)

    p = sub.add_parser("game", help="run a security experiment")
    _common(p)
    p.add_argument("--game", required=True)
    p.add_argument("--adversary", required=True)
    p.add_argument("--max-estimate", type=float, default=None, help="assert estimate <= value")
    p.add_argument("--min-estimate", type=float, default=None, help="assert estimate >= value")
    p.set_defaults(func=cmd_game)

    p = sub.add_parser("attack-demo", help="impossibility attacks on a toy signature scheme")
    _common(p)
    p.add_argument("--commuting", action="store_true", help="use a commuting measurement pair")
    p.add_argument("--keys", type=int, default=2, help="number of toy keys")
    p.set_defaults(func=cmd_attack_demo)
    return parser


def _config(args) -> RunConfig:
    seed = args.seed
    if seed is None and os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError:
            raise UsageError(f"{SEED_ENV} is not an integer") from None
    return RunConfig(args.command, seed, args.trials, args.alpha, args.m, args.traps, args.ds_depth, args.group,
                     args.out, args.jobs)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        if args.command in ("signcrypt", "unsigncrypt") and not args.out:
            raise UsageError("--out is required")
        return args.func(cfg, args)
    except UsageError as exc:
        print(f"qsc-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MalformedError, LayoutError, ValueError, OSError) as exc:
        print(f"qsc-lab: malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
