import json

import numpy as np
import pytest

from qsc_lab.cli import EXIT_BOUNDS, EXIT_MALFORMED, EXIT_OK, EXIT_REJECT, EXIT_USAGE, main
from qsc_lab.io import read_key, read_state, write_state
from qsc_lab.qsim import DensityState, RegisterLayout

PLUS = np.array([1, 1]) / np.sqrt(2)


def _keys(tmp_path, seed=1):
    assert main(["keygen", "--seed", str(seed), "--out-dir", str(tmp_path), "--name", "alice"]) == EXIT_OK
    assert main(["keygen", "--seed", str(seed + 1), "--out-dir", str(tmp_path), "--name", "bob"]) == EXIT_OK
    return tmp_path / "alice", tmp_path / "bob"


def _plus_file(path):
    write_state(path, DensityState(RegisterLayout((("q0", 2),)), np.outer(PLUS, PLUS)))
    return path


def _signcrypt(tmp_path, a, b, seed=3):
    return main(["signcrypt", "--seed", str(seed), "--sender-sdk", f"{a}.sdk", "--receiver-vek", f"{b}.vek",
                 "--in", str(_plus_file(tmp_path / "plus.json")), "--out", str(tmp_path / "ct.json")])


def _unsigncrypt(tmp_path, a, b, seed=4):
    return main(["unsigncrypt", "--seed", str(seed), "--sender-vek", f"{a}.vek", "--receiver-sdk", f"{b}.sdk",
                 "--in", str(tmp_path / "ct.json"), "--out", str(tmp_path / "out.json")])


class TestKeygen:
    def test_distinct_seeds_distinct_fingerprints(self, tmp_path, capsys):
        main(["keygen", "--seed", "1", "--out-dir", str(tmp_path), "--name", "a"])
        main(["keygen", "--seed", "2", "--out-dir", str(tmp_path), "--name", "b"])
        lines = capsys.readouterr().out.split()
        assert len(lines) == 2 and lines[0] != lines[1]

    def test_vek_parses_standalone(self, tmp_path):
        main(["keygen", "--seed", "1", "--out-dir", str(tmp_path), "--name", "a"])
        assert read_key(tmp_path / "a.vek", "vek").n == 1

    def test_collision(self, tmp_path):
        assert main(["keygen", "--seed", "1", "--out-dir", str(tmp_path)]) == EXIT_OK
        assert main(["keygen", "--seed", "1", "--out-dir", str(tmp_path)]) == EXIT_USAGE
        assert main(["keygen", "--seed", "1", "--out-dir", str(tmp_path), "--force"]) == EXIT_OK

    def test_multi_user_directory(self, tmp_path):
        assert main(["keygen", "--seed", "5", "--out-dir", str(tmp_path), "--users", "alice,bob,carol"]) == EXIT_OK
        table = json.loads((tmp_path / "directory.json").read_text())
        assert [u["id"] for u in table["users"]] == ["alice", "bob", "carol"]
        for u in table["users"]:
            assert read_key(tmp_path / f"{u['id']}.vek", "vek").to_bytes().hex() == u["vek"]

    def test_same_seed_same_files(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            main(["keygen", "--seed", "9", "--out-dir", str(d)])
        assert (a / "key.sdk").read_bytes() == (b / "key.sdk").read_bytes()


class TestSigncryptFiles:
    def test_roundtrip(self, tmp_path):
        a, b = _keys(tmp_path)
        assert _signcrypt(tmp_path, a, b) == EXIT_OK
        assert _unsigncrypt(tmp_path, a, b) == EXIT_OK
        out = read_state(tmp_path / "out.json")
        assert np.max(np.abs(out.matrix - np.outer(PLUS, PLUS))) <= 1e-9

    def test_flipped_classical_byte_rejects(self, tmp_path, capsys):
        a, b = _keys(tmp_path)
        _signcrypt(tmp_path, a, b)
        doc = json.loads((tmp_path / "ct.json").read_text())
        raw = bytearray.fromhex(doc["classical"])
        raw[len(raw) // 2] ^= 0x01
        doc["classical"] = raw.hex()
        (tmp_path / "ct.json").write_text(json.dumps(doc))
        capsys.readouterr()
        assert _unsigncrypt(tmp_path, a, b) == EXIT_REJECT
        assert json.loads(capsys.readouterr().out) == {"result": "reject"}

    def test_wrong_sender_rejects(self, tmp_path):
        a, b = _keys(tmp_path)
        _signcrypt(tmp_path, a, b)
        assert _unsigncrypt(tmp_path, b, b) == EXIT_REJECT

    def test_entangled_input_refused(self, tmp_path):
        a, b = _keys(tmp_path)
        v = np.array([1, 0, 0, 1]) / np.sqrt(2)
        write_state(tmp_path / "bell.json", DensityState(RegisterLayout((("q0", 2), ("q1", 2))), np.outer(v, v)))
        code = main(["signcrypt", "--seed", "1", "--sender-sdk", f"{a}.sdk", "--receiver-vek", f"{b}.vek",
                     "--in", str(tmp_path / "bell.json"), "--out", str(tmp_path / "ct.json")])
        assert code == EXIT_MALFORMED
        assert not (tmp_path / "ct.json").exists()

    def test_garbage_ciphertext_malformed(self, tmp_path):
        a, b = _keys(tmp_path)
        (tmp_path / "ct.json").write_text("not json")
        assert _unsigncrypt(tmp_path, a, b) == EXIT_MALFORMED

    def test_leaf_counter_persisted(self, tmp_path):
        a, b = _keys(tmp_path)
        before = read_key(f"{a}.sdk", "sdk").signer.remaining
        _signcrypt(tmp_path, a, b)
        assert read_key(f"{a}.sdk", "sdk").signer.remaining == before - 1

    def test_out_required(self, tmp_path):
        a, b = _keys(tmp_path)
        code = main(["signcrypt", "--sender-sdk", f"{a}.sdk", "--receiver-vek", f"{b}.vek",
                     "--in", str(_plus_file(tmp_path / "p.json"))])
        assert code == EXIT_USAGE


class TestGame:
    def _run(self, capsys, *args):
        code = main(["game", *args])
        return code, json.loads(capsys.readouterr().out)

    def test_passive_pair_within_radius(self, capsys):
        code, rep = self._run(capsys, "--game", "out", "--adversary", "passive", "--trials", "200", "--seed", "1")
        assert code == EXIT_OK
        assert rep["estimate"] <= rep["radius"]
        assert {"game", "trials", "estimate", "radius", "seed", "per_outcome_counts"} <= set(rep)

    def test_challenge_replay_cheats(self, capsys):
        code, rep = self._run(capsys, "--game", "qwcca2-fake", "--adversary", "challenge-replay", "--trials", "100",
                              "--seed", "2", "--min-estimate", "0.999")
        assert code == EXIT_OK
        assert rep["estimate"] >= 0.999
        assert rep["cheat_before_coin"] == 100

    def test_bounds_violated(self, capsys):
        code, rep = self._run(capsys, "--game", "qwcca2-fake", "--adversary", "challenge-replay", "--trials", "20",
                              "--seed", "2", "--max-estimate", "0.5")
        assert code == EXIT_BOUNDS
        assert rep["bounds_hold"] is False

    def test_byte_identical_reruns(self, capsys, tmp_path):
        args = ["game", "--game", "out-ideal", "--adversary", "pauli", "--trials", "30", "--seed", "7"]
        main(args + ["--out", str(tmp_path / "a.json")])
        main(args + ["--out", str(tmp_path / "b.json")])
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_seed_from_environment(self, capsys, monkeypatch):
        monkeypatch.setenv("QSC_LAB_SEED", "11")
        code, rep = self._run(capsys, "--game", "out-real", "--adversary", "passive", "--trials", "10")
        assert code == EXIT_OK
        assert rep["seed"] == 11

    @pytest.mark.parametrize("args", [
        ["--game", "nope", "--adversary", "passive", "--seed", "1"],
        ["--game", "out", "--adversary", "nope", "--seed", "1"],
        ["--game", "out", "--adversary", "passive"],
        ["--game", "out", "--adversary", "passive", "--seed", "1", "--alpha", "1.5"],
        ["--game", "out", "--adversary", "passive", "--seed", "1", "--trials", "5"],
    ])
    def test_usage_errors(self, args, monkeypatch):
        monkeypatch.delenv("QSC_LAB_SEED", raising=False)
        assert main(["game", *args]) == EXIT_USAGE

    def test_argparse_error_exit_code(self):
        with pytest.raises(SystemExit) as info:
            main(["game", "--bogus"])
        assert info.value.code == EXIT_USAGE


class TestAttackDemo:
    def test_default(self, capsys):
        assert main(["attack-demo", "--seed", "0"]) == EXIT_OK
        captured = capsys.readouterr()
        rep = json.loads(captured.out)
        assert rep["advantage"] >= 0.99
        assert rep["verdict"] == "theorem witnessed: yes"
        assert "theorem witnessed: yes" in captured.err
        assert {"swap_attack", "noncommuting_attack", "seed"} <= set(rep)
        swap = rep["swap_attack"]
        assert {"accept_prob_before", "accept_prob_after", "outcome_prob_before", "outcome_prob_after",
                "advantage", "epsilon", "fit_p", "keys_used"} <= set(swap)

    def test_commuting(self, capsys):
        main(["attack-demo", "--seed", "0", "--commuting"])
        assert json.loads(capsys.readouterr().out)["advantage"] <= 0.01

    def test_reproducible(self, capsys):
        main(["attack-demo", "--seed", "4"])
        first = capsys.readouterr().out
        main(["attack-demo", "--seed", "4"])
        assert capsys.readouterr().out == first
