import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsc_lab.classical.wire import MalformedError
from qsc_lab.hybrid import HybridQSC
from qsc_lab.io import (
    armor,
    ciphertext_from_doc,
    ciphertext_to_doc,
    dearmor,
    product_defect,
    read_key,
    read_state,
    require_product,
    state_from_doc,
    state_to_doc,
    write_key,
    write_state,
)
from qsc_lab.qsim import DensityState, RegisterLayout, haar_state, random_mixed_state, tensor

ONE = RegisterLayout((("q0", 2),))
TWO = RegisterLayout((("q0", 2), ("q1", 2)))


class TestStateDocs:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.booleans())
    def test_roundtrip(self, seed, mixed):
        rng = np.random.default_rng(seed)
        s = random_mixed_state(TWO, rng) if mixed else haar_state(TWO, rng)
        back = state_from_doc(json.loads(json.dumps(state_to_doc(s))))
        assert back.layout == s.layout
        assert np.max(np.abs(back.matrix - s.matrix)) <= 1e-9

    def test_pure_detected(self):
        doc = state_to_doc(haar_state(ONE, np.random.default_rng(0)))
        assert doc["kind"] == "pure"
        assert len(doc["data"]) == 2

    def test_canonical_phase(self):
        v = np.array([1, 1j]) / np.sqrt(2)
        a = state_to_doc(DensityState(ONE, np.outer(v, v.conj())))
        b = state_to_doc(DensityState(ONE, np.outer(1j * v, (1j * v).conj())))
        assert a == b

    def test_file_roundtrip(self, tmp_path):
        s = random_mixed_state(ONE, np.random.default_rng(1))
        write_state(tmp_path / "s.json", s)
        assert np.allclose(read_state(tmp_path / "s.json").matrix, s.matrix, atol=1e-12)

    @pytest.mark.parametrize("doc", [
        {},
        {"format": "qsc-lab-state", "version": 2},
        {"format": "qsc-lab-state", "version": 1, "layout": [{"label": "q", "dim": 2}], "kind": "pure",
         "data": [[1, 0], [1, 0]]},
        {"format": "qsc-lab-state", "version": 1, "layout": [{"label": "q", "dim": 2}], "kind": "pure",
         "data": [[1, 0]]},
        {"format": "qsc-lab-state", "version": 1, "layout": [{"label": "q", "dim": 2}], "kind": "other",
         "data": []},
        {"format": "qsc-lab-state", "version": 1, "layout": [{"label": "q", "dim": 2}], "kind": "density",
         "data": [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]]},
        {"format": "qsc-lab-state", "version": 1, "layout": "q", "kind": "pure", "data": []},
    ])
    def test_malformed(self, doc):
        with pytest.raises(MalformedError):
            state_from_doc(doc)

    def test_not_json(self, tmp_path):
        (tmp_path / "bad.json").write_text("{nope")
        with pytest.raises(MalformedError):
            read_state(tmp_path / "bad.json")


class TestProduct:
    def test_product_passes(self):
        rng = np.random.default_rng(2)
        s = tensor(haar_state(RegisterLayout((("q0", 2),)), rng), haar_state(RegisterLayout((("q1", 2),)), rng))
        assert product_defect(s) <= 1e-12
        require_product(s)

    def test_bell_refused(self):
        v = np.array([1, 0, 0, 1]) / np.sqrt(2)
        s = DensityState(TWO, np.outer(v, v))
        assert product_defect(s) == pytest.approx(1.5)
        with pytest.raises(MalformedError):
            require_product(s)

    def test_single_register_always_product(self):
        require_product(random_mixed_state(ONE, np.random.default_rng(3)))


class TestKeys:
    def test_armor_roundtrip(self):
        assert dearmor("vek", armor("vek", b"\x00\xffabc")) == b"\x00\xffabc"

    def test_armor_kind_checked(self):
        with pytest.raises(MalformedError):
            dearmor("sdk", armor("vek", b"abc"))

    def test_armor_body_checked(self):
        text = armor("vek", b"abc").replace("616263", "zz")
        with pytest.raises(MalformedError):
            dearmor("vek", text)

    def test_key_files(self, tmp_path):
        kp = HybridQSC.build(1, 1).keygen(np.random.default_rng(4))
        write_key(tmp_path / "k.sdk", kp.sdk)
        write_key(tmp_path / "k.vek", kp.vek)
        assert read_key(tmp_path / "k.vek", "vek") == kp.vek
        assert read_key(tmp_path / "k.sdk", "sdk").to_bytes() == kp.sdk.to_bytes()
        with pytest.raises(FileExistsError):
            write_key(tmp_path / "k.vek", kp.vek)
        write_key(tmp_path / "k.vek", kp.vek, overwrite=True)


class TestCiphertextDocs:
    def test_roundtrip(self):
        q = random_mixed_state(RegisterLayout((("C", 4),)), np.random.default_rng(5))
        doc = ciphertext_to_doc(b"\x01\x02", q, ONE, 1, 1)
        classical, quantum, msg, m, t = ciphertext_from_doc(json.loads(json.dumps(doc)))
        assert classical == b"\x01\x02"
        assert (m, t, msg) == (1, 1, ONE)
        assert np.allclose(quantum.matrix, q.matrix, atol=1e-12)

    def test_layout_mismatch(self):
        q = random_mixed_state(RegisterLayout((("C", 4),)), np.random.default_rng(5))
        doc = ciphertext_to_doc(b"", q, TWO, 1, 1)
        with pytest.raises(MalformedError):
            ciphertext_from_doc(doc)

    def test_bad_hex(self):
        q = random_mixed_state(RegisterLayout((("C", 4),)), np.random.default_rng(5))
        doc = ciphertext_to_doc(b"", q, ONE, 1, 1)
        doc["classical"] = "xyz"
        with pytest.raises(MalformedError):
            ciphertext_from_doc(doc)
