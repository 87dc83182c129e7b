import hashlib
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsc_lab.classical.hashing import DEFAULT_HASH, HashConfig
from qsc_lab.classical.hashsig import (
    LeafExhaustedError,
    OTS_BITS,
    ds_keygen,
    ds_sign,
    ds_verify,
    leaf_hash,
    node_hash,
    ots_from_seed,
    signature_length,
)
from qsc_lab.classical.pke import GROUPS, get_group, pke_dec, pke_enc, pke_keygen
from qsc_lab.classical.signcrypt import (
    SCPublicKey,
    SCSecretKey,
    _signed_payload,
    sc_keygen,
    sc_sigenc,
    sc_verdec,
    sharp_dec,
    sharp_enc,
    sharp_keygen,
)
from qsc_lab.classical.wire import MalformedError, pack_sections, unpack_sections


def _probably_prime(n: int) -> bool:
    if n < 4:
        return n in (2, 3)
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = pow(x, 2, n)
            if x == n - 1:
                break
        else:
            return False
    return True


def _flip(data: bytes, bit: int) -> bytes:
    out = bytearray(data)
    out[bit // 8] ^= 0x80 >> (bit % 8)
    return bytes(out)


class TestWire:
    @given(st.lists(st.binary(max_size=40), max_size=6))
    def test_roundtrip(self, parts):
        assert unpack_sections(pack_sections(parts), len(parts)) == parts

    def test_truncated(self):
        data = pack_sections([b"abc", b"de"])
        with pytest.raises(MalformedError):
            unpack_sections(data[:-1], 2)

    def test_trailing(self):
        with pytest.raises(MalformedError):
            unpack_sections(pack_sections([b"x"]) + b"\x00", 1)

    def test_header_truncated(self):
        with pytest.raises(MalformedError):
            unpack_sections(b"\x00\x00", 1)


class TestHashConfig:
    def test_tags_distinct(self):
        assert len(set(DEFAULT_HASH.tags.values())) == 5

    def test_duplicate_tags_rejected(self):
        with pytest.raises(ValueError):
            HashConfig(tags={"kdf": b"a", "mac": b"a", "leaf": b"l", "node": b"n", "challenge": b"c"})

    def test_short_digest_rejected(self):
        with pytest.raises(ValueError):
            HashConfig(name="sha1")

    def test_domain_separation(self):
        assert DEFAULT_HASH.digest("kdf", b"x") != DEFAULT_HASH.digest("mac", b"x")

    def test_matches_hashlib(self):
        tag = DEFAULT_HASH.tags["leaf"]
        expect = hashlib.sha256(bytes([len(tag)]) + tag + b"ab").digest()
        assert DEFAULT_HASH.digest("leaf", b"a", b"b") == expect


class TestLamportMerkle:
    def test_ots_vk_is_hash_of_sk(self):
        kp = ots_from_seed(b"\x01" * 32)
        assert len(kp.sk) == OTS_BITS
        for i in (0, 17, 255):
            for b in (0, 1):
                assert kp.vk[i][b] == DEFAULT_HASH.digest("leaf", kp.sk[i][b])

    def test_sign_verify(self):
        kp = ds_keygen(2, np.random.default_rng(0))
        sig = ds_sign(kp, b"hello")
        assert ds_verify(kp.root, b"hello", sig, 2)

    def test_flipped_message_bit(self):
        kp = ds_keygen(1, np.random.default_rng(1))
        sig = ds_sign(kp, b"hello")
        assert not ds_verify(kp.root, _flip(b"hello", 3), sig, 1)

    def test_leaf_exhaustion(self):
        kp = ds_keygen(2, np.random.default_rng(2))
        for i in range(4):
            ds_sign(kp, bytes([i]))
        assert kp.remaining == 0
        with pytest.raises(LeafExhaustedError):
            ds_sign(kp, b"one too many")

    def test_depth_zero_one_time(self):
        kp = ds_keygen(0, np.random.default_rng(3))
        assert ds_verify(kp.root, b"m", ds_sign(kp, b"m"), 0)
        with pytest.raises(LeafExhaustedError):
            ds_sign(kp, b"m")

    def test_root_recomputable(self):
        kp = ds_keygen(2, np.random.default_rng(4))
        leaves = [leaf_hash(ots_from_seed(s).vk_bytes()) for s in kp.leaf_seeds]
        top = node_hash(node_hash(leaves[0], leaves[1]), node_hash(leaves[2], leaves[3]))
        assert top == kp.root

    @pytest.mark.parametrize("depth", [0, 1, 3])
    def test_path_length(self, depth):
        kp = ds_keygen(depth, np.random.default_rng(5))
        sig = ds_sign(kp, b"x")
        assert len(sig) == signature_length(depth)
        assert len(sig) - signature_length(0) == 32 * depth

    def test_every_leaf_verifies(self):
        kp = ds_keygen(3, np.random.default_rng(6))
        sigs = [ds_sign(kp, bytes([i])) for i in range(8)]
        assert [struct.unpack(">I", s[:4])[0] for s in sigs] == list(range(8))
        assert all(ds_verify(kp.root, bytes([i]), s, 3) for i, s in enumerate(sigs))

    def test_wrong_depth_or_length(self):
        kp = ds_keygen(1, np.random.default_rng(7))
        sig = ds_sign(kp, b"x")
        assert not ds_verify(kp.root, b"x", sig, 2)
        assert not ds_verify(kp.root, b"x", sig[:-1], 1)

    def test_bad_depth(self):
        with pytest.raises(ValueError):
            ds_keygen(17, np.random.default_rng(0))

    def test_deterministic(self):
        a = ds_keygen(1, np.random.default_rng(9))
        b = ds_keygen(1, np.random.default_rng(9))
        assert a.root == b.root
        assert ds_sign(a, b"z") == ds_sign(b, b"z")


class TestPke:
    @pytest.mark.parametrize("name", sorted(GROUPS))
    def test_group_parameters(self, name):
        g = GROUPS[name]
        assert g.p == 2 * g.q + 1
        assert _probably_prime(g.p) and _probably_prime(g.q)
        assert pow(g.g, g.q, g.p) == 1 and g.g != 1

    def test_unknown_group(self):
        with pytest.raises(ValueError):
            get_group("toy")

    @pytest.mark.parametrize("name", sorted(GROUPS))
    def test_roundtrip_key_material(self, name):
        rng = np.random.default_rng(10)
        kp = pke_keygen(name, rng)
        m = rng.bytes(32)
        assert pke_dec(kp, pke_enc(kp.public, m, rng)) == m

    def test_truncated(self):
        rng = np.random.default_rng(11)
        kp = pke_keygen("test64", rng)
        c = pke_enc(kp.public, b"k" * 32, rng)
        assert pke_dec(kp, c[:-1]) is None

    def test_randomized(self):
        rng = np.random.default_rng(12)
        kp = pke_keygen("test64", rng)
        cts = {pke_enc(kp.public, b"same", rng) for _ in range(100)}
        assert len(cts) == 100

    def test_wrong_key(self):
        rng = np.random.default_rng(13)
        a, b = pke_keygen("test64", rng), pke_keygen("test64", rng)
        assert pke_dec(b, pke_enc(a.public, b"secret", rng)) is None

    def test_non_element_rejected(self):
        rng = np.random.default_rng(14)
        kp = pke_keygen("test64", rng)
        _, body, tag = unpack_sections(pke_enc(kp.public, b"x", rng), 3)
        # p - 1 has order 2, outside the prime-order subgroup
        bad = kp.group.encode(kp.group.p - 1)
        assert pke_dec(kp, pack_sections([bad, body, tag])) is None

    def test_length_limit(self):
        rng = np.random.default_rng(15)
        kp = pke_keygen("test64", rng)
        with pytest.raises(ValueError):
            pke_enc(kp.public, bytes(5000), rng)

    @settings(max_examples=40, deadline=None)
    @given(st.binary(max_size=100), st.integers(0, 2**32 - 1))
    def test_roundtrip_property(self, msg, seed):
        rng = np.random.default_rng(seed)
        kp = pke_keygen("test64", rng)
        assert pke_dec(kp, pke_enc(kp.public, msg, rng)) == msg


@pytest.fixture(scope="module")
def pair():
    rng = np.random.default_rng(100)
    return sc_keygen(128, rng, depth=4), sc_keygen(128, rng, depth=4), rng


class TestSigncryption:
    def test_roundtrip(self, pair):
        s, r, rng = pair
        c = sc_sigenc(s.sdk, r.vek, b"key material", rng)
        assert sc_verdec(s.vek, r.sdk, c) == b"key material"

    def test_wrong_sender_vk(self, pair):
        s, r, rng = pair
        other = sc_keygen(128, np.random.default_rng(1), depth=0)
        c = sc_sigenc(s.sdk, r.vek, b"m", rng)
        assert sc_verdec(other.vek, r.sdk, c) is None

    def test_resigned_under_other_sender(self, pair):
        s, r, rng = pair
        other = sc_keygen(128, np.random.default_rng(2), depth=0)
        c = sc_sigenc(s.sdk, r.vek, b"m", rng)
        u, body, mac, _ = unpack_sections(c, 4)
        e = pack_sections([u, body, mac])
        sig = ds_sign(other.sdk.signer, _signed_payload(e, other.vek, r.vek.enc))
        forged = pack_sections([u, body, mac, sig])
        assert sc_verdec(s.vek, r.sdk, forged) is None
        # under the re-signer's key the same bytes are accepted; the signature binds vk_S
        assert sc_verdec(other.vek, r.sdk, forged) == b"m"

    def test_wrong_receiver(self, pair):
        s, r, rng = pair
        c = sc_sigenc(s.sdk, r.vek, b"m", rng)
        assert sc_verdec(s.vek, s.sdk, c) is None

    def test_vek_inside_sdk(self, pair):
        s, _, _ = pair
        assert s.sdk.vek == s.vek
        assert s.vek.n == 128

    def test_mutations_all_rejected(self):
        rng = np.random.default_rng(3)
        s, r = sc_keygen(128, rng, depth=0), sc_keygen(128, rng, depth=0)
        c = sc_sigenc(s.sdk, r.vek, bytes(40), rng)
        bits = rng.integers(0, 8 * len(c), size=1000)
        assert all(sc_verdec(s.vek, r.sdk, _flip(c, int(b))) is None for b in bits)

    def test_garbage(self, pair):
        s, r, _ = pair
        assert sc_verdec(s.vek, r.sdk, b"") is None
        assert sc_verdec(s.vek, r.sdk, b"\x00" * 64) is None

    def test_deterministic_streams(self):
        def run(seed):
            rng = np.random.default_rng(seed)
            a, b = sc_keygen(8, rng, depth=1), sc_keygen(8, rng, depth=1)
            return a.sdk.to_bytes() + b.vek.to_bytes() + sc_sigenc(a.sdk, b.vek, b"x", rng)
        assert run(5) == run(5)
        assert run(5) != run(6)

    def test_n_range(self):
        with pytest.raises(ValueError):
            sc_keygen(-1, np.random.default_rng(0))


class TestKeySerialization:
    def test_public_roundtrip(self):
        keys = sc_keygen(64, np.random.default_rng(20), depth=1, user_id="alice")
        back = SCPublicKey.from_bytes(keys.vek.to_bytes())
        assert back == keys.vek
        assert back.fingerprint() == keys.vek.fingerprint()

    def test_secret_roundtrip_keeps_counter(self):
        rng = np.random.default_rng(21)
        keys = sc_keygen(64, rng, depth=2)
        ds_sign(keys.sdk.signer, b"used")
        back = SCSecretKey.from_bytes(keys.sdk.to_bytes())
        assert back.signer.next_leaf == 1
        assert back.vek == keys.vek

    def test_public_bad_header(self):
        data = bytearray(sc_keygen(1, np.random.default_rng(22), depth=0).vek.to_bytes())
        data[4] ^= 0xFF
        with pytest.raises(MalformedError):
            SCPublicKey.from_bytes(bytes(data))

    def test_public_non_element(self):
        vek = sc_keygen(1, np.random.default_rng(23), depth=0).vek
        head, root, enc, uid = unpack_sections(vek.to_bytes(), 4)
        bad = enc[:1] + vek.enc.group.encode(vek.enc.group.p - 1)
        with pytest.raises(MalformedError):
            SCPublicKey.from_bytes(pack_sections([head, root, bad, uid]))

    def test_secret_truncated(self):
        data = sc_keygen(1, np.random.default_rng(24), depth=0).sdk.to_bytes()
        with pytest.raises(MalformedError):
            SCSecretKey.from_bytes(data[:-3])

    def test_distinct_fingerprints(self):
        a = sc_keygen(1, np.random.default_rng(25), depth=0).vek
        b = sc_keygen(1, np.random.default_rng(26), depth=0).vek
        assert a.fingerprint() != b.fingerprint()


class TestSharp:
    def test_roundtrip(self):
        rng = np.random.default_rng(30)
        k = sharp_keygen(16, rng, depth=1)
        assert sharp_dec(k, sharp_enc(k, b"abc", rng)) == b"abc"

    def test_swapped_public_keys(self):
        rng = np.random.default_rng(31)
        k = sharp_keygen(16, rng, depth=1)
        inner, a, b = unpack_sections(sharp_enc(k, b"abc", rng), 3)
        assert sharp_dec(k, pack_sections([inner, b, a])) is None

    def test_malformed(self):
        k = sharp_keygen(16, np.random.default_rng(32), depth=0)
        assert sharp_dec(k, b"junk") is None
