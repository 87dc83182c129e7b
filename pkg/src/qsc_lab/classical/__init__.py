"""Classical building blocks: hash-based signatures, DHIES encryption, signcryption."""
from .pke import pke_dec, pke_enc, pke_keygen
from .hashsig import LeafExhaustedError, ds_keygen, ds_sign, ds_verify
from .signcrypt import SCKeys, SCPublicKey, SCSecretKey, sc_keygen, sc_sigenc, sc_verdec
from .wire import MalformedError

__all__ = [
    "LeafExhaustedError", "MalformedError", "SCKeys", "SCPublicKey", "SCSecretKey",
    "ds_keygen", "ds_sign", "ds_verify", "pke_dec", "pke_enc", "pke_keygen",
    "sc_keygen", "sc_sigenc", "sc_verdec",
]
