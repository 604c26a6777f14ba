"""Facial-mark biometrics sealed into passport barcodes."""

from ._passport_seal import (
    Error,
    FacialMark,
    MarkSet,
    Symbol,
    cmc,
    decode_raster,
    decode_symbol,
    detect_face_marks,
    encode_symbol,
    fmm,
    hand_features,
    hybrid_decrypt,
    hybrid_encrypt,
    make_key_shares,
    recover_key,
    roc,
    rs_decode,
    rs_encode,
    run_cli,
    sf_decrypt,
    sf_decrypt_block,
    sf_encrypt,
    sf_encrypt_block,
    sha256,
)

__all__ = [
    "Error",
    "FacialMark",
    "MarkSet",
    "Symbol",
    "cmc",
    "decode_raster",
    "decode_symbol",
    "detect_face_marks",
    "encode_symbol",
    "fmm",
    "hand_features",
    "hybrid_decrypt",
    "hybrid_encrypt",
    "make_key_shares",
    "recover_key",
    "roc",
    "rs_decode",
    "rs_encode",
    "run_cli",
    "sf_decrypt",
    "sf_decrypt_block",
    "sf_encrypt",
    "sf_encrypt_block",
    "sha256",
]
