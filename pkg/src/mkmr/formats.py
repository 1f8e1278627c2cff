"""Binary file formats for ciphertexts and keys.

All integers are little-endian.  Entries are u32 when q < 2^32, else u64.
Every file ends with the CRC32 of all preceding bytes; this catches transport
errors only and is not a MAC.

    ciphertext  "MKMR" | u16 version | u16 flags | u64 q | u32 m | u32 l
                | (l+1)*m entries, column-major (v_0 first) | u32 crc
    key matrix  "MKSK" | u16 version | u64 q | u32 m | m*m entries row-major | u32 crc
    recipient   "MKRK" | u16 version | u64 q | u32 m | u32 j | m entries | u32 crc
"""
from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .field import FieldParams
from .prm import SecretKeyMatrix
from .scheme import Ciphertext, RecipientKey

VERSION = 1
FLAG_WIDE = 0x0001

_CT_HEAD = struct.Struct("<4sHHQII")
_SK_HEAD = struct.Struct("<4sHQI")
_RK_HEAD = struct.Struct("<4sHQII")
_CRC = struct.Struct("<I")


class FormatError(ValueError):
    """Malformed key or ciphertext file."""


class BadMagicError(FormatError):
    pass


class VersionError(FormatError):
    pass


class TruncatedError(FormatError):
    pass


class ChecksumError(FormatError):
    pass


class NonCanonicalError(FormatError):
    pass


def _dtype(q: int) -> np.dtype:
    return np.dtype("<u4") if q < (1 << 32) else np.dtype("<u8")


def _seal(body: bytes) -> bytes:
    return body + _CRC.pack(zlib.crc32(body))


def _open(blob: bytes, magic: bytes, head: struct.Struct) -> tuple:
    if len(blob) < 4 or blob[:4] != magic:
        raise BadMagicError(f"expected magic {magic!r}, found {bytes(blob[:4])!r}")
    if len(blob) < head.size + _CRC.size:
        raise TruncatedError(f"{len(blob)} bytes is shorter than the header")
    return head.unpack_from(blob)


def _check_tail(blob: bytes, expected: int, version: int) -> None:
    if len(blob) < expected:
        raise TruncatedError(f"file has {len(blob)} bytes, header implies {expected}")
    if len(blob) > expected:
        raise FormatError(f"{len(blob) - expected} trailing bytes after checksum")
    (crc,) = _CRC.unpack_from(blob, expected - _CRC.size)
    if zlib.crc32(blob[: expected - _CRC.size]) != crc:
        raise ChecksumError("CRC32 mismatch")
    if version != VERSION:
        raise VersionError(f"unsupported format version {version}")


def _entries(blob: bytes, offset: int, count: int, q: int) -> np.ndarray:
    vals = np.frombuffer(blob, dtype=_dtype(q), count=count, offset=offset).astype(np.int64)
    if count and vals.max() >= q:
        raise NonCanonicalError("entry not reduced modulo q")
    return vals


def _field(q: int) -> FieldParams:
    try:
        return FieldParams(q, check_range=False)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def serialize_ciphertext(C: Ciphertext) -> bytes:
    q = C.field.q
    flags = FLAG_WIDE if q >= (1 << 32) else 0
    head = _CT_HEAD.pack(b"MKMR", VERSION, flags, q, C.m, C.l)
    return _seal(head + C.data.T.astype(_dtype(q)).tobytes())


def deserialize_ciphertext(blob: bytes) -> Ciphertext:
    magic, version, flags, q, m, l = _open(blob, b"MKMR", _CT_HEAD)
    width = _dtype(q).itemsize
    _check_tail(blob, _CT_HEAD.size + (l + 1) * m * width + _CRC.size, version)
    if flags & ~FLAG_WIDE or bool(flags & FLAG_WIDE) != (width == 8):
        raise FormatError(f"inconsistent flags 0x{flags:04x}")
    if m < 1 or l < 1:
        raise FormatError("empty ciphertext")
    fp = _field(q)
    data = _entries(blob, _CT_HEAD.size, (l + 1) * m, q).reshape(l + 1, m).T
    return Ciphertext(np.ascontiguousarray(data), fp)


def serialize_key_matrix(S: SecretKeyMatrix) -> bytes:
    head = _SK_HEAD.pack(b"MKSK", VERSION, S.q, S.m)
    return _seal(head + S.rows.astype(_dtype(S.q)).tobytes())


def deserialize_key_matrix(blob: bytes) -> SecretKeyMatrix:
    magic, version, q, m = _open(blob, b"MKSK", _SK_HEAD)
    _check_tail(blob, _SK_HEAD.size + m * m * _dtype(q).itemsize + _CRC.size, version)
    fp = _field(q)
    rows = _entries(blob, _SK_HEAD.size, m * m, q).reshape(m, m)
    return SecretKeyMatrix(rows, fp)


def serialize_recipient_key(key: RecipientKey) -> bytes:
    q = key.field.q
    head = _RK_HEAD.pack(b"MKRK", VERSION, q, key.m, key.index)
    return _seal(head + key.s.astype(_dtype(q)).tobytes())


def deserialize_recipient_key(blob: bytes) -> RecipientKey:
    magic, version, q, m, j = _open(blob, b"MKRK", _RK_HEAD)
    _check_tail(blob, _RK_HEAD.size + m * _dtype(q).itemsize + _CRC.size, version)
    fp = _field(q)
    s = _entries(blob, _RK_HEAD.size, m, q)
    if not 1 <= j <= m:
        raise FormatError(f"recipient index {j} outside [1, {m}]")
    return RecipientKey(j, s, fp)


_READERS = {
    b"MKMR": deserialize_ciphertext,
    b"MKSK": deserialize_key_matrix,
    b"MKRK": deserialize_recipient_key,
}


def load(path: str | Path):
    """Read any of the three formats, dispatching on the magic bytes."""
    blob = Path(path).read_bytes()
    reader = _READERS.get(blob[:4])
    if reader is None:
        raise BadMagicError(f"{path}: unknown magic {blob[:4]!r}")
    return reader(blob)


def dump(obj, path: str | Path) -> None:
    if isinstance(obj, Ciphertext):
        blob = serialize_ciphertext(obj)
    elif isinstance(obj, SecretKeyMatrix):
        blob = serialize_key_matrix(obj)
    elif isinstance(obj, RecipientKey):
        blob = serialize_recipient_key(obj)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    Path(path).write_bytes(blob)
