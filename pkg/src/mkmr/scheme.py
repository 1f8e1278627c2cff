"""Multi-key multi-recipient symmetric encryption.

Each of the ``m`` recipients holds one row ``s_j`` of a secret key matrix.
A message matrix ``M`` (one length-``l`` stream per recipient) encrypts to a
single ``m x (l+1)`` ciphertext::

    v_0 = IV (uniform)
    v_i = m_i + S v_{i-1} + E_i   (mod q),   i = 1..l

and recipient ``j`` recovers ``m_ji + e = v_ji - <s_j, v_{i-1}>``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .field import DEFAULT_FIELD, MERSENNE_31, FieldParams, matmul_mod
from .prm import SecretKeyMatrix, recursive_prm
from .sampler import (
    DEFAULT_SIGMA,
    DEFAULT_TAIL_CUT,
    GaussianSpec,
    Rng,
    build_gaussian,
    sample_uniform_matrix,
    sample_uniform_vector,
)

# Security level -> (dimension, modulus).  Only the 128-bit row is published.
SECURITY_LEVELS = {128: (1024, MERSENNE_31)}


@dataclass(frozen=True)
class SchemeParams:
    lam: int
    m: int
    field: FieldParams
    gauss: GaussianSpec

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("need at least two recipients (m >= 2)")

    @property
    def q(self) -> int:
        return self.field.q

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "m": self.m,
            "q": self.q,
            "sigma": self.gauss.sigma,
            "tail_cut": self.gauss.tail_cut,
        }

    @classmethod
    def from_dict(cls, d: dict) -> SchemeParams:
        return setup(
            d.get("lambda", 128),
            m=d["m"],
            q=d["q"],
            sigma=d.get("sigma", DEFAULT_SIGMA),
            tail_cut=d.get("tail_cut", DEFAULT_TAIL_CUT),
        )


def setup(
    lam: int = 128,
    *,
    m: int | None = None,
    q: int | None = None,
    sigma: float = DEFAULT_SIGMA,
    tail_cut: int = DEFAULT_TAIL_CUT,
) -> SchemeParams:
    """Parameters for security level ``lam``; ``m``/``q`` override the table."""
    if lam in SECURITY_LEVELS:
        default_m, default_q = SECURITY_LEVELS[lam]
    elif m is None:
        raise ValueError(f"unsupported security level {lam} without an explicit m")
    else:
        default_m, default_q = m, MERSENNE_31
    fp = FieldParams(q if q is not None else default_q)
    gauss = build_gaussian(sigma, tail_cut, q=fp.q)
    return SchemeParams(lam, m if m is not None else default_m, fp, gauss)


@dataclass(eq=False)
class MessageMatrix:
    """``m`` message streams of length ``l``; ``lengths[j]`` is row j's payload
    length, entries beyond it are padding."""

    entries: np.ndarray
    lengths: list[int] | None = None
    field: FieldParams = DEFAULT_FIELD

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.int64)
        if self.entries.ndim != 2:
            raise ValueError("message matrix must be two-dimensional")
        if self.entries.size and (self.entries.min() < 0 or self.entries.max() >= self.field.q):
            raise ValueError("message entries must be canonical residues")
        if self.lengths is None:
            self.lengths = [self.l] * self.m
        if len(self.lengths) != self.m or any(not 0 <= n <= self.l for n in self.lengths):
            raise ValueError("lengths ledger does not match the matrix")

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def l(self) -> int:
        return self.entries.shape[1]

    def row(self, j: int) -> np.ndarray:
        """Payload of recipient ``j`` (1-based), padding stripped."""
        return self.entries[j - 1, : self.lengths[j - 1]]


@dataclass(eq=False)
class Ciphertext:
    """Columns ``v_0 .. v_l`` stored as an ``m x (l+1)`` array."""

    data: np.ndarray
    field: FieldParams = DEFAULT_FIELD

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.int64)
        if self.data.ndim != 2 or self.data.shape[1] < 2:
            raise ValueError("ciphertext needs an IV column and at least one body column")

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def l(self) -> int:
        return self.data.shape[1] - 1

    @property
    def iv(self) -> np.ndarray:
        return self.data[:, 0]

    def column(self, i: int) -> np.ndarray:
        return self.data[:, i]

    def __eq__(self, other):
        return (
            isinstance(other, Ciphertext)
            and self.field == other.field
            and np.array_equal(self.data, other.data)
        )


@dataclass(eq=False)
class RecipientKey:
    index: int  # 1-based recipient number
    s: np.ndarray
    field: FieldParams = DEFAULT_FIELD

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=np.int64)
        if not 1 <= self.index <= len(self.s):
            raise ValueError(f"recipient index {self.index} outside [1, {len(self.s)}]")

    @property
    def m(self) -> int:
        return len(self.s)

    def __eq__(self, other):
        return (
            isinstance(other, RecipientKey)
            and self.index == other.index
            and self.field == other.field
            and np.array_equal(self.s, other.s)
        )


def recipient_key(S: SecretKeyMatrix, j: int) -> RecipientKey:
    return RecipientKey(j, S.rows[j - 1].copy(), S.field)


def keygen(params: SchemeParams, rng: Rng) -> SecretKeyMatrix:
    return SecretKeyMatrix(sample_uniform_matrix(params.field, (params.m, params.m), rng), params.field)


def encrypt(
    S: SecretKeyMatrix,
    M: MessageMatrix,
    rng: Rng,
    gauss: GaussianSpec | None = None,
) -> Ciphertext:
    if M.m != S.m:
        raise DimensionError(f"message has {M.m} rows but the key matrix has {S.m}")
    if M.field != S.field:
        raise DimensionError("message and key use different moduli")
    if M.l < 1:
        raise ValueError("cannot encrypt an empty message (l = 0)")
    gauss = gauss if gauss is not None else build_gaussian(q=S.q)
    v0 = sample_uniform_vector(S.field, S.m, rng)
    body = recursive_prm(S, M.entries, v0, gauss, rng)
    return Ciphertext(np.column_stack([v0, body]), S.field)


def decrypt_recipient(key: RecipientKey, C: Ciphertext, row: int | None = None) -> np.ndarray:
    """Noisy stream ``v_ji - <s, v_{i-1}>`` for ``j = row`` (default: the
    key's own row).  Using another row models a recipient reading a stream
    that is not theirs."""
    if key.m != C.m:
        raise DimensionError(f"key length {key.m} does not match ciphertext dimension {C.m}")
    if key.field != C.field:
        raise DimensionError("key and ciphertext use different moduli")
    j = key.index if row is None else row
    q = C.field.q
    mask = matmul_mod(key.s[None, :], C.data[:, :-1], q)[0]
    return (C.data[j - 1, 1:] - mask) % q


def decrypt_all(S: SecretKeyMatrix, C: Ciphertext, lengths: list[int] | None = None) -> MessageMatrix:
    if S.m != C.m:
        raise DimensionError(f"key matrix dimension {S.m} does not match ciphertext dimension {C.m}")
    q = C.field.q
    plain = (C.data[:, 1:] - matmul_mod(S.rows, C.data[:, :-1], q)) % q
    return MessageMatrix(plain, lengths, C.field)
