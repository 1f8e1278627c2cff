"""Randomness: a seeded ChaCha20 word stream, uniform F_q sampling and the
discrete Gaussian error distribution used as the LWE noise."""
from __future__ import annotations

import math
import secrets
from dataclasses import dataclass, field

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms

from .field import FieldParams

SEED_BYTES = 32
DEFAULT_SIGMA = 3.2
DEFAULT_TAIL_CUT = 6


class Seed(bytes):
    """32 bytes of generator key material."""

    def __new__(cls, value: bytes | str):
        if isinstance(value, str):
            value = bytes.fromhex(value)
        if len(value) != SEED_BYTES:
            raise ValueError(f"seed must be {SEED_BYTES} bytes, got {len(value)}")
        return super().__new__(cls, value)

    @classmethod
    def random(cls) -> Seed:
        return cls(secrets.token_bytes(SEED_BYTES))

    @classmethod
    def from_int(cls, n: int) -> Seed:
        """Test convenience: small integer -> seed."""
        return cls(n.to_bytes(SEED_BYTES, "little"))


class Rng:
    """Deterministic word stream: the ChaCha20 keystream under ``seed``.

    Every draw consumes the stream in order, so drawing ``n`` words at once is
    identical to drawing them one by one.  ``stream`` selects an independent
    keystream (nonce) for the same seed; used to give parallel workers or
    sub-tasks their own generator.
    """

    _CHUNK = 1 << 16

    def __init__(self, seed: Seed | bytes | str | int | None = None, stream: int = 0):
        if seed is None:
            seed = Seed.random()
        elif isinstance(seed, int):
            seed = Seed.from_int(seed)
        self.seed = Seed(seed)
        self.stream = stream
        nonce = stream.to_bytes(16, "little")
        self._enc = Cipher(algorithms.ChaCha20(bytes(self.seed), nonce), mode=None).encryptor()
        self._buf = b""
        self._pos = 0

    def derive(self, index: int) -> Rng:
        """Independent generator for worker/sub-task ``index`` (injective in index)."""
        return Rng(self.seed, stream=(self.stream << 32) + index + 1)

    def bytes(self, n: int) -> bytes:
        avail = len(self._buf) - self._pos
        if avail < n:
            fresh = self._enc.update(bytes(max(self._CHUNK, n - avail)))
            self._buf = self._buf[self._pos :] + fresh
            self._pos = 0
        out = self._buf[self._pos : self._pos + n]
        self._pos += n
        return out

    def words(self, n: int) -> np.ndarray:
        """``n`` uniform 64-bit words."""
        return np.frombuffer(self.bytes(8 * n), dtype="<u8").astype(np.uint64)

    def unit(self, n: int) -> np.ndarray:
        """``n`` uniform doubles in [0, 1) with 53 bits of precision."""
        return (self.words(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def bits(self) -> int:
        return int(self.words(1)[0])


def sample_uniform_vector(p: FieldParams, m: int, rng: Rng) -> np.ndarray:
    """``m`` uniform residues in [0, q) by masked rejection sampling."""
    q = p.q
    mask = np.uint64((1 << q.bit_length()) - 1)
    out = np.empty(m, dtype=np.int64)
    filled = 0
    while filled < m:
        need = m - filled
        # Over-draw slightly; acceptance rate is q / 2^bits >= 1/2.
        cand = rng.words(need + need // 8 + 4) & mask
        cand = cand[cand < np.uint64(q)][:need]
        out[filled : filled + len(cand)] = cand.astype(np.int64)
        filled += len(cand)
    return out


def sample_uniform_matrix(p: FieldParams, shape: tuple[int, int], rng: Rng) -> np.ndarray:
    return sample_uniform_vector(p, shape[0] * shape[1], rng).reshape(shape)


def sample_uniform_element(p: FieldParams, rng: Rng) -> int:
    return int(sample_uniform_vector(p, 1, rng)[0])


@dataclass(frozen=True)
class GaussianSpec:
    """Discrete Gaussian over the integers in [-bound, bound].

    Weights are ``exp(-x^2 / (2 sigma^2))``.  ``sigma == 0`` is the point mass
    at zero, used for noiseless roundtrip tests.
    """

    sigma: float
    tail_cut: int
    bound: int
    support: np.ndarray = field(repr=False, compare=False)
    probs: np.ndarray = field(repr=False, compare=False)
    cdf: np.ndarray = field(repr=False, compare=False)

    @property
    def is_degenerate(self) -> bool:
        return self.bound == 0

    def weight(self, x: int) -> float:
        if self.sigma == 0:
            return 1.0 if x == 0 else 0.0
        return math.exp(-(x * x) / (2 * self.sigma**2))

    @property
    def mean(self) -> float:
        return float(np.dot(self.support, self.probs))

    @property
    def variance(self) -> float:
        return float(np.dot(self.support.astype(np.float64) ** 2, self.probs)) - self.mean**2


def build_gaussian(
    sigma: float = DEFAULT_SIGMA,
    tail_cut: int = DEFAULT_TAIL_CUT,
    q: int | None = None,
) -> GaussianSpec:
    if sigma < 0 or (sigma == 0 and tail_cut != 0):
        raise ValueError("sigma must be positive")
    if sigma > 0 and tail_cut < 4:
        raise ValueError("tail_cut must be at least 4")
    bound = math.ceil(tail_cut * sigma) if sigma > 0 else 0
    if q is not None and 4 * bound >= q:
        raise ValueError(f"noise bound {bound} >= q/4 for q = {q}")
    support = np.arange(-bound, bound + 1, dtype=np.int64)
    if sigma > 0:
        w = np.exp(-(support.astype(np.float64) ** 2) / (2 * sigma**2))
    else:
        w = np.ones(1)
    probs = w / w.sum()
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    return GaussianSpec(sigma, tail_cut, bound, support, probs, cdf)


def degenerate_gaussian() -> GaussianSpec:
    """Noise distribution concentrated at 0."""
    return build_gaussian(0.0, 0)


def sample_gaussians(spec: GaussianSpec, n: int, rng: Rng) -> np.ndarray:
    """``n`` signed draws by inverse CDF; always consumes exactly ``n`` words."""
    u = rng.unit(n)
    idx = np.searchsorted(spec.cdf, u, side="right")
    return spec.support[np.minimum(idx, len(spec.support) - 1)]


def sample_gaussian(spec: GaussianSpec, rng: Rng) -> int:
    return int(sample_gaussians(spec, 1, rng)[0])
