"""Arithmetic in the prime field F_q.

Scalars are handled through :class:`FieldElement`; the hot paths (matrix-vector
products over F_q^m) work on ``int64`` numpy arrays holding canonical residues
in ``[0, q)``.  The Mersenne modulus 2^31 - 1 is the default and gets a
shift-add reduction path.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

MERSENNE_31 = (1 << 31) - 1
MIN_Q = 1 << 20
MAX_Q = 1 << 41

# Deterministic Miller-Rabin witnesses, sufficient for every n < 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class FieldParams:
    """Prime modulus and its Mersenne shape.

    ``check_range=False`` skips the 2^20 <= q < 2^41 window; only tests and
    toy fixtures use it.
    """

    q: int = MERSENNE_31
    check_range: bool = True

    def __post_init__(self):
        q = int(self.q)
        object.__setattr__(self, "q", q)
        if self.check_range and not (MIN_Q <= q < MAX_Q):
            raise ValueError(f"modulus {q} outside [2^20, 2^41)")
        if not is_prime(q):
            raise ValueError(f"modulus {q} is not prime")

    @property
    def is_mersenne(self) -> bool:
        return (self.q + 1) & self.q == 0

    @property
    def e(self) -> int | None:
        return self.q.bit_length() if self.is_mersenne else None

    @property
    def bits(self) -> int:
        return self.q.bit_length()

    def __call__(self, value: int) -> FieldElement:
        return FieldElement(reduce(value, self), self)

    def __eq__(self, other):
        return isinstance(other, FieldParams) and other.q == self.q

    def __hash__(self):
        return hash(self.q)


DEFAULT_FIELD = FieldParams()


def reduce(x: int, p: FieldParams) -> int:
    """Canonical residue of a non-negative integer.

    Mersenne moduli fold ``x`` as ``(x & q) + (x >> e)`` until it fits, which
    needs no division.
    """
    q = p.q
    if x < 0:
        return x % q
    if p.is_mersenne:
        e = p.e
        while x >> e:
            x = (x & q) + (x >> e)
        return 0 if x == q else x
    return x % q


def reduce_array(x: np.ndarray, p: FieldParams) -> np.ndarray:
    """Vectorised :func:`reduce` for non-negative ``uint64``/``int64`` arrays."""
    q = p.q
    if not p.is_mersenne:
        return (x % x.dtype.type(q)).astype(np.int64)
    x = x.astype(np.uint64, copy=True)
    e = np.uint64(p.e)
    mask = np.uint64(q)
    # Each fold shrinks a 64-bit word by e-1 bits; three folds reach < 2q.
    while True:
        hi = x >> e
        if not hi.any():
            break
        x = (x & mask) + hi
    x[x == mask] = 0
    return x.astype(np.int64)


@dataclass(frozen=True)
class FieldElement:
    value: int
    params: FieldParams = DEFAULT_FIELD

    def __post_init__(self):
        if not 0 <= self.value < self.params.q:
            object.__setattr__(self, "value", reduce(int(self.value), self.params))

    def _check(self, other: FieldElement) -> None:
        if self.params != other.params:
            raise ValueError(f"moduli differ: {self.params.q} vs {other.params.q}")

    def __add__(self, other: FieldElement) -> FieldElement:
        return add(self, other)

    def __sub__(self, other: FieldElement) -> FieldElement:
        return sub(self, other)

    def __mul__(self, other: FieldElement) -> FieldElement:
        return mul(self, other)

    def __neg__(self) -> FieldElement:
        return FieldElement((self.params.q - self.value) % self.params.q, self.params)

    def __int__(self) -> int:
        return self.value

    def inverse(self) -> FieldElement:
        """Multiplicative inverse via Fermat; only tests need this."""
        if self.value == 0:
            raise ZeroDivisionError("zero has no inverse")
        return FieldElement(pow(self.value, self.params.q - 2, self.params.q), self.params)

    def centered(self) -> int:
        return centered(self)


def add(a: FieldElement, b: FieldElement) -> FieldElement:
    a._check(b)
    s = a.value + b.value
    if s >= a.params.q:
        s -= a.params.q
    return FieldElement(s, a.params)


def sub(a: FieldElement, b: FieldElement) -> FieldElement:
    a._check(b)
    s = a.value - b.value
    if s < 0:
        s += a.params.q
    return FieldElement(s, a.params)


def mul(a: FieldElement, b: FieldElement) -> FieldElement:
    a._check(b)
    # Python ints give the unbounded intermediate (q < 2^41 => product < 2^82).
    return FieldElement(reduce(a.value * b.value, a.params), a.params)


def centered(a: FieldElement) -> int:
    """Representative in ``(-q/2, q/2]``: ``v`` if ``v <= q//2`` else ``v - q``."""
    half = a.params.q // 2
    return a.value if a.value <= half else a.value - a.params.q


def from_centered(x: int, p: FieldParams = DEFAULT_FIELD) -> FieldElement:
    if abs(x) >= p.q:
        raise ValueError(f"|{x}| >= q = {p.q}")
    return FieldElement(x + p.q if x < 0 else x, p)


def centered_array(v: np.ndarray, q: int) -> np.ndarray:
    v = np.asarray(v, dtype=np.int64)
    return np.where(v > q // 2, v - q, v)


def from_centered_array(x: np.ndarray, q: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    if x.size and np.abs(x).max() >= q:
        raise ValueError("centered value out of range")
    return np.where(x < 0, x + q, x)


def _limb_bits(q: int, inner: int, budget: int = 63) -> int:
    # Largest limb width keeping inner * (q-1) * 2^b below 2^budget.
    return budget - (q - 1).bit_length() - max(inner, 1).bit_length()


def matmul_mod(a: np.ndarray, b: np.ndarray, q: int, a_float: np.ndarray | None = None) -> np.ndarray:
    """``a @ b mod q`` for canonical int64 operands, exact for q < 2^41.

    ``b`` is split into limbs narrow enough that no dot product loses bits;
    each partial product is reduced once and recombined with a shift.  When
    limbs of at least 8 bits keep every sum below 2^53 the products run in
    float64 through BLAS (``a_float`` may carry a cached conversion of ``a``),
    otherwise in int64 with a 2^63 budget.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    inner = a.shape[-1]
    if b.shape[0] != inner:
        raise DimensionError(f"dimension mismatch: {a.shape} @ {b.shape}")
    nbits = (q - 1).bit_length()
    bits = _limb_bits(q, inner, 53)
    use_float = bits >= 8
    if use_float:
        lhs = a_float if a_float is not None else a.astype(np.float64)
    else:
        bits = _limb_bits(q, inner, 63)
        if bits < 1:
            raise ValueError(f"inner dimension {inner} too large for q = {q}")
        lhs = a
    mask = (1 << bits) - 1
    out = None
    shift = 0
    while shift < nbits:
        limb = (b >> shift) & mask
        if use_float:
            part = (lhs @ limb.astype(np.float64)).astype(np.int64) % q
        else:
            part = (lhs @ limb) % q
        if shift:
            part = _shl_mod(part, shift, q)
        out = part if out is None else (out + part) % q
        shift += bits
    return out


def _shl_mod(x: np.ndarray, shift: int, q: int) -> np.ndarray:
    # x * 2^shift mod q in steps small enough to stay inside int64.
    room = 62 - (q - 1).bit_length()
    while shift > 0:
        s = min(shift, room)
        x = (x << s) % q
        shift -= s
    return x
