"""The LWE pseudorandom map ``f(S, v) = S v + E mod q`` and its
message-absorbing recursion ``g_i = f(S, g_{i-1}) + m_i``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .field import DEFAULT_FIELD, FieldParams, from_centered_array, matmul_mod
from .sampler import GaussianSpec, Rng, sample_gaussians


@dataclass(eq=False)
class SecretKeyMatrix:
    """m x m matrix over F_q; row k is recipient k's secret key."""

    rows: np.ndarray
    field: FieldParams = DEFAULT_FIELD

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64)
        if self.rows.ndim != 2 or self.rows.shape[0] != self.rows.shape[1]:
            raise ValueError(f"secret key matrix must be square, got {self.rows.shape}")
        if self.rows.size and (self.rows.min() < 0 or self.rows.max() >= self.field.q):
            raise ValueError("secret key entries must be canonical residues")

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    @property
    def q(self) -> int:
        return self.field.q

    def __eq__(self, other):
        return (
            isinstance(other, SecretKeyMatrix)
            and self.field == other.field
            and np.array_equal(self.rows, other.rows)
        )


def lwe_prm_step(
    S: SecretKeyMatrix,
    v: np.ndarray,
    spec: GaussianSpec,
    rng: Rng,
    noise: np.ndarray | None = None,
    _rows_float: np.ndarray | None = None,
) -> np.ndarray:
    """One evaluation of the map: ``S v + E mod q`` with E drawn from ``spec``.

    Consumes exactly ``m`` Gaussian draws unless ``noise`` is given.
    """
    v = np.asarray(v, dtype=np.int64)
    if v.shape != (S.m,):
        raise DimensionError(f"state vector has shape {v.shape}, expected ({S.m},)")
    if noise is None:
        noise = sample_gaussians(spec, S.m, rng)
    return (matmul_mod(S.rows, v, S.q, _rows_float) + from_centered_array(noise, S.q)) % S.q


def recursive_prm(
    S: SecretKeyMatrix,
    M: np.ndarray,
    v0: np.ndarray,
    spec: GaussianSpec,
    rng: Rng,
) -> np.ndarray:
    """Columns ``g_1..g_l`` of the recursion started at ``g_0 = v0``.

    Returns an ``m x l`` array.  Column ``i`` uses the ``i``-th block of ``m``
    Gaussian draws, so truncating ``M`` reproduces a prefix of the output.
    """
    M = np.asarray(M, dtype=np.int64)
    if M.ndim != 2 or M.shape[0] != S.m:
        raise DimensionError(f"message matrix has shape {M.shape}, expected ({S.m}, l)")
    m, l = M.shape
    if l < 1:
        raise ValueError("message matrix needs at least one column")
    # The stream is sequential, so one bulk draw equals l successive m-draws.
    noise = sample_gaussians(spec, m * l, rng).reshape(l, m)
    out = np.empty((m, l), dtype=np.int64)
    g = np.asarray(v0, dtype=np.int64)
    q = S.q
    rows_float = S.rows.astype(np.float64)
    for i in range(l):
        g = (lwe_prm_step(S, g, spec, rng, noise=noise[i], _rows_float=rows_float) + M[:, i]) % q
        out[:, i] = g
    return out
