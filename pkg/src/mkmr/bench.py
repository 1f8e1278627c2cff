"""Encryption/decryption throughput and a projection to the full-size
workload (m = 1024 streams of 512x512 pixels)."""
from __future__ import annotations

import time
from dataclasses import dataclass

from .sampler import Rng, sample_uniform_matrix
from .scheme import MessageMatrix, decrypt_all, encrypt, keygen, setup

FULL_M = 1024
FULL_L = 512 * 512
REFERENCE_SECONDS = 4.0  # reference figure for the full workload on an i5 workstation


@dataclass
class BenchResult:
    m: int
    l: int
    reps: int
    encrypt_s: float  # best of reps
    decrypt_s: float

    @property
    def elements_per_s(self) -> float:
        return self.m * self.l / self.encrypt_s

    @property
    def macs_per_s(self) -> float:
        return self.m * self.m * self.l / self.encrypt_s

    @property
    def projected_encrypt_s(self) -> float:
        # Encryption cost is dominated by l matrix-vector products of size m^2.
        return FULL_M * FULL_M * FULL_L / self.macs_per_s

    @property
    def projected_decrypt_s(self) -> float:
        return self.decrypt_s * (FULL_M * FULL_M * FULL_L) / (self.m * self.m * self.l)

    def lines(self) -> list[str]:
        payload_mb = FULL_M * FULL_L / 1e6
        return [
            f"bench m={self.m} l={self.l} reps={self.reps}",
            f"  encrypt  {self.encrypt_s:.3f} s  ({self.elements_per_s:,.0f} elements/s, {self.macs_per_s:,.0f} mod-MAC/s)",
            f"  decrypt  {self.decrypt_s:.3f} s  (all {self.m} rows)",
            f"  projected full workload m={FULL_M} l={FULL_L} (~{payload_mb:.0f} MB of pixels):",
            f"    encrypt ~{self.projected_encrypt_s:,.1f} s, decrypt ~{self.projected_decrypt_s:,.1f} s",
            f"  reference: {REFERENCE_SECONDS:.0f} s reported for the full encryption (informational, not a gate)",
        ]

    def record(self) -> dict:
        return {
            "m": self.m,
            "l": self.l,
            "reps": self.reps,
            "encrypt_s": self.encrypt_s,
            "decrypt_s": self.decrypt_s,
            "elements_per_s": self.elements_per_s,
            "projected_encrypt_s": self.projected_encrypt_s,
            "projected_decrypt_s": self.projected_decrypt_s,
            "reference_s": REFERENCE_SECONDS,
        }


def run_bench(m: int = 256, l: int = 4096, reps: int = 3, rng: Rng | None = None, q: int | None = None) -> BenchResult:
    rng = rng if rng is not None else Rng()
    params = setup(128, m=m, q=q)
    S = keygen(params, rng)
    M = MessageMatrix(sample_uniform_matrix(params.field, (m, l), rng), None, params.field)
    enc_times, dec_times = [], []
    for _ in range(reps):
        t0 = time.perf_counter()
        C = encrypt(S, M, rng, params.gauss)
        t1 = time.perf_counter()
        decrypt_all(S, C)
        t2 = time.perf_counter()
        enc_times.append(t1 - t0)
        dec_times.append(t2 - t1)
    return BenchResult(m, l, reps, min(enc_times), min(dec_times))
