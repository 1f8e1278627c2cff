"""Statistical harness for the scheme's observable security properties.

Nothing here proves security.  Each experiment reports whether a simple
distinguisher (a chi-square test, a naive adversary) fails to tell real
outputs apart from uniform ones at a fixed significance level.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from dataclasses import field as dc_field

import numpy as np
from scipy.stats import chi2

from .codec import encode_image, pack_messages, pattern_image, window_width
from .field import DEFAULT_FIELD, FieldParams, centered_array, matmul_mod
from .prm import SecretKeyMatrix
from .sampler import (
    GaussianSpec,
    Rng,
    build_gaussian,
    sample_gaussians,
    sample_uniform_matrix,
    sample_uniform_vector,
)
from .scheme import Ciphertext, MessageMatrix, SchemeParams, decrypt_all, encrypt, keygen

DEFAULT_BUCKETS = 256
DEFAULT_ALPHA = 0.01


# -- chi-square machinery ---------------------------------------------------


@dataclass
class UniformityReport:
    name: str
    n_samples: int
    n_buckets: int
    statistic: float
    dof: int
    alpha: float
    critical: float
    expect_pass: bool = True

    @property
    def passed(self) -> bool:
        return self.statistic < self.critical

    @property
    def ok(self) -> bool:
        """The outcome matches what the experiment is designed to show."""
        return self.passed == self.expect_pass

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        note = "" if self.expect_pass else " (expected FAIL)"
        return (
            f"{self.name:<40} n={self.n_samples:<9} chi2={self.statistic:12.2f} "
            f"dof={self.dof:<4} crit={self.critical:9.2f} alpha={self.alpha} {verdict}{note}"
        )

    def record(self) -> dict:
        return {
            "name": self.name,
            "n": self.n_samples,
            "buckets": self.n_buckets,
            "statistic": self.statistic,
            "dof": self.dof,
            "alpha": self.alpha,
            "critical": self.critical,
            "pass": self.passed,
            "expect_pass": self.expect_pass,
            "ok": self.ok,
        }


ChiSquareReport = UniformityReport


def critical_value(dof: int, alpha: float) -> float:
    return float(chi2.ppf(1.0 - alpha, dof))


def wilson_hilferty(dof: int, alpha: float) -> float:
    """Closed-form chi-square quantile; within 1% of the exact value for dof >= 30."""
    from statistics import NormalDist

    z = NormalDist().inv_cdf(1.0 - alpha)
    h = 2.0 / (9.0 * dof)
    return dof * (1.0 - h + z * math.sqrt(h)) ** 3


def bucket_counts(samples: np.ndarray, q: int, n_buckets: int) -> tuple[np.ndarray, np.ndarray]:
    """Counts over equal-width buckets of [0, q); the last bucket takes the
    remainder.  Returns (counts, bucket probabilities under uniformity)."""
    width = q // n_buckets
    idx = np.minimum(np.asarray(samples, dtype=np.int64) // width, n_buckets - 1)
    counts = np.bincount(idx, minlength=n_buckets)
    sizes = np.full(n_buckets, width, dtype=np.float64)
    sizes[-1] = q - width * (n_buckets - 1)
    return counts, sizes / q


def chi_square_uniform(
    samples,
    q: int = DEFAULT_FIELD.q,
    n_buckets: int = DEFAULT_BUCKETS,
    alpha: float = DEFAULT_ALPHA,
    name: str = "uniformity",
    expect_pass: bool = True,
) -> UniformityReport:
    samples = np.asarray(samples, dtype=np.int64).ravel()
    n = samples.size
    if n < 5 * n_buckets:
        raise ValueError(f"{n} samples is too few for {n_buckets} buckets (need {5 * n_buckets})")
    counts, probs = bucket_counts(samples, q, n_buckets)
    expected = n * probs
    stat = float(((counts - expected) ** 2 / expected).sum())
    dof = n_buckets - 1
    return UniformityReport(name, n, n_buckets, stat, dof, alpha, critical_value(dof, alpha), expect_pass)


def chi_square_fit(
    draws: np.ndarray,
    support: np.ndarray,
    probs: np.ndarray,
    alpha: float = DEFAULT_ALPHA,
    name: str = "goodness of fit",
) -> UniformityReport:
    """Pearson test of integer draws against a table; sparse tail cells are
    merged until every expected count is at least 5."""
    draws = np.asarray(draws, dtype=np.int64)
    n = draws.size
    observed = np.bincount(draws - support[0], minlength=len(support)).astype(np.float64)
    expected = n * np.asarray(probs, dtype=np.float64)
    cells_o, cells_e = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= 5:
            cells_o.append(acc_o)
            cells_e.append(acc_e)
            acc_o = acc_e = 0.0
    if cells_e:
        cells_o[-1] += acc_o
        cells_e[-1] += acc_e
    if len(cells_e) < 2:
        raise ValueError("too few draws for a goodness-of-fit test")
    o, e = np.array(cells_o), np.array(cells_e)
    stat = float(((o - e) ** 2 / e).sum())
    dof = len(cells_e) - 1
    return UniformityReport(name, n, len(cells_e), stat, dof, alpha, critical_value(dof, alpha))


# -- LWE sample fixtures ------------------------------------------------------


@dataclass(eq=False)
class LweSampleSet:
    a: np.ndarray  # (n, dim)
    b: np.ndarray  # (n,)
    field: FieldParams = DEFAULT_FIELD
    secret: np.ndarray | None = None
    noise: np.ndarray | None = dc_field(default=None, repr=False)

    @property
    def m_samples(self) -> int:
        return self.b.shape[0]

    @property
    def pairs(self) -> list[tuple[np.ndarray, int]]:
        return [(self.a[i], int(self.b[i])) for i in range(self.m_samples)]


def gen_lwe_samples(
    s: np.ndarray,
    n: int,
    spec: GaussianSpec,
    rng: Rng,
    field: FieldParams = DEFAULT_FIELD,
) -> LweSampleSet:
    """``n`` pairs ``(a_i, <s, a_i> + e_i mod q)``; the noise is kept for replay."""
    s = np.asarray(s, dtype=np.int64)
    a = sample_uniform_matrix(field, (n, len(s)), rng)
    e = sample_gaussians(spec, n, rng)
    b = (matmul_mod(a, s, field.q) + e) % field.q
    return LweSampleSet(a, b, field, secret=s.copy(), noise=e)


def gen_uniform_decoys(n: int, dim: int, rng: Rng, field: FieldParams = DEFAULT_FIELD) -> LweSampleSet:
    ab = sample_uniform_matrix(field, (n, dim + 1), rng)
    return LweSampleSet(ab[:, :dim].copy(), ab[:, dim].copy(), field)


def solve_mod(A, b, q: int) -> np.ndarray | None:
    """Solve the square system ``A x = b`` over F_q by Gauss-Jordan elimination;
    None if singular."""
    n = len(A)
    rows = [[int(x) for x in A[i]] + [int(b[i])] for i in range(n)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if rows[r][col] % q), None)
        if pivot is None:
            return None
        rows[col], rows[pivot] = rows[pivot], rows[col]
        inv = pow(rows[col][col], q - 2, q)
        rows[col] = [x * inv % q for x in rows[col]]
        for r in range(n):
            if r != col and rows[r][col]:
                f = rows[r][col]
                rows[r] = [(x - f * y) % q for x, y in zip(rows[r], rows[col])]
    return np.array([rows[i][n] for i in range(n)], dtype=np.int64)


def naive_recover(samples: LweSampleSet) -> np.ndarray | None:
    """Treat the first ``dim`` samples as exact equations and solve for s.
    Works only when the noise is zero."""
    dim = samples.a.shape[1]
    return solve_mod(samples.a[:dim], samples.b[:dim], samples.field.q)


# -- IND-CPA game -------------------------------------------------------------


class GameRuleViolation(ValueError):
    """Challenge messages repeat each other or an earlier query."""


class Adversary:
    """Base adversary: one random query, then a coin-flip guess."""

    leak_key = False
    n_queries = 1

    def choose_queries(self, m: int, l: int, field: FieldParams, rng: Rng) -> list[np.ndarray]:
        return [sample_uniform_matrix(field, (m, l), rng) for _ in range(self.n_queries)]

    def choose_challenge(self, queries, ciphertexts, field: FieldParams, rng: Rng):
        m, l = queries[0].shape
        return sample_uniform_matrix(field, (m, l), rng), sample_uniform_matrix(field, (m, l), rng)

    def guess(self, challenge: Ciphertext, rng: Rng, key: SecretKeyMatrix | None = None) -> int:
        return int(rng.words(1)[0] & np.uint64(1))


class RandomGuesser(Adversary):
    pass


class FirstElementComparator(Adversary):
    """Queries A and B, challenges with one-entry variants of them, and guesses
    whichever query ciphertext's first body column v_1 is closer to the
    challenge's."""

    n_queries = 2

    def choose_challenge(self, queries, ciphertexts, field, rng):
        self._refs = [c.column(1) for c in ciphertexts]
        m0, m1 = queries[0].copy(), queries[1].copy()
        m0[-1, -1] = (m0[-1, -1] + 1) % field.q
        m1[-1, -1] = (m1[-1, -1] + 1) % field.q
        return m0, m1

    def guess(self, challenge, rng, key=None):
        q = challenge.field.q
        v1 = challenge.column(1)
        d0 = np.abs(centered_array((v1 - self._refs[0]) % q, q)).sum()
        d1 = np.abs(centered_array((v1 - self._refs[1]) % q, q)).sum()
        return 0 if d0 <= d1 else 1


class KeyHolder(Adversary):
    """Harness sanity check: is handed the key matrix and simply decrypts."""

    leak_key = True

    def choose_challenge(self, queries, ciphertexts, field, rng):
        self._pair = super().choose_challenge(queries, ciphertexts, field, rng)
        return self._pair

    def guess(self, challenge, rng, key=None):
        q = challenge.field.q
        plain = decrypt_all(key, challenge).entries
        d = [np.abs(centered_array((plain - mb) % q, q)).sum() for mb in self._pair]
        return 0 if d[0] <= d[1] else 1


@dataclass
class IndCpaResult:
    adversary: str
    trials: int
    wins: int
    expect_null: bool = True

    @property
    def win_rate(self) -> float:
        return self.wins / self.trials

    @property
    def advantage(self) -> float:
        return abs(self.win_rate - 0.5)

    @property
    def sigma(self) -> float:
        """Binomial standard deviation of the win rate under a fair coin."""
        return math.sqrt(0.25 / self.trials)

    def within(self, n_sigma: float = 3.0) -> bool:
        return self.advantage <= n_sigma * self.sigma

    @property
    def ok(self) -> bool:
        # A key-holding adversary must win nearly always, or the harness is broken.
        return self.within(3.0) if self.expect_null else self.advantage >= 0.45

    def line(self) -> str:
        return (
            f"IND-CPA {self.adversary:<24} trials={self.trials} wins={self.wins} "
            f"advantage={self.advantage:.4f} (3 sigma = {3 * self.sigma:.4f})"
        )

    def record(self) -> dict:
        return {
            "name": f"ind-cpa/{self.adversary}",
            "n": self.trials,
            "wins": self.wins,
            "advantage": self.advantage,
            "sigma": self.sigma,
            "pass": self.within(3.0),
            "ok": self.ok,
        }


def ind_cpa_game(
    adversary: Adversary,
    trials: int,
    m: int = 16,
    l: int = 8,
    rng: Rng | None = None,
    field: FieldParams = DEFAULT_FIELD,
    gauss: GaussianSpec | None = None,
) -> IndCpaResult:
    """Play initialize / query / challenge / guess ``trials`` times with fresh
    keys and a fresh hidden bit each time."""
    rng = rng if rng is not None else Rng()
    gauss = gauss if gauss is not None else build_gaussian(q=field.q)
    params = SchemeParams(128, m, field, gauss)
    wins = 0
    for trial in range(trials):
        base = rng.derive(trial)
        challenger, adv_rng = base.derive(0), base.derive(1)
        S = keygen(params, challenger)
        bit = int(challenger.words(1)[0] & np.uint64(1))
        queries = adversary.choose_queries(m, l, field, adv_rng)
        cts = [encrypt(S, MessageMatrix(Q, None, field), challenger, gauss) for Q in queries]
        m0, m1 = adversary.choose_challenge(queries, cts, field, adv_rng)
        if np.array_equal(m0, m1) or any(
            np.array_equal(mb, Q) for mb in (m0, m1) for Q in queries
        ):
            raise GameRuleViolation("challenge messages must differ from each other and from all queries")
        challenge = encrypt(S, MessageMatrix((m0, m1)[bit], None, field), challenger, gauss)
        guess = adversary.guess(challenge, adv_rng, key=S if adversary.leak_key else None)
        wins += guess == bit
    return IndCpaResult(type(adversary).__name__, trials, wins, expect_null=not adversary.leak_key)


# -- collusion ------------------------------------------------------------------


@dataclass(eq=False)
class CollusionView:
    """What a coalition holding the last ``k`` keys knows: those full rows,
    plus the last ``k`` entries of every other key."""

    k: int
    leaked_rows: np.ndarray  # (k, m)
    suffixes: np.ndarray  # (m - k, k)

    @property
    def m(self) -> int:
        return self.suffixes.shape[0] + self.k


def leak(S: SecretKeyMatrix, k: int) -> CollusionView:
    m = S.m
    if not 0 <= k < m:
        raise ValueError(f"k = {k} outside [0, {m})")
    return CollusionView(k, S.rows[m - k :].copy(), S.rows[: m - k, m - k :].copy())


def collusion_residual_streams(
    C: Ciphertext,
    view: CollusionView,
    targets: list[int] | None = None,
    full_keys: dict[int, np.ndarray] | None = None,
) -> np.ndarray:
    """Per target row ``j`` (1-based, ``j <= m-k``) the residual
    ``v_ji - <known part of s_j, matching part of v_{i-1}>``.

    ``full_keys`` overrides the known part of a row with a whole key (used to
    show the test does detect plaintext once the key is really known).
    """
    k, m, q = view.k, C.m, C.field.q
    if view.m != m:
        raise ValueError("collusion view and ciphertext dimensions differ")
    targets = targets if targets is not None else list(range(1, m - k + 1))
    full_keys = full_keys or {}
    prev = C.data[:, :-1]
    out = np.empty((len(targets), C.l), dtype=np.int64)
    for n, j in enumerate(targets):
        if j in full_keys:
            known = matmul_mod(np.asarray(full_keys[j])[None, :], prev, q)[0]
        else:
            if not 1 <= j <= m - k:
                raise ValueError(f"row {j} is leaked or out of range")
            known = matmul_mod(view.suffixes[j - 1][None, :], prev[m - k :], q)[0] if k else 0
        out[n] = (C.data[j - 1, 1:] - known) % q
    return out


def collusion_residuals(
    C: Ciphertext,
    view: CollusionView,
    targets: list[int] | None = None,
    n_buckets: int = DEFAULT_BUCKETS,
    alpha: float = DEFAULT_ALPHA,
    full_keys: dict[int, np.ndarray] | None = None,
    expect_pass: bool = True,
) -> UniformityReport:
    res = collusion_residual_streams(C, view, targets, full_keys)
    label = "collusion residuals" + (" (full key)" if full_keys else f" k={view.k}")
    return chi_square_uniform(res, C.field.q, n_buckets, alpha, label, expect_pass)


# -- canned experiments (used by the CLI `stats` command) -----------------------


def image_message(params: SchemeParams, l: int, rng: Rng) -> MessageMatrix:
    """Every row of the message carries a structured image stream of length l."""
    t = window_width(params.field)
    side = int(math.isqrt(l))
    if side * side != l:
        raise ValueError("l must be a perfect square for the image experiment")
    streams = [encode_image(pattern_image(side, side, j), t) for j in range(params.m)]
    return pack_messages(streams, params.m, rng, params.field)


def suite_uniform(rng: Rng, params: SchemeParams, n: int = 10**6) -> list:
    return [chi_square_uniform(sample_uniform_vector(params.field, n, rng), params.q, name="uniform sampler")]


def suite_gaussian(rng: Rng, params: SchemeParams, n: int = 10**6) -> list:
    g = params.gauss
    draws = sample_gaussians(g, n, rng)
    return [chi_square_fit(draws, g.support, g.probs, name=f"gaussian table fit sigma={g.sigma}")]


def suite_lwe(rng: Rng, params: SchemeParams, n: int = 10**5, dim: int = 32) -> list:
    s = sample_uniform_vector(params.field, dim, rng)
    real = gen_lwe_samples(s, n, params.gauss, rng, params.field)
    decoy = gen_uniform_decoys(n, dim, rng, params.field)
    return [
        chi_square_uniform(real.b, params.q, name="decision-LWE b coordinates"),
        chi_square_uniform(decoy.b, params.q, name="uniform decoy b coordinates"),
    ]


def suite_ciphertext(rng: Rng, params: SchemeParams, m: int = 64, l: int = 4096) -> list:
    p = SchemeParams(params.lam, m, params.field, params.gauss)
    S = keygen(p, rng)
    M = image_message(p, l, rng)
    C = encrypt(S, M, rng, p.gauss)
    return [
        chi_square_uniform(C.data, p.q, name=f"ciphertext entries m={m} l={l}"),
        chi_square_uniform(M.entries, p.q, name="image plaintext", expect_pass=False),
    ]


def suite_collusion(rng: Rng, params: SchemeParams, m: int = 64, l: int = 4096) -> list:
    p = SchemeParams(params.lam, m, params.field, params.gauss)
    S = keygen(p, rng)
    M = image_message(p, l, rng)
    C = encrypt(S, M, rng, p.gauss)
    view = leak(S, m // 2)
    return [
        collusion_residuals(C, view),
        collusion_residuals(C, leak(S, 0)),
        collusion_residuals(C, view, targets=[1], full_keys={1: S.rows[0]}, expect_pass=False),
    ]


def suite_indcpa(rng: Rng, params: SchemeParams, trials: int = 2000) -> list:
    return [
        ind_cpa_game(adv, trials, rng=rng.derive(n), field=params.field, gauss=params.gauss)
        for n, adv in enumerate((RandomGuesser(), FirstElementComparator(), KeyHolder()))
    ]


SUITES = {
    "uniform": suite_uniform,
    "gaussian": suite_gaussian,
    "lwe": suite_lwe,
    "ciphertext": suite_ciphertext,
    "collusion": suite_collusion,
    "indcpa": suite_indcpa,
}


def summary_json(results: list) -> str:
    """Machine-readable summary: one JSON record per line."""
    return "\n".join(json.dumps(r.record()) for r in results)

