"""Monte Carlo run of the binning scheme on the binary example with CSIR.

Relay 2 holds a random codebook of ``ceil(2^(n R~2))`` binary words split
into ``ceil(2^(n R2))`` equal bins, one per message.  Knowing the state
sequence, it sends the word in the message's bin that best matches the
state under the input policy.  The destination, which also knows the
state, picks the most likely word and reports its bin.

Every trial draws a fresh codebook, so the error rate estimates the
average over the random-coding ensemble.  Seeding: codebook ``t`` comes
from ``SeedSequence([master_seed, 0, t])`` and the state, message and
noise of trial ``t`` from ``SeedSequence([master_seed, 1, t])``, both
through numpy's default bit generator (PCG64).  Results therefore do not
depend on the order in which trials run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .binary_line import BinaryInputPolicy, BinaryLineParams, capacity_bounds
from .errors import ConfigError

DEFAULT_CODEBOOK_CAP = 1 << 20

# Added to I(X2;S) for the default bin size (the covering condition is strict).
COVERING_SLACK = 0.1


def _count(rate_bits: float) -> int:
    """``ceil(2^rate_bits)``, robust to round-off at exact powers of two."""
    return max(1, math.ceil(2.0 ** rate_bits - 1e-9))


@dataclass(frozen=True)
class SimConfig:
    """Blocklength, rates, policy and seeding of one simulation run.

    `bin_excess` is the per-symbol binning overhead ``R~2 - R2``; when
    omitted it defaults to ``I(X2;S) + 0.1`` under `policy`.
    """

    n: int
    R2: float
    params: BinaryLineParams
    policy: BinaryInputPolicy
    trials: int = 1000
    master_seed: int = 0
    bin_excess: Optional[float] = None
    codebook_cap: int = DEFAULT_CODEBOOK_CAP

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("blocklength n must be at least 1")
        if self.R2 < 0:
            raise ConfigError("R2 must be nonnegative")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.bin_excess is None:
            _, _, i_xs = capacity_bounds(self.params, self.policy.p0, self.policy.p1)
            object.__setattr__(self, "bin_excess", float(i_xs) + COVERING_SLACK)
        if self.bin_excess < 0:
            raise ConfigError("bin_excess must be nonnegative")

    @property
    def n_bins(self) -> int:
        return _count(self.n * self.R2)

    @property
    def bin_size(self) -> int:
        return _count(self.n * self.bin_excess)

    @property
    def n_codewords(self) -> int:
        return self.n_bins * self.bin_size


@dataclass(frozen=True)
class SimCodebook:
    """Codewords as a ``(n_bins * bin_size, n)`` 0/1 array; bin ``w`` is rows
    ``w * bin_size`` to ``(w + 1) * bin_size - 1``."""

    codewords: np.ndarray
    bin_size: int

    @property
    def n_bins(self) -> int:
        return len(self.codewords) // self.bin_size

    @property
    def n(self) -> int:
        return self.codewords.shape[1]

    def bin_of(self, index: int) -> int:
        return index // self.bin_size

    def bin_words(self, w: int) -> np.ndarray:
        return self.codewords[w * self.bin_size:(w + 1) * self.bin_size]


@dataclass(frozen=True)
class SimResult:
    error_rate: float
    encoder_fallback_rate: float
    mean_cost: float
    trials: int

    HEADER = ("error_rate", "encoder_fallback_rate", "mean_cost", "trials")

    def as_row(self) -> tuple:
        return (self.error_rate, self.encoder_fallback_rate, self.mean_cost, self.trials)


def build_codebook(cfg: SimConfig, index: int = 0) -> SimCodebook:
    """Draw codebook number `index` i.i.d. Bernoulli(``(p0 + p1)/2``).

    Raises
    ------
    ConfigError
        If the codebook would exceed ``cfg.codebook_cap`` words.
    """
    total = cfg.n_codewords
    if total > cfg.codebook_cap:
        raise ConfigError(f"codebook of {total} words exceeds the cap of {cfg.codebook_cap}")
    rng = np.random.default_rng(np.random.SeedSequence([cfg.master_seed, 0, index]))
    words = (rng.random((total, cfg.n)) < cfg.policy.mean_input).astype(np.uint8)
    return SimCodebook(words, cfg.bin_size)


def _log_table(p):
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(p, dtype=float))


def _input_log_probs(policy: BinaryInputPolicy) -> np.ndarray:
    """``log p(x2 | s)`` as a ``(s, x2)`` table."""
    return _log_table([[1.0 - policy.p0, policy.p0], [1.0 - policy.p1, policy.p1]])


def _scores(words: np.ndarray, table: np.ndarray, s: np.ndarray) -> np.ndarray:
    # table[s_i, x_i] summed over i; -inf marks an impossible word
    return table[s[None, :], words].sum(axis=1)


def _density_table(policy: BinaryInputPolicy) -> np.ndarray:
    """``log p(x2 | s) - log p(x2)`` as a ``(s, x2)`` table."""
    q = policy.mean_input
    marg = _log_table([1.0 - q, q])
    with np.errstate(invalid="ignore"):
        t = _input_log_probs(policy) - marg[None, :]
    # symbols the codebook never contains cannot occur; keep them neutral
    return np.where(np.isnan(t), 0.0, t)


def encode(book: SimCodebook, w: int, s, policy: BinaryInputPolicy):
    """Index of the word in bin `w` best matched to the state sequence `s`.

    The match score is ``prod_i p(x_i | s_i) / p(x_i)``, the likelihood
    ratio that joint typicality thresholds; ``p(x)`` is the codebook
    marginal.  Ties go to the lowest index.  Returns ``(index, fallback)``;
    when every word in the bin has zero probability the first word is sent
    and `fallback` is True.
    """
    if not 0 <= w < book.n_bins:
        raise ConfigError(f"message {w} outside 0..{book.n_bins - 1}")
    s = np.asarray(s, dtype=np.intp)
    score = _scores(book.bin_words(w), _density_table(policy), s)
    best = int(np.argmax(score))
    fallback = not np.isfinite(score[best])
    return w * book.bin_size + (0 if fallback else best), fallback


def decode(book: SimCodebook, s, y, params: BinaryLineParams, policy: BinaryInputPolicy) -> int:
    """Bin of the word maximizing ``prod_i p(y_i | x_i, s_i) p(x_i | s_i)``.

    The channel is ``y = s x xor z`` with ``z ~ Bernoulli(pz)``; ties go
    to the lowest codeword index.
    """
    s = np.asarray(s, dtype=np.intp)
    y = np.asarray(y, dtype=np.intp)
    if len(s) != book.n or len(y) != book.n:
        raise ConfigError("state and output must have blocklength n")
    words = book.codewords
    flip = (words & s[None, :]) ^ y[None, :]
    lz = _log_table([1.0 - params.pz, params.pz])
    score = lz[flip].sum(axis=1) + _scores(words, _input_log_probs(policy), s)
    return book.bin_of(int(np.argmax(score)))


def run_sim(cfg: SimConfig) -> SimResult:
    """Estimate the message error rate of the scheme over `cfg.trials` blocks."""
    errors = fallbacks = 0
    weight = 0
    for t in range(cfg.trials):
        book = build_codebook(cfg, t)
        rng = np.random.default_rng(np.random.SeedSequence([cfg.master_seed, 1, t]))
        s = rng.integers(0, 2, cfg.n)
        w = int(rng.integers(0, book.n_bins))
        z = (rng.random(cfg.n) < cfg.params.pz).astype(np.intp)
        idx, fb = encode(book, w, s, cfg.policy)
        x = book.codewords[idx].astype(np.intp)
        y = (s * x) ^ z
        errors += decode(book, s, y, cfg.params, cfg.policy) != w
        fallbacks += fb
        weight += int(x.sum())
    return SimResult(errors / cfg.trials, fallbacks / cfg.trials, weight / (cfg.n * cfg.trials), cfg.trials)
