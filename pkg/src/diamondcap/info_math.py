"""Scalar and Gaussian information-theoretic primitives.

All logarithms are base 2, so every quantity is in bits (per channel
use).  The scalar helpers accept floats or numpy arrays and broadcast.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, SingularityError

# Blocks whose 2-norm condition number exceeds this are treated as singular.
COND_LIMIT = 1e12

_PROB_TOL = 1e-12


def _as_prob(p, name="p"):
    arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < -_PROB_TOL) or np.any(arr > 1 + _PROB_TOL):
        raise DomainError(f"{name} must lie in [0, 1], got {p!r}")
    return np.clip(arr, 0.0, 1.0)


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def xlog2x(x):
    """Elementwise ``x * log2(x)`` with the convention ``0 log 0 = 0``."""
    x = np.asarray(x, dtype=float)
    safe = np.where(x > 0, x, 1.0)
    return np.where(x > 0, x * np.log2(safe), 0.0)


def binary_entropy(p):
    """Binary entropy ``H_b(p)`` in bits.

    The result is clipped to ``[0, 1]`` so that round-off never produces a
    value above one bit near ``p = 1/2``.

    >>> binary_entropy(0.5)
    1.0
    """
    p = _as_prob(p)
    h = -xlog2x(p) - xlog2x(1.0 - p)
    return _out(np.clip(h, 0.0, 1.0))


def binary_convolve(a, b):
    """Binary convolution ``a * b = a(1 - b) + (1 - a) b``.

    This is the crossover probability of two cascaded binary symmetric
    channels.
    """
    a = _as_prob(a, "a")
    b = _as_prob(b, "b")
    return _out(a * (1.0 - b) + (1.0 - a) * b)


def cap_fn(x):
    """Gaussian capacity function ``C(x) = 1/2 log2(1 + x)``."""
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)) or np.any(x < 0):
        raise DomainError(f"cap_fn requires x >= 0, got {x!r}")
    return _out(0.5 * np.log2(1.0 + x))


@dataclass(frozen=True)
class GaussianJoint:
    """Zero-mean jointly Gaussian vector described by its covariance.

    Attributes
    ----------
    labels : tuple of str
        Variable names, in the order of the rows of `cov`.
    cov : ndarray
        Symmetric positive-semidefinite covariance matrix.
    """

    labels: tuple
    cov: np.ndarray

    def __post_init__(self):
        cov = np.array(self.cov, dtype=float)
        labels = tuple(self.labels)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] != len(labels):
            raise DomainError("covariance must be square with one row per label")
        if len(set(labels)) != len(labels):
            raise DomainError("labels must be unique")
        if not np.allclose(cov, cov.T, rtol=1e-10, atol=1e-12):
            raise DomainError("covariance must be symmetric")
        if np.any(np.diag(cov) < -1e-12):
            raise DomainError("variances must be nonnegative")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "cov", 0.5 * (cov + cov.T))

    @classmethod
    def from_linear(cls, labels: Sequence[str], mixing, source_var) -> "GaussianJoint":
        """Build the joint of ``v = A s`` for independent sources ``s``.

        Parameters
        ----------
        labels : sequence of str
            Names of the rows of `mixing`.
        mixing : array_like, shape (n_vars, n_sources)
            Linear combination defining each variable.
        source_var : array_like, shape (n_sources,)
            Variances of the independent zero-mean sources.
        """
        a = np.asarray(mixing, dtype=float)
        d = np.asarray(source_var, dtype=float)
        if np.any(d < 0):
            raise DomainError("source variances must be nonnegative")
        return cls(tuple(labels), (a * d) @ a.T)

    def index(self, names: Iterable[str]) -> list:
        try:
            return [self.labels.index(n) for n in names]
        except ValueError as exc:
            raise DomainError(f"unknown label in {list(names)!r}") from exc

    def var(self, name: str) -> float:
        i = self.labels.index(name)
        return float(self.cov[i, i])

    def covariance(self, a: str, b: str) -> float:
        return float(self.cov[self.labels.index(a), self.labels.index(b)])

    def block(self, names: Sequence[str]) -> np.ndarray:
        idx = self.index(names)
        return self.cov[np.ix_(idx, idx)]


def _logdet2(block: np.ndarray, what: str) -> float:
    cond = np.linalg.cond(block)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularityError(f"covariance block of {what} is singular (cond={cond:.3g})")
    sign, logdet = np.linalg.slogdet(block)
    if sign <= 0:
        raise SingularityError(f"covariance block of {what} is not positive definite")
    return logdet / np.log(2.0)


def gaussian_mi(joint: GaussianJoint, group_a, group_b) -> float:
    """Mutual information ``I(A; B)`` in bits between two groups of labels.

    Computed as ``1/2 log2(det S_A det S_B / det S_AB)``.

    Raises
    ------
    SingularityError
        If any of the three covariance blocks is (numerically) singular;
        this signals infinite information or a degenerate construction.
    """
    a = [group_a] if isinstance(group_a, str) else list(group_a)
    b = [group_b] if isinstance(group_b, str) else list(group_b)
    if not a or not b:
        raise DomainError("both groups must be nonempty")
    if set(a) & set(b):
        raise DomainError("groups must be disjoint")
    la = _logdet2(joint.block(a), f"{a}")
    lb = _logdet2(joint.block(b), f"{b}")
    lab = _logdet2(joint.block(a + b), f"{a + b}")
    return 0.5 * (la + lb - lab)
