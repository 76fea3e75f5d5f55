"""Brute-force evaluation of the finite-alphabet rate expressions.

Two rates are covered for a channel ``p(y | x1, x2, s)`` with state law
``p(s)`` and link capacities ``C1`` (common) and ``C2`` (private):

* the capacity with state known at source and destination,
  ``max min(C1 + C2 - I(X1,X2;S), C1 - I(X1;S) + I(X2;Y|X1,S), I(X1,X2;Y|S))``
  over ``p(x1, x2 | s)`` subject to ``I(X1;S) <= C1`` and
  ``I(X1,X2;S) <= C1 + C2``;
* the separate message/state description rate, where the source sends a
  successive-refinement description ``(S1, S2)`` of the state and the
  relays' inputs are drawn from ``p(x1 | s1) p(x2 | x1, s1, s2)``.

Policies are parameterized by the free coordinates of each conditional
pmf (the last entry of every row is one minus the others) and optimized
with :func:`diamondcap.optimizer.maximize_min`.  The module exists to
validate closed forms, so alphabets are limited to 4 symbols by default.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, InfeasibleError
from .info_math import xlog2x
from .optimizer import GridConfig, MaxMinProblem, OptResult, maximize_min

MAX_ALPHABET = 4
_NORM_TOL = 1e-9
_CONSTRAINT_TOL = 1e-12

SPEC_FORMAT = "diamondcap.dm_channel/1"


def check_pmf(probs, axis=-1, what="pmf") -> np.ndarray:
    """Validate rows of a (conditional) pmf along `axis`."""
    p = np.asarray(probs, dtype=float)
    if np.any(~np.isfinite(p)) or np.any(p < -_NORM_TOL):
        raise DomainError(f"{what} has negative or non-finite entries")
    if np.any(np.abs(p.sum(axis=axis) - 1.0) > _NORM_TOL):
        raise DomainError(f"{what} rows must sum to 1")
    return np.clip(p, 0.0, None)


@dataclass
class DmChannelSpec:
    """Finite-alphabet diamond channel.

    Attributes
    ----------
    state_pmf : ndarray, shape (|S|,)
    channel : ndarray, shape (|X1|, |X2|, |S|, |Y|)
        ``channel[x1, x2, s, y] = p(y | x1, x2, s)``.
    C1, C2 : float
        Common and private link capacities in bits per channel use.
    x2_cost : ndarray, shape (|X2|,), optional
        Per-symbol cost of relay 2's input.
    budget : float, optional
        Bound on the expected cost ``E[cost(X2)]``.
    """

    state_pmf: np.ndarray
    channel: np.ndarray
    C1: float
    C2: float
    x2_cost: Optional[np.ndarray] = None
    budget: Optional[float] = None

    def __post_init__(self):
        self.state_pmf = check_pmf(self.state_pmf, what="state pmf")
        self.channel = np.asarray(self.channel, dtype=float)
        if self.state_pmf.ndim != 1 or self.channel.ndim != 4:
            raise DomainError("state pmf must be 1-D and channel must be 4-D (x1, x2, s, y)")
        if self.channel.shape[2] != self.state_pmf.shape[0]:
            raise DomainError("channel state axis does not match the state alphabet")
        self.channel = check_pmf(self.channel, what="channel")
        if self.C1 < 0 or self.C2 < 0:
            raise DomainError("link capacities must be nonnegative")
        if (self.x2_cost is None) != (self.budget is None):
            raise DomainError("x2_cost and budget must be given together")
        if self.x2_cost is not None:
            self.x2_cost = np.asarray(self.x2_cost, dtype=float)
            if self.x2_cost.shape != (self.channel.shape[1],):
                raise DomainError("x2_cost needs one entry per X2 symbol")

    @property
    def sizes(self):
        nx1, nx2, ns, ny = self.channel.shape
        return {"S": ns, "X1": nx1, "X2": nx2, "Y": ny}

    def to_text(self) -> str:
        """Serialize to the documented JSON text format."""
        nx1, nx2, ns, ny = self.channel.shape
        doc = {
            "format": SPEC_FORMAT,
            "sizes": self.sizes,
            "C1": float(self.C1),
            "C2": float(self.C2),
            "state_pmf": [float(v) for v in self.state_pmf],
            "channel": [[float(v) for v in row] for row in self.channel.reshape(-1, ny)],
            "cost": None,
        }
        if self.x2_cost is not None:
            doc["cost"] = {"x2_cost": [float(v) for v in self.x2_cost], "budget": float(self.budget)}
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DmChannelSpec":
        doc = json.loads(text)
        if doc.get("format") != SPEC_FORMAT:
            raise DomainError(f"unsupported channel document format {doc.get('format')!r}")
        sz = doc["sizes"]
        shape = (sz["X1"], sz["X2"], sz["S"], sz["Y"])
        rows = np.asarray(doc["channel"], dtype=float)
        if rows.shape != (shape[0] * shape[1] * shape[2], shape[3]):
            raise DomainError("channel table has the wrong number of rows or columns")
        cost = doc.get("cost")
        return cls(
            state_pmf=np.asarray(doc["state_pmf"], dtype=float),
            channel=rows.reshape(shape),
            C1=float(doc["C1"]),
            C2=float(doc["C2"]),
            x2_cost=None if cost is None else np.asarray(cost["x2_cost"], dtype=float),
            budget=None if cost is None else float(cost["budget"]),
        )


# ---------------------------------------------------------------------------
# Mutual information on pmf tensors


def _entropy(joint, keep, nb):
    nvar = joint.ndim - nb
    drop = tuple(nb + i for i in range(nvar) if i not in keep)
    marg = joint.sum(axis=drop) if drop else joint
    axes = tuple(range(nb, marg.ndim))
    if not axes:
        return np.zeros(joint.shape[:nb])
    return -xlog2x(marg).sum(axis=axes)


def mutual_information(joint, group_a, group_b, cond=(), batch_dims: int = 0, check: bool = True):
    """Conditional mutual information ``I(A; B | C)`` in bits.

    Parameters
    ----------
    joint : array_like
        Joint pmf with one axis per variable, optionally preceded by
        `batch_dims` leading axes of independent pmfs.
    group_a, group_b, cond : sequence of int
        Variable axes (counted after the batch axes) forming A, B and C.

    Raises
    ------
    DomainError
        If `joint` is not a valid pmf or the groups overlap.
    """
    p = np.asarray(joint, dtype=float)
    a, b, c = (tuple(g) if not isinstance(g, int) else (g,) for g in (group_a, group_b, cond))
    if set(a) & set(b) or set(a) & set(c) or set(b) & set(c):
        raise DomainError("variable groups must be disjoint")
    if not a or not b:
        raise DomainError("groups A and B must be nonempty")
    if check:
        var_axes = tuple(range(batch_dims, p.ndim))
        if np.any(p < -_NORM_TOL) or np.any(np.abs(p.sum(axis=var_axes) - 1.0) > _NORM_TOL):
            raise DomainError("joint is not a normalized pmf")
    nb = batch_dims
    mi = (_entropy(p, a + c, nb) + _entropy(p, b + c, nb)
          - _entropy(p, a + b + c, nb) - _entropy(p, c, nb))
    # differences of entropies leave ~1e-15 of round-off where I = 0
    mi = np.where(mi < 1e-13, 0.0, mi)
    return float(mi) if np.ndim(mi) == 0 else mi


# ---------------------------------------------------------------------------
# Simplex parameterization


def _decode_simplex(free, rows, k):
    """Map free coordinates to ``rows`` pmfs over ``k`` outcomes.

    Returns the pmf array of shape ``(n, rows, k)`` and a feasibility mask.
    """
    n = free.shape[0]
    if k == 1:
        return np.ones((n, rows, 1)), np.ones(n, dtype=bool)
    f = free.reshape(n, rows, k - 1)
    last = 1.0 - f.sum(axis=2, keepdims=True)
    ok = np.all(last[..., 0] >= -1e-12, axis=1)
    p = np.concatenate([f, np.clip(last, 0.0, None)], axis=2)
    return p, ok


def _check_alphabets(spec: DmChannelSpec, max_alphabet: int):
    if max(spec.sizes.values()) > max_alphabet:
        raise DomainError(f"oracle alphabets are limited to {max_alphabet} symbols")


def oracle_grid(dim: int, budget: int = 100_000) -> GridConfig:
    """Grid schedule for a `dim`-dimensional oracle search.

    Points per axis shrink with dimension so one round stays near `budget`
    evaluations; more refinement rounds make up the resolution.
    """
    pts = int(min(41, max(5, math.floor(budget ** (1.0 / max(dim, 1))))))
    shrink = max(0.15, 2.5 / (pts - 1))
    rounds = max(6, math.ceil(math.log(1e-5 * (pts - 1)) / math.log(shrink)))
    return GridConfig(pts, rounds, 5, shrink)


# ---------------------------------------------------------------------------
# Joint message/state capacity


@dataclass
class BoundEval:
    """Bound values of a max-min rate expression at one policy."""

    bounds: np.ndarray
    flags: dict
    info: dict

    @property
    def feasible(self) -> bool:
        return all(bool(v) for v in self.flags.values())

    @property
    def rate(self) -> float:
        return float(np.min(self.bounds))


def _theorem1_batch(spec: DmChannelSpec, policy):
    """Bounds and constraint slacks for a batch of policies ``(n, S, X1, X2)``."""
    ps = spec.state_pmf
    w = np.transpose(spec.channel, (2, 0, 1, 3))  # (s, x1, x2, y)
    joint = ps[None, :, None, None, None] * policy[..., None] * w[None]
    mi = lambda a, b, c=(): mutual_information(joint, a, b, c, batch_dims=1, check=False)
    i_x1_s = mi((1,), (0,))
    i_x12_s = mi((1, 2), (0,))
    i_x2_y = mi((2,), (3,), (1, 0))
    i_x12_y = mi((1, 2), (3,), (0,))
    bounds = np.stack([
        spec.C1 + spec.C2 - i_x12_s,
        spec.C1 - i_x1_s + i_x2_y,
        i_x12_y,
    ], axis=1)
    slack = {
        "link_common": spec.C1 - i_x1_s,
        "link_total": spec.C1 + spec.C2 - i_x12_s,
    }
    if spec.x2_cost is not None:
        px2 = joint.sum(axis=(1, 2, 4))  # (n, x2)
        slack["cost"] = spec.budget - px2 @ spec.x2_cost
    info = {"I(X1;S)": i_x1_s, "I(X1,X2;S)": i_x12_s, "I(X2;Y|X1,S)": i_x2_y, "I(X1,X2;Y|S)": i_x12_y}
    return bounds, slack, info


def eval_theorem1(spec: DmChannelSpec, policy) -> BoundEval:
    """Evaluate the three capacity bounds at a joint policy ``p(x1, x2 | s)``.

    `policy` has shape ``(|S|, |X1|, |X2|)``.  Flags report the link
    constraints ``C1 >= I(X1;S)`` and ``C1 + C2 >= I(X1,X2;S)`` and, when a
    cost is configured, the expected-cost budget.
    """
    sz = spec.sizes
    pol = np.asarray(policy, dtype=float)
    if pol.shape != (sz["S"], sz["X1"], sz["X2"]):
        raise DomainError(f"policy must have shape {(sz['S'], sz['X1'], sz['X2'])}, got {pol.shape}")
    pol = check_pmf(pol.reshape(sz["S"], -1), what="policy").reshape(pol.shape)
    bounds, slack, info = _theorem1_batch(spec, pol[None])
    flags = {k: bool(v[0] >= -_CONSTRAINT_TOL) for k, v in slack.items()}
    return BoundEval(bounds[0], flags, {k: float(v[0]) for k, v in info.items()})


def _feasible_from_slack(slack):
    ok = None
    for v in slack.values():
        m = v >= -_CONSTRAINT_TOL
        ok = m if ok is None else ok & m
    return ok


def brute_force_capacity(spec: DmChannelSpec, cfg: Optional[GridConfig] = None,
                         max_alphabet: int = MAX_ALPHABET) -> OptResult:
    """Capacity by grid search over all policies ``p(x1, x2 | s)``.

    The returned value is clamped at zero.  ``result.extra["policy"]``
    holds the optimizing policy.
    """
    _check_alphabets(spec, max_alphabet)
    sz = spec.sizes
    ns, k = sz["S"], sz["X1"] * sz["X2"]
    dim = ns * (k - 1)

    def decode(x):
        pol, ok = _decode_simplex(x, ns, k)
        return pol.reshape(len(x), ns, sz["X1"], sz["X2"]), ok

    if dim == 0:
        pol, _ = decode(np.zeros((1, 0)))
        ev = eval_theorem1(spec, pol[0])
        if not ev.feasible:
            raise InfeasibleError("the only policy violates the constraints")
        return OptResult(max(0.0, ev.rate), np.zeros(0), int(np.argmin(ev.bounds)), 1,
                         ev.bounds, extra={"policy": pol[0]})

    def evaluate(x):
        pol, ok = decode(x)
        bounds, slack, _ = _theorem1_batch(spec, pol)
        return bounds, ok & _feasible_from_slack(slack)

    problem = MaxMinProblem(
        bounds=np.tile([0.0, 1.0], (dim, 1)),
        objectives=[(lambda x, j=j: evaluate(x)[0][:, j]) for j in range(3)],
        feasible=lambda x: evaluate(x)[1],
        evaluator=evaluate,
    )
    res = maximize_min(problem, cfg or oracle_grid(dim))
    res.extra = {"policy": decode(res.argmax[None])[0][0]}
    res.value = max(0.0, res.value)
    return res


# ---------------------------------------------------------------------------
# Separate message/state descriptions


@dataclass
class SeparatePolicy:
    """Factors of a separate-description policy.

    Attributes
    ----------
    desc : ndarray, shape (|S|, |S1|, |S2|)
        Successive-refinement test channel ``p(s1, s2 | s)``.
    relay1 : ndarray, shape (|S1|, |X1|)
        ``p(x1 | s1)``.
    relay2 : ndarray, shape (|X1|, |S1|, |S2|, |X2|)
        ``p(x2 | x1, s1, s2)``.
    """

    desc: np.ndarray
    relay1: np.ndarray
    relay2: np.ndarray


def cardinality_limits(n_states: int):
    """Default auxiliary alphabet limits ``(|S1|max, |S2|max)``."""
    return n_states + 3, n_states * (n_states + 3) + 2


def _separate_batch(spec: DmChannelSpec, desc, relay1, relay2):
    ps = spec.state_pmf
    w = spec.channel  # (x1, x2, s, y)
    # axes: s, s1, s2, x1, x2, y
    joint = np.einsum("s,nsij,nia,naijc,acsy->nsijacy", ps, desc, relay1, relay2, w, optimize=True)
    mi = lambda a, b, c=(): mutual_information(joint, a, b, c, batch_dims=1, check=False)
    i_s1 = mi((1,), (0,))
    i_s12 = mi((1, 2), (0,))
    i_x2_y = mi((4,), (5,), (3, 0, 1, 2))
    i_x12_y = mi((3, 4), (5,), (0, 1, 2))
    bounds = np.stack([
        spec.C1 + spec.C2 - i_s12,
        spec.C1 - i_s1 + i_x2_y,
        i_x12_y,
    ], axis=1)
    slack = {"link_common": spec.C1 - i_s1, "link_total": spec.C1 + spec.C2 - i_s12}
    if spec.x2_cost is not None:
        px2 = joint.sum(axis=(1, 2, 3, 4, 6))
        slack["cost"] = spec.budget - px2 @ spec.x2_cost
    info = {"I(S1;S)": i_s1, "I(S1,S2;S)": i_s12, "I(X2;Y|X1,S,S1,S2)": i_x2_y,
            "I(X1,X2;Y|S,S1,S2)": i_x12_y, "joint": joint}
    return bounds, slack, info


def eval_separate(spec: DmChannelSpec, sep: SeparatePolicy,
                  limits: Optional[Sequence[int]] = None) -> BoundEval:
    """Evaluate the three separate-scheme bounds at one policy.

    Flags report ``C1 >= I(S1;S)``, ``C1 + C2 >= I(S1,S2;S)`` and the cost
    budget.  `limits` caps the auxiliary alphabets (defaults to the
    standard cardinality bounds).
    """
    sz = spec.sizes
    desc = np.asarray(sep.desc, dtype=float)
    if desc.ndim != 3 or desc.shape[0] != sz["S"]:
        raise DomainError("desc must have shape (|S|, |S1|, |S2|)")
    k1, k2 = desc.shape[1:]
    lim = limits or cardinality_limits(sz["S"])
    if k1 > lim[0] or k2 > lim[1]:
        raise DomainError(f"auxiliary alphabets {(k1, k2)} exceed limits {tuple(lim)}")
    relay1 = np.asarray(sep.relay1, dtype=float)
    relay2 = np.asarray(sep.relay2, dtype=float)
    if relay1.shape != (k1, sz["X1"]) or relay2.shape != (sz["X1"], k1, k2, sz["X2"]):
        raise DomainError("relay factors have inconsistent shapes")
    desc = check_pmf(desc.reshape(sz["S"], -1), what="p(s1,s2|s)").reshape(desc.shape)
    relay1 = check_pmf(relay1, what="p(x1|s1)")
    relay2 = check_pmf(relay2, what="p(x2|x1,s1,s2)")
    bounds, slack, info = _separate_batch(spec, desc[None], relay1[None], relay2[None])
    flags = {k: bool(v[0] >= -_CONSTRAINT_TOL) for k, v in slack.items()}
    return BoundEval(bounds[0], flags, {k: float(v[0]) for k, v in info.items() if k != "joint"})


def _separate_decoder(spec: DmChannelSpec, k1: int, k2: int):
    sz = spec.sizes
    ns, nx1, nx2 = sz["S"], sz["X1"], sz["X2"]
    d_desc = ns * (k1 * k2 - 1)
    d_r1 = k1 * (nx1 - 1)
    d_r2 = nx1 * k1 * k2 * (nx2 - 1)

    def decode(x):
        n = len(x)
        desc, ok1 = _decode_simplex(x[:, :d_desc], ns, k1 * k2)
        r1, ok2 = _decode_simplex(x[:, d_desc:d_desc + d_r1], k1, nx1)
        r2, ok3 = _decode_simplex(x[:, d_desc + d_r1:], nx1 * k1 * k2, nx2)
        return (desc.reshape(n, ns, k1, k2), r1, r2.reshape(n, nx1, k1, k2, nx2)), ok1 & ok2 & ok3

    return decode, d_desc + d_r1 + d_r2


def brute_force_separate(spec: DmChannelSpec, cardinalities: Sequence[int] = (1, 2),
                         cfg: Optional[GridConfig] = None, candidates=None,
                         max_alphabet: int = MAX_ALPHABET) -> OptResult:
    """Separate-scheme rate by grid search over all factorized policies.

    `cardinalities` is ``(|S1|, |S2|)``.  The value is clamped at zero and
    ``result.extra["policy"]`` holds the optimizing :class:`SeparatePolicy`.
    """
    _check_alphabets(spec, max_alphabet)
    k1, k2 = (int(c) for c in cardinalities)
    lim = cardinality_limits(spec.sizes["S"])
    if k1 < 1 or k2 < 1 or k1 > lim[0] or k2 > lim[1]:
        raise DomainError(f"auxiliary alphabets {(k1, k2)} outside [1, {tuple(lim)}]")
    decode, dim = _separate_decoder(spec, k1, k2)

    if dim == 0:
        (desc, r1, r2), _ = decode(np.zeros((1, 0)))
        pol = SeparatePolicy(desc[0], r1[0], r2[0])
        ev = eval_separate(spec, pol)
        if not ev.feasible:
            raise InfeasibleError("the only policy violates the constraints")
        return OptResult(max(0.0, ev.rate), np.zeros(0), int(np.argmin(ev.bounds)), 1,
                         ev.bounds, extra={"policy": pol})

    def evaluate(x):
        (desc, r1, r2), ok = decode(x)
        bounds, slack, _ = _separate_batch(spec, desc, r1, r2)
        return bounds, ok & _feasible_from_slack(slack)

    problem = MaxMinProblem(
        bounds=np.tile([0.0, 1.0], (dim, 1)),
        objectives=[(lambda x, j=j: evaluate(x)[0][:, j]) for j in range(3)],
        feasible=lambda x: evaluate(x)[1],
        candidates=candidates,
        evaluator=evaluate,
    )
    res = maximize_min(problem, cfg or oracle_grid(dim))
    (desc, r1, r2), _ = decode(res.argmax[None])
    res.extra = {"policy": SeparatePolicy(desc[0], r1[0], r2[0])}
    res.value = max(0.0, res.value)
    return res
