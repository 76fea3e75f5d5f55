"""Binary line-network example: ``Y = S X2 xor Z`` with ``C1 = 0``.

The state is a fair bit, ``Z ~ Bernoulli(pz)`` and relay 2's input obeys
the average cost ``E[X2] <= px2``.  Three rates are computed:

* the capacity with state at the destination (joint message/state
  binning), a max-min over ``(p0, p1) = (P[X2=1|S=0], P[X2=1|S=1])``;
* the separate scheme, where the source ships an ``m``-ary description
  ``S2`` of the state plus the message;
* the pure-message scheme, where no state information is sent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dm_oracle import DmChannelSpec, mutual_information
from .errors import DomainError
from .info_math import binary_convolve, binary_entropy
from .optimizer import GridConfig, MaxMinProblem, RateResult, maximize_min

# Two-dimensional searches are cheap, so they get extra refinement rounds
# (final spacing ~1e-7 of the unit box).
CAPACITY_GRID = GridConfig(41, 7, 5, 0.15)
SEPARATE_GRID = GridConfig(41, 6, 5, 0.15)
PURE_MESSAGE_GRID = GridConfig(41, 10, 5, 0.15)


@dataclass(frozen=True)
class BinaryLineParams:
    pz: float
    px2: float
    C2: float

    def __post_init__(self):
        if not 0.0 <= self.pz <= 0.5:
            raise DomainError(f"pz must lie in [0, 1/2], got {self.pz}")
        if not 0.0 <= self.px2 <= 0.5:
            raise DomainError(f"px2 must lie in [0, 1/2], got {self.px2}")
        if self.C2 < 0:
            raise DomainError("C2 must be nonnegative")


@dataclass(frozen=True)
class BinaryInputPolicy:
    p0: float
    p1: float

    def __post_init__(self):
        if not (0.0 <= self.p0 <= 1.0 and 0.0 <= self.p1 <= 1.0):
            raise DomainError("p0 and p1 must be probabilities")

    @property
    def mean_input(self) -> float:
        return 0.5 * (self.p0 + self.p1)

    def cost_feasible(self, params: BinaryLineParams) -> bool:
        return self.mean_input <= params.px2 + 1e-12


def capacity_bounds(params: BinaryLineParams, p0, p1):
    """The two capacity bounds ``(C2 - I(X2;S), I(X2;Y|S))`` at ``(p0, p1)``.

    Also returns ``I(X2;S)`` for the link constraint.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    i_xs = binary_entropy(0.5 * (p0 + p1)) - 0.5 * binary_entropy(p0) - 0.5 * binary_entropy(p1)
    i_xy = 0.5 * binary_entropy(binary_convolve(p1, params.pz)) - 0.5 * binary_entropy(params.pz)
    return params.C2 - i_xs, i_xy, i_xs


def capacity_binary(params: BinaryLineParams, cfg: Optional[GridConfig] = None) -> RateResult:
    """Capacity of the binary example with state at the destination.

    Maximizes ``min(C2 - I(X2;S), I(X2;Y|S))`` over ``(p0, p1)`` subject
    to ``I(X2;S) <= C2`` and ``(p0 + p1)/2 <= px2``.
    """

    def evaluate(x):
        b1, b2, i_xs = capacity_bounds(params, x[:, 0], x[:, 1])
        ok = (i_xs <= params.C2 + 1e-12) & (0.5 * (x[:, 0] + x[:, 1]) <= params.px2 + 1e-12)
        return np.stack([b1, b2], axis=1), ok

    problem = MaxMinProblem(
        bounds=[[0.0, 1.0], [0.0, 1.0]],
        objectives=[lambda x: evaluate(x)[0][:, 0], lambda x: evaluate(x)[0][:, 1]],
        feasible=lambda x: evaluate(x)[1],
        evaluator=evaluate,
    )
    res = maximize_min(problem, cfg or CAPACITY_GRID)
    return RateResult(res.value, {"p0": float(res.argmax[0]), "p1": float(res.argmax[1])},
                      res.active_bound, res.value, tuple(float(v) for v in res.bounds_at_argmax))


def r_pure_message_binary(params: BinaryLineParams, cfg: Optional[GridConfig] = None) -> RateResult:
    """Rate when only the message is sent: ``min(C2, max_q I(X2;Y|S))``.

    The inner maximum runs over ``q = P[X2 = 1] <= px2``.
    """
    pz = params.pz

    def gain(x):
        return 0.5 * binary_entropy(binary_convolve(x[:, 0], pz)) - 0.5 * binary_entropy(pz)

    if params.px2 == 0.0:
        q, v = 0.0, 0.0
    else:
        res = maximize_min(MaxMinProblem([[0.0, params.px2]], [gain]), cfg or PURE_MESSAGE_GRID)
        q, v = float(res.argmax[0]), res.value
    bounds = (float(params.C2), float(v))
    return RateResult(min(bounds), {"q": q}, int(np.argmin(bounds)), min(bounds), bounds)


def _water_fill(pi, w, pz, px2, iters=64):
    """Optimal ``P[X2=1 | S2=j]`` for a batch of descriptions.

    Maximizes ``sum_j w_j g(q_j)`` subject to ``sum_j pi_j q_j <= px2``,
    where ``g(q) = H_b(q * pz) - H_b(pz)`` is concave and peaks at 1/2.
    The stationarity condition ``w_j g'(q_j) = lam pi_j`` is solved in
    closed form for each ``lam``; ``lam`` is found by bisection.

    `pi`, `w` have shape ``(n, m)``.
    """
    n, m = pi.shape
    if pz >= 0.5 or px2 <= 0.0:
        return np.zeros((n, m))
    a = 1.0 - 2.0 * pz

    def q_of(lam):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            t = np.where(w > 0, lam[:, None] * pi / w, np.inf)
            c = 1.0 / (1.0 + np.exp2(np.minimum(t / a, 1e3)))
        return np.clip((c - pz) / a, 0.0, 0.5)

    q = np.where(w > 0, 0.5, 0.0)
    need = (pi * q).sum(axis=1) > px2
    if not need.any():
        return q
    lo = np.zeros(n)
    hi = np.ones(n)
    # grow hi until the constraint is met
    for _ in range(1100):
        over = need & ((pi * q_of(hi)).sum(axis=1) > px2)
        if not over.any():
            break
        hi = np.where(over, np.minimum(2.0 * hi, 1e300), hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        over = (pi * q_of(mid)).sum(axis=1) > px2
        lo = np.where(over, mid, lo)
        hi = np.where(over, hi, mid)
    return np.where(need[:, None], q_of(hi), q)


def separate_joint(desc, q, pz):
    """Joint pmf ``p(s, s2, x2, y)`` of the separate scheme.

    `desc` has shape ``(n, 2, m)`` (rows ``p(s2 | s)``), `q` has shape
    ``(n, m)`` (``P[X2 = 1 | S2]``).  Returns shape ``(n, 2, m, 2, 2)``.
    """
    n, _, m = desc.shape
    px = np.stack([1.0 - q, q], axis=2)  # (n, m, x2)
    chan = np.empty((2, 2, 2))  # (s, x2, y)
    for s in range(2):
        for x in range(2):
            y1 = (s * x) ^ 1
            chan[s, x, y1] = pz
            chan[s, x, 1 - y1] = 1.0 - pz
    return 0.5 * desc[:, :, :, None, None] * px[:, None, :, :, None] * chan[None, :, None, :, :]


def _separate_eval(params: BinaryLineParams, desc):
    """Bounds of the separate scheme for descriptions ``desc`` (n, 2, m)."""
    pi = 0.5 * desc.sum(axis=1)          # P[S2 = j]
    w = 0.5 * desc[:, 1, :]              # P[S2 = j, S = 1]
    q = _water_fill(pi, w, params.pz, params.px2)
    joint = separate_joint(desc, q, params.pz)
    i_s2s = mutual_information(joint, (1,), (0,), batch_dims=1, check=False)
    i_xy = mutual_information(joint, (2,), (3,), (0, 1), batch_dims=1, check=False)
    return np.stack([params.C2 - i_s2s, i_xy], axis=1), i_s2s, q


def r_separate_binary(params: BinaryLineParams, m: int = 2,
                      cfg: Optional[GridConfig] = None) -> RateResult:
    """Separate message/state description rate with an ``m``-ary ``S2``.

    The outer search runs over the description ``p(s2 | s)``; for each
    description the relay's inputs ``P[X2=1 | S2]`` are set by solving the
    concave cost-constrained inner problem exactly.  Both bounds,
    ``C2 - I(S2;S)`` and ``I(X2;Y|S,S2)``, are evaluated on the assembled
    joint pmf.  The link constraint ``I(S2;S) <= C2`` is a hard constraint.
    """
    if m < 1:
        raise DomainError("m must be at least 1")

    def decode(x):
        n = len(x)
        f = x.reshape(n, 2, m - 1)
        last = 1.0 - f.sum(axis=2, keepdims=True)
        ok = np.all(last[..., 0] >= -1e-12, axis=1)
        return np.concatenate([f, np.clip(last, 0.0, None)], axis=2), ok

    def evaluate(x):
        desc, ok = decode(x)
        bounds, i_s2s, _ = _separate_eval(params, desc)
        return bounds, ok & (i_s2s <= params.C2 + 1e-12)

    if m == 1:
        desc = np.ones((1, 2, 1))
        bounds, _, q = _separate_eval(params, desc)
        b = tuple(float(v) for v in bounds[0])
        return RateResult(min(b), {"desc": desc[0], "q": q[0]}, int(np.argmin(b)), min(b), b)

    dim = 2 * (m - 1)
    user_cfg = cfg
    if cfg is None:
        pts = min(41, max(9, int(3e4 ** (1.0 / dim))))
        cfg = SEPARATE_GRID if dim <= 2 else GridConfig(pts, 8, 5, max(0.15, 2.5 / (pts - 1)))
    seeds = None
    if m >= 3:
        # an (m-1)-ary optimum with an unused extra symbol is feasible here
        prev = r_separate_binary(params, m - 1, user_cfg)
        seeds = prev.argmax["desc"].reshape(1, -1)
    problem = MaxMinProblem(
        bounds=np.tile([0.0, 1.0], (dim, 1)),
        objectives=[lambda x: evaluate(x)[0][:, 0], lambda x: evaluate(x)[0][:, 1]],
        feasible=lambda x: evaluate(x)[1],
        candidates=seeds,
        evaluator=evaluate,
    )
    res = maximize_min(problem, cfg)
    desc, _ = decode(res.argmax[None])
    _, _, q = _separate_eval(params, desc)
    return RateResult(res.value, {"desc": desc[0], "q": q[0]}, res.active_bound, res.value,
                      tuple(float(v) for v in res.bounds_at_argmax))


def to_dm_spec(params: BinaryLineParams) -> DmChannelSpec:
    """Embed the example as a finite-alphabet channel with ``|X1| = 1``."""
    chan = np.zeros((1, 2, 2, 2))
    for x in range(2):
        for s in range(2):
            y1 = (s * x) ^ 1
            chan[0, x, s, y1] = params.pz
            chan[0, x, s, 1 - y1] = 1.0 - params.pz
    return DmChannelSpec(
        state_pmf=np.array([0.5, 0.5]),
        channel=chan,
        C1=0.0,
        C2=params.C2,
        x2_cost=np.array([0.0, 1.0]),
        budget=params.px2,
    )
