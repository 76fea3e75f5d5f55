"""Multi-resolution grid search for low-dimensional max-min problems.

Every rate in this package has the form ``max_x min_k f_k(x)`` over a
small box, possibly with hard feasibility constraints.  The objectives
are nonsmooth, so a deterministic grid search with local refinement is
used instead of gradient methods.

Objective and feasibility callables are *vectorized*: they receive an
array of shape ``(n_points, dim)`` and return an array of shape
``(n_points,)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, InfeasibleError

Objective = Callable[[np.ndarray], np.ndarray]

# Cap on points evaluated in one vectorized call; keeps memory bounded.
_CHUNK = 1 << 16


@dataclass(frozen=True)
class GridConfig:
    """Resolution schedule of the grid search.

    Each refinement round places a grid of ``coarse_points_per_dim`` points
    per axis inside a box of half-width ``shrink_factor**r`` times the
    original half-width, centred on each of the ``refine_top_k`` best
    points found so far.
    """

    coarse_points_per_dim: int = 41
    refine_rounds: int = 3
    refine_top_k: int = 5
    shrink_factor: float = 0.15

    def __post_init__(self):
        if self.coarse_points_per_dim < 2:
            raise DomainError("coarse_points_per_dim must be >= 2")
        if self.refine_rounds < 0 or self.refine_top_k < 1:
            raise DomainError("refine_rounds must be >= 0 and refine_top_k >= 1")
        if not 0.0 < self.shrink_factor < 1.0:
            raise DomainError("shrink_factor must lie in (0, 1)")


DEFAULT_GRID = GridConfig()


@dataclass
class MaxMinProblem:
    """Maximize the minimum of several objectives over a box.

    `candidates` are extra points evaluated alongside the coarse grid
    (warm starts); they are clipped into `bounds`.  `evaluator`, when
    given, computes all bounds and the feasibility mask of a batch in one
    call, ``points -> (values (n, n_objectives), mask (n,))``, and takes
    precedence over `objectives` and `feasible` during the search.
    """

    bounds: np.ndarray
    objectives: Sequence[Objective]
    feasible: Optional[Callable[[np.ndarray], np.ndarray]] = None
    candidates: Optional[np.ndarray] = None
    evaluator: Optional[Callable[[np.ndarray], tuple]] = None

    def __post_init__(self):
        self.bounds = np.atleast_2d(np.asarray(self.bounds, dtype=float))
        if self.bounds.ndim != 2 or self.bounds.shape[1] != 2 or self.bounds.shape[0] < 1:
            raise DomainError("bounds must have shape (dim, 2) with dim >= 1")
        if np.any(self.bounds[:, 1] < self.bounds[:, 0]):
            raise DomainError("each bound interval must satisfy lo <= hi")
        if len(self.objectives) == 0:
            raise DomainError("at least one objective is required")
        if self.candidates is not None:
            c = np.atleast_2d(np.asarray(self.candidates, dtype=float))
            if c.shape[1] != self.dim:
                raise DomainError("candidate points must match the problem dimension")
            self.candidates = np.clip(c, self.bounds[:, 0], self.bounds[:, 1])

    @property
    def dim(self) -> int:
        return self.bounds.shape[0]

    def bound_values(self, points: np.ndarray) -> np.ndarray:
        """Objective values, shape ``(n_points, n_objectives)``."""
        pts = np.atleast_2d(points)
        if self.evaluator is not None:
            return np.asarray(self.evaluator(pts)[0], dtype=float)
        cols = [np.broadcast_to(np.asarray(f(pts), dtype=float), (len(pts),)) for f in self.objectives]
        return np.stack(cols, axis=1)


@dataclass
class OptResult:
    value: float
    argmax: np.ndarray
    active_bound: int
    evaluations: int
    bounds_at_argmax: np.ndarray = field(default=None, repr=False)
    history: list = field(default_factory=list, repr=False)
    extra: dict = field(default_factory=dict, repr=False)


def _axis(lo, hi, n):
    if hi <= lo:
        return np.array([lo])
    return np.unique(np.concatenate(([lo], np.linspace(lo, hi, n), [hi])))


def _grid(lo, hi, n):
    axes = [_axis(a, b, n) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _evaluate(problem: MaxMinProblem, points: np.ndarray):
    """Min-of-objectives at each point; infeasible points come back as -inf."""
    out = np.empty(len(points))
    for start in range(0, len(points), _CHUNK):
        chunk = points[start:start + _CHUNK]
        if problem.evaluator is not None:
            with np.errstate(all="ignore"):
                b, ok = problem.evaluator(chunk)
                v = np.asarray(b, dtype=float).min(axis=1)
            v = np.where(np.isnan(v), -np.inf, v)
            out[start:start + len(chunk)] = np.where(np.asarray(ok, dtype=bool), v, -np.inf)
            continue
        if problem.feasible is not None:
            ok = np.asarray(problem.feasible(chunk), dtype=bool)
        else:
            ok = np.ones(len(chunk), dtype=bool)
        vals = np.full(len(chunk), -np.inf)
        if ok.any():
            with np.errstate(all="ignore"):
                v = problem.bound_values(chunk[ok]).min(axis=1)
            vals[ok] = np.where(np.isnan(v), -np.inf, v)
        out[start:start + len(chunk)] = vals
    return out


def _top(points, values, k):
    """Indices of the k best distinct points; ties go to the smallest point."""
    keys = [points[:, j] for j in range(points.shape[1] - 1, -1, -1)] + [-values]
    order = np.lexsort(keys)
    chosen = []
    seen = set()
    for i in order:
        if not np.isfinite(values[i]):
            break
        key = points[i].tobytes()
        if key in seen:
            continue
        seen.add(key)
        chosen.append(i)
        if len(chosen) == k:
            break
    return chosen


def maximize_min(problem: MaxMinProblem, cfg: GridConfig = DEFAULT_GRID) -> OptResult:
    """Maximize ``min_k f_k(x)`` by multi-resolution grid search.

    The coarse grid always contains the interval endpoints.  After it,
    `cfg.refine_rounds` rounds each lay a shrunken grid around the current
    top-k points.  Infeasible points are skipped.  The best value never
    decreases from one round to the next, and ties are broken in favour of
    the lexicographically smallest point, so the result does not depend on
    evaluation order.

    Raises
    ------
    InfeasibleError
        If no grid point or candidate is feasible.
    """
    lo, hi = problem.bounds[:, 0], problem.bounds[:, 1]
    half = 0.5 * (hi - lo)
    n = cfg.coarse_points_per_dim

    points = _grid(lo, hi, n)
    if problem.candidates is not None:
        points = np.vstack([points, problem.candidates])
    values = _evaluate(problem, points)
    evaluations = len(points)
    history = [float(values.max())]
    if not np.isfinite(values).any():
        raise InfeasibleError("no feasible point on the coarse grid")

    all_pts, all_vals = points, values
    for r in range(1, cfg.refine_rounds + 1):
        top = _top(all_pts, all_vals, cfg.refine_top_k)
        width = half * cfg.shrink_factor ** r
        new = []
        for i in top:
            c = all_pts[i]
            new.append(_grid(np.maximum(lo, c - width), np.minimum(hi, c + width), n))
        pts = np.unique(np.vstack(new), axis=0)
        vals = _evaluate(problem, pts)
        evaluations += len(pts)
        all_pts = np.vstack([all_pts[top], pts])
        all_vals = np.concatenate([all_vals[top], vals])
        history.append(float(all_vals.max()))

    best = _top(all_pts, all_vals, 1)[0]
    x = all_pts[best]
    bvals = problem.bound_values(x[None, :])[0]
    return OptResult(
        value=float(bvals.min()),
        argmax=x.copy(),
        active_bound=int(np.argmin(bvals)),
        evaluations=evaluations,
        bounds_at_argmax=bvals,
        history=history,
    )


@dataclass
class RateResult:
    """An optimized rate in bits per channel use.

    `value` is clamped at zero; `raw_value` keeps the unclamped max-min
    value.  `argmax` maps parameter names to the optimizing values and
    `active_bound` is the index of the binding bound there.
    """

    value: float
    argmax: dict
    active_bound: Optional[int]
    raw_value: float = None
    bounds: tuple = ()

    def __post_init__(self):
        if self.raw_value is None:
            self.raw_value = self.value
        self.value = max(0.0, float(self.value))

    def __float__(self):
        return self.value
