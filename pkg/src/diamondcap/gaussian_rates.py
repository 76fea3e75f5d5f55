"""Rates for the Gaussian diamond channel with an additive Gaussian state.

The destination sees ``Y = X1 + X2 + S + Z`` with ``S ~ N(0, PS)`` known
non-causally at the source only, ``Z ~ N(0, N0)``, and relay powers
``P1``, ``P2``.  The module provides

* the rate that ignores the state (treats it as noise) and the genie
  upper bound where the state is cancelled at the destination;
* the rate of relays that dirty-paper code against quantized state
  descriptions sent over the links (GP-QS);
* the closed-form rate of quantizing a dirty-paper coded sequence at the
  source (QGP), and the large-``C1`` limit;
* the jointly Gaussian constructions behind the last two rates, with
  covariance-based mutual information checks of their closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateConstructionError, DomainError
from .info_math import COND_LIMIT, GaussianJoint, cap_fn, gaussian_mi
from .optimizer import GridConfig, MaxMinProblem, RateResult, maximize_min

# 1-D problems are cheap; extra rounds push the grid error below 1e-9 bits.
MAC_GRID = GridConfig(41, 12, 5, 0.15)

_TOL = 1e-12


@dataclass(frozen=True)
class GaussianDiamondParams:
    """Link capacities (bits/use), relay powers, state power and noise power."""

    C1: float
    C2: float
    P1: float
    P2: float
    PS: float
    N0: float

    def __post_init__(self):
        for name in ("C1", "C2", "P1", "P2", "PS"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be finite and nonnegative, got {v}")
        if not (self.N0 > 0 and math.isfinite(self.N0)):
            raise DomainError(f"N0 must be positive, got {self.N0}")

    def replace(self, **changes) -> "GaussianDiamondParams":
        d = dict(C1=self.C1, C2=self.C2, P1=self.P1, P2=self.P2, PS=self.PS, N0=self.N0)
        d.update(changes)
        return GaussianDiamondParams(**d)


def snr_params(snr_db: float, C1=1.5, C2=1.0, P=1.0, PS=0.2) -> GaussianDiamondParams:
    """Parameters with ``P1 = P2 = P`` and ``N0`` set from ``10 log10(P/N0)``."""
    return GaussianDiamondParams(C1, C2, P, P, PS, P / 10.0 ** (snr_db / 10.0))


# ---------------------------------------------------------------------------
# State treated as noise / genie upper bound


def mac_bounds(params: GaussianDiamondParams, rho, noise: float):
    """Three bounds of the degraded-message-set MAC rate at correlation `rho`.

    Returns an array of shape ``(len(rho), 3)``: the link sum ``C1 + C2``,
    the MAC sum rate and the relay-2 private rate plus ``C1``.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    p1, p2 = params.P1, params.P2
    sum_rate = cap_fn((p1 + p2 + 2.0 * rho * math.sqrt(p1 * p2)) / noise)
    private = cap_fn((1.0 - rho ** 2) * p2 / noise) + params.C1
    link = np.full_like(rho, params.C1 + params.C2)
    return np.stack([link, np.atleast_1d(sum_rate), np.atleast_1d(private)], axis=1)


def _mac_rate(params, noise, cfg):
    problem = MaxMinProblem(
        bounds=[[0.0, 1.0]],
        objectives=[lambda x, j=j: mac_bounds(params, x[:, 0], noise)[:, j] for j in range(3)],
    )
    res = maximize_min(problem, cfg or MAC_GRID)
    return RateResult(res.value, {"rho": float(res.argmax[0])}, res.active_bound, res.value,
                      tuple(float(v) for v in res.bounds_at_argmax))


def r_no_si(params: GaussianDiamondParams, cfg: Optional[GridConfig] = None) -> RateResult:
    """Rate without using the state: the state is treated as noise."""
    return _mac_rate(params, params.N0 + params.PS, cfg)


def r_upper_gaussian(params: GaussianDiamondParams, cfg: Optional[GridConfig] = None) -> RateResult:
    """Genie upper bound: the state is cancelled at the destination."""
    return _mac_rate(params, params.N0, cfg)


def c1_limit_capacity(params: GaussianDiamondParams) -> float:
    """Capacity as ``C1 -> inf``: full relay cooperation without interference."""
    return cap_fn((math.sqrt(params.P1) + math.sqrt(params.P2)) ** 2 / params.N0)


# ---------------------------------------------------------------------------
# GP coding with quantized states


@dataclass(frozen=True)
class GpQsPoint:
    """Power split `rho` and state-description distortions ``D1 >= D2``."""

    rho: float
    D1: float
    D2: float

    def in_region(self, params: GaussianDiamondParams, tol: float = 1e-12) -> bool:
        ps = params.PS
        scale = tol * max(ps, 1.0)
        return (
            -tol <= self.rho <= 1.0 + tol
            and ps + scale >= self.D1 >= self.D2 - scale
            and self.D2 >= -scale
            and self.D1 >= ps * 2.0 ** (-2.0 * params.C1) - scale
            and self.D2 >= ps * 2.0 ** (-2.0 * (params.C1 + params.C2)) - scale
        )


def _gp_qs_core(params, rho, d1, d2, desc1, desc2):
    rho = np.asarray(rho, dtype=float)
    rbar = 1.0 - rho
    p1, p2, n0 = params.P1, params.P2, params.N0
    private = cap_fn(rbar * p2 / (d2 + n0))
    common = cap_fn((math.sqrt(p1) + np.sqrt(rho * p2)) ** 2 / (rbar * p2 + d1 + n0))
    return np.stack([
        np.broadcast_to(params.C1 + params.C2 - desc2, rho.shape),
        params.C1 - desc1 + private,
        common + private,
    ], axis=-1)


def gp_qs_bounds(params: GaussianDiamondParams, rho, D1, D2):
    """Vectorized GP-QS bounds at ``(rho, D1, D2)``.

    Returns ``(bounds, feasible)`` with ``bounds`` of shape ``(..., 3)``.
    When ``PS = 0`` the description rates ``1/2 log2(PS/D)`` are taken
    as zero and only ``D1 = D2 = 0`` is feasible.
    """
    rho, d1, d2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (rho, D1, D2)))
    ps = params.PS
    if ps == 0.0:
        desc1 = desc2 = np.zeros_like(d1)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            desc1 = np.where(d1 > 0, 0.5 * np.log2(ps / np.where(d1 > 0, d1, 1.0)), np.inf)
            desc2 = np.where(d2 > 0, 0.5 * np.log2(ps / np.where(d2 > 0, d2, 1.0)), np.inf)
    scale = _TOL * max(ps, 1.0)
    feasible = (
        (rho >= -_TOL) & (rho <= 1 + _TOL)
        & (d1 <= ps + scale) & (d2 <= d1 + scale) & (d2 >= -scale)
        & (d1 >= ps * 2.0 ** (-2.0 * params.C1) - scale)
        & (d2 >= ps * 2.0 ** (-2.0 * (params.C1 + params.C2)) - scale)
    )
    with np.errstate(invalid="ignore"):
        bounds = _gp_qs_core(params, np.clip(rho, 0, 1), np.maximum(d1, 0), np.maximum(d2, 0), desc1, desc2)
    return bounds, feasible


def gp_qs_objective(params: GaussianDiamondParams, point: GpQsPoint):
    """The three GP-QS bounds at `point` and whether it lies in the region.

    A point outside the distortion region is reported as infeasible
    rather than raising.
    """
    b, ok = gp_qs_bounds(params, point.rho, point.D1, point.D2)
    return tuple(float(v) for v in b), bool(ok)


def _bisect(f, lo, hi, iters=60):
    """Last point of ``[lo, hi]`` where the decreasing-sign function `f` is >= 0.

    `f(lo) >= 0 > f(hi)` is assumed elementwise.
    """
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ok = f(mid) >= 0
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return lo


def _gp_qs_terms(params, rho, r1, r2):
    """Bounds at description rates ``r_k = 1/2 log2(PS/D_k)`` (``PS > 0``)."""
    d1 = params.PS * np.exp2(-2.0 * r1)
    d2 = params.PS * np.exp2(-2.0 * r2)
    return _gp_qs_core(params, rho, d1, d2, r1, r2)


def _crossing_r1(params, rho):
    """Best first description rate in ``[0, C1]`` for each ``rho``.

    Bound 2 falls and the common-message term rises with ``r1``; neither
    depends on ``r2`` through their difference, so under the extra cap
    ``r1 <= r2`` the optimum is ``min(crossing, r2)``.
    """

    def gap(r1):
        b = _gp_qs_terms(params, rho, r1, r1)
        return b[..., 1] - b[..., 2]

    lo = np.zeros_like(rho)
    top = np.full_like(rho, params.C1)
    at_top = gap(top) >= 0
    at_zero = gap(lo) < 0
    return np.where(at_top, top, np.where(at_zero, 0.0, _bisect(gap, lo, top)))


def _best_rates(params, rho):
    """Optimal ``(r1, r2)`` for each ``rho``.

    Bound 1 falls with ``r2`` while the best of bounds 2 and 3 rises with
    it, so the optimum is again a crossing or an endpoint.
    """
    rho = np.asarray(rho, dtype=float)
    if params.PS == 0.0:
        z = np.zeros_like(rho)
        return z, z
    r1c = _crossing_r1(params, rho)

    def gap(r2):
        b = _gp_qs_terms(params, rho, np.minimum(r1c, r2), r2)
        return b[..., 0] - np.minimum(b[..., 1], b[..., 2])

    lo = np.zeros_like(rho)
    hi = np.full_like(rho, params.C1 + params.C2)
    at_top = gap(hi) >= 0
    at_zero = gap(lo) < 0
    r2 = np.where(at_top, hi, np.where(at_zero, 0.0, _bisect(gap, lo, hi)))
    return np.minimum(r1c, r2), r2


def _gp_qs_profile(params, rho):
    """GP-QS bounds at the optimal distortions for each ``rho``, shape ``(n, 3)``."""
    rho = np.asarray(rho, dtype=float)
    r1, r2 = _best_rates(params, rho)
    if params.PS == 0.0:
        return _gp_qs_core(params, rho, r1, r2, r1, r2)
    return _gp_qs_terms(params, rho, r1, r2)


def r_gp_qs(params: GaussianDiamondParams, cfg: Optional[GridConfig] = None) -> RateResult:
    """GP-QS rate, maximized over ``rho`` and the distortion pair.

    The distortions are handled through the description rates
    ``r_k = 1/2 log2(PS/D_k)``, ranging over ``0 <= r1 <= C1`` and
    ``r1 <= r2 <= C1 + C2``.  For fixed ``rho`` every bound is monotone
    in each rate, so the inner maximum is found exactly by nested
    bisection; the grid search (`cfg`) only runs over ``rho``.  The
    state-as-noise optimum (``D1 = D2 = PS`` at the squared correlation)
    is added as a candidate, so the result never falls below
    :func:`r_no_si`.
    """
    seed_rho = r_no_si(params).argmax["rho"] ** 2
    problem = MaxMinProblem(
        bounds=[[0.0, 1.0]],
        objectives=[lambda x, j=j: _gp_qs_profile(params, x[:, 0])[:, j] for j in range(3)],
        candidates=[[seed_rho]],
        evaluator=lambda x: (_gp_qs_profile(params, x[:, 0]), np.ones(len(x), dtype=bool)),
    )
    res = maximize_min(problem, cfg or MAC_GRID)
    rho = float(res.argmax[0])
    r1, r2 = (float(v[0]) for v in _best_rates(params, np.array([rho])))
    if params.PS == 0.0:
        d1 = d2 = 0.0
    else:
        d1 = params.PS * 2.0 ** (-2.0 * r1)
        d2 = min(d1, params.PS * 2.0 ** (-2.0 * r2))
    return RateResult(res.value, {"rho": rho, "D1": d1, "D2": d2}, res.active_bound, res.value,
                      tuple(float(v) for v in res.bounds_at_argmax))


@dataclass(frozen=True)
class GpQsCoeffs:
    alpha1: float
    alpha2: float


def gp_qs_coeffs(params: GaussianDiamondParams, point: GpQsPoint) -> GpQsCoeffs:
    """MMSE-optimal dirty-paper coefficients of the two relay layers.

    ``alpha1 = (P1 + sqrt(rho P1 P2)) / ((sqrt(P1) + sqrt(rho P2))^2 + rbar P2 + D1 + N0)``
    and ``alpha2 = rbar P2 / (rbar P2 + D2 + N0)``.  The first is written
    with products of square roots so that ``P1 = 0`` gives 0.
    """
    p1, p2, n0 = params.P1, params.P2, params.N0
    rho, rbar = point.rho, 1.0 - point.rho
    num = p1 + math.sqrt(rho * p1 * p2)
    den = (math.sqrt(p1) + math.sqrt(rho * p2)) ** 2 + rbar * p2 + point.D1 + n0
    a2 = rbar * p2 / (rbar * p2 + point.D2 + n0)
    return GpQsCoeffs(num / den, a2)


GP_QS_LABELS = ("S", "S1", "S2", "X1", "X2", "V2", "U1", "U2", "Y", "Y'", "T", "Z")


def build_gp_qs_joint(params: GaussianDiamondParams, point: GpQsPoint,
                      coeffs: Optional[GpQsCoeffs] = None) -> GaussianJoint:
    """Joint Gaussian law of the GP-QS construction.

    The state is split by backward channels ``S = S2 + Z2 = S1 + Z1 + Z2``;
    ``X1 ~ N(0, P1)`` is independent of the state and
    ``X2 = sqrt(rho P2 / P1) X1 + V2``.  Relay 1 uses ``U1 = X1 + a1 S1``;
    relay 2 uses ``U2 = V2 + a2 T`` with ``T = S2 - a1 k S1`` and
    ``k = 1 + sqrt(rho P2 / P1)``.  ``Y' = Y - k U1`` is the output after
    removing the first layer.  Requires ``P1 > 0``.
    """
    if params.P1 <= 0:
        raise DomainError("the GP-QS construction needs P1 > 0")
    if not point.in_region(params):
        raise DomainError(f"{point} is outside the distortion region")
    c = coeffs or gp_qs_coeffs(params, point)
    p1, p2 = params.P1, params.P2
    rho = point.rho
    d1, d2 = min(point.D1, params.PS), min(point.D2, point.D1)
    k = 1.0 + math.sqrt(rho * p2 / p1)
    # sources: G (unit), V2, S1, Z1, Z2, Z
    var = np.array([1.0, (1.0 - rho) * p2, params.PS - d1, d1 - d2, d2, params.N0])
    e = np.eye(6)
    g, v2, s1, z1, z2, z = e
    x1 = math.sqrt(p1) * g
    x2 = math.sqrt(rho * p2) * g + v2
    s2 = s1 + z1
    s = s2 + z2
    y = x1 + x2 + s + z
    u1 = x1 + c.alpha1 * s1
    t = s2 - c.alpha1 * k * s1
    u2 = v2 + c.alpha2 * t
    y_res = v2 + t + z2 + z
    rows = {"S": s, "S1": s1, "S2": s2, "X1": x1, "X2": x2, "V2": v2, "U1": u1,
            "U2": u2, "Y": y, "Y'": y_res, "T": t, "Z": z}
    return GaussianJoint.from_linear(GP_QS_LABELS, [rows[n] for n in GP_QS_LABELS], np.maximum(var, 0.0))


def _independent_subset(joint: GaussianJoint, names):
    """Drop variables that are (numerically) linear functions of earlier ones."""
    keep = []
    for n in names:
        v = joint.var(n)
        if v <= 1e-300:
            continue
        if keep:
            idx = joint.index(keep)
            i = joint.labels.index(n)
            kk = joint.cov[np.ix_(idx, idx)]
            kv = joint.cov[idx, i]
            cond_var = v - kv @ np.linalg.solve(kk, kv)
        else:
            cond_var = v
        if cond_var > v / COND_LIMIT:
            keep.append(n)
    return keep


def reduced_mi(joint: GaussianJoint, group_a, group_b) -> float:
    """``I(A; B)`` after dropping constant and redundant members of each group.

    Redundant members carry no extra information, so the value is
    unchanged; an empty group gives zero.  Genuine singularities (a member
    of A determined by B) still raise.
    """
    a = _independent_subset(joint, [group_a] if isinstance(group_a, str) else list(group_a))
    b = _independent_subset(joint, [group_b] if isinstance(group_b, str) else list(group_b))
    if not a or not b:
        return 0.0
    return gaussian_mi(joint, a, b)


def gp_qs_closed_forms(params: GaussianDiamondParams, point: GpQsPoint):
    """Closed-form values of the two layer rates at the optimal coefficients."""
    rbar = 1.0 - point.rho
    first = cap_fn((math.sqrt(params.P1) + math.sqrt(point.rho * params.P2)) ** 2
                   / (rbar * params.P2 + point.D1 + params.N0))
    second = cap_fn(rbar * params.P2 / (point.D2 + params.N0))
    return first, second


def gp_qs_mi_terms(params: GaussianDiamondParams, point: GpQsPoint,
                   alpha1: Optional[float] = None, alpha2: Optional[float] = None):
    """Layer rates ``I(U1;Y) - I(U1;S1)`` and ``I(U2;Y') - I(U2;T)``.

    Computed from covariance determinants of :func:`build_gp_qs_joint`.
    Coefficients default to the MMSE-optimal ones.
    """
    opt = gp_qs_coeffs(params, point)
    c = GpQsCoeffs(opt.alpha1 if alpha1 is None else alpha1, opt.alpha2 if alpha2 is None else alpha2)
    j = build_gp_qs_joint(params, point, c)
    first = reduced_mi(j, "U1", "Y") - reduced_mi(j, "U1", "S1")
    second = reduced_mi(j, "U2", "Y'") - reduced_mi(j, "U2", "T")
    return first, second


def verify_gp_qs_terms(params: GaussianDiamondParams, point: GpQsPoint):
    """Absolute gaps between the covariance-based layer rates and their closed forms."""
    mi1, mi2 = gp_qs_mi_terms(params, point)
    cf1, cf2 = gp_qs_closed_forms(params, point)
    return abs(mi1 - cf1), abs(mi2 - cf2)


# ---------------------------------------------------------------------------
# Quantized GP coding


@dataclass(frozen=True)
class QgpCoeffs:
    Pv: float
    sigma1_sq: float
    sigma2_sq: float
    alpha1: float
    beta: float


def qgp_coeffs(params: GaussianDiamondParams) -> QgpCoeffs:
    """Parameters of the forward quantization cascade ``V -> X2 -> X1``.

    ``X2 = V + Z2`` and ``X1 = alpha1 X2 + Z1`` with the quantization noise
    powers chosen so that the two description rates meet ``C1 + C2`` and
    ``C1``; ``beta`` is the MMSE weight of ``V`` given ``X1 + X2 + Z``.

    Raises
    ------
    DegenerateConstructionError
        If ``C1 + C2 = 0`` or ``P2 = 0``.
    """
    c1, c12 = params.C1, params.C1 + params.C2
    p1, p2 = params.P1, params.P2
    if c12 <= 0 or p2 <= 0:
        raise DegenerateConstructionError("QGP needs C1 + C2 > 0 and P2 > 0")
    a = 2.0 ** (-2.0 * c1)
    b = 2.0 ** (-2.0 * c12)
    sigma2 = p2 * b
    pv = p2 * (1.0 - b)
    sigma1 = p1 * a * (1.0 - 2.0 ** (-2.0 * params.C2)) / (1.0 - b)
    alpha1 = math.sqrt(p1 * (1.0 - a) / (p2 * (1.0 - b)))
    g = 1.0 + alpha1
    beta = g * pv / (g * g * p2 + sigma1 + params.N0)
    return QgpCoeffs(pv, sigma1, sigma2, alpha1, beta)


def r_qgp(params: GaussianDiamondParams) -> RateResult:
    """Closed-form QGP rate; zero when ``C1 + C2 = 0`` or ``P2 = 0``.

    Does not depend on the state power.
    """
    c1, c12 = params.C1, params.C1 + params.C2
    p1, p2 = params.P1, params.P2
    if c12 <= 0 or p2 <= 0:
        return RateResult(0.0, {}, None)
    a = 2.0 ** (-2.0 * c1)
    b = 2.0 ** (-2.0 * c12)
    common = math.sqrt(p1 * (1.0 - a))
    total = math.sqrt(p2 * (1.0 - b))
    num = (common + total) ** 2
    den = p1 * a + p2 * b * (1.0 + 2.0 * common / total) + params.N0
    v = cap_fn(num / den)
    return RateResult(v, {}, None, v, (v,))


QGP_LABELS = ("S", "V", "Z1", "Z2", "X1", "X2", "U", "Z", "Y")


def build_qgp_joint(params: GaussianDiamondParams, beta: Optional[float] = None) -> GaussianJoint:
    """Joint Gaussian law of the QGP construction (``U = V + beta S``)."""
    c = qgp_coeffs(params)
    bt = c.beta if beta is None else beta
    # sources: V, Z2, Z1, S, Z
    var = np.array([c.Pv, c.sigma2_sq, c.sigma1_sq, params.PS, params.N0])
    v, z2, z1, s, z = np.eye(5)
    x2 = v + z2
    x1 = c.alpha1 * x2 + z1
    u = v + bt * s
    y = x1 + x2 + s + z
    rows = {"S": s, "V": v, "Z1": z1, "Z2": z2, "X1": x1, "X2": x2, "U": u, "Z": z, "Y": y}
    return GaussianJoint.from_linear(QGP_LABELS, [rows[n] for n in QGP_LABELS], var)


def qgp_mi_difference(params: GaussianDiamondParams, beta: Optional[float] = None) -> float:
    """``I(U;Y) - I(U;S)`` of the QGP construction from covariances."""
    j = build_qgp_joint(params, beta)
    return reduced_mi(j, "U", "Y") - reduced_mi(j, "U", "S")


def verify_qgp(params: GaussianDiamondParams) -> float:
    """Gap between the closed-form QGP rate and its covariance evaluation."""
    return abs(r_qgp(params).value - qgp_mi_difference(params))
