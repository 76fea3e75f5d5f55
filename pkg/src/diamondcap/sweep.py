"""Parameter sweeps over the rate functions, with CSV input and output.

A sweep evaluates a list of *curves* (named rate functions) along one
swept variable with everything else held fixed.  The presets reproduce
the figure setups of the model: the binary example versus ``pz``, and the
Gaussian rates versus SNR, ``C1`` and ``PS``.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import binary_line as bl
from . import gaussian_rates as gr
from .errors import ConfigError, DiamondCapError
from .optimizer import GridConfig

NAN_MARKER = "NaN"


@dataclass(frozen=True)
class Curve:
    """A rate function of one parameter object, plus its default grid."""

    name: str
    family: str  # "binary" or "gaussian"
    fn: Callable
    default_cfg: Optional[GridConfig]
    takes_m: bool = False


CURVES = {
    c.name: c
    for c in (
        Curve("C", "binary", bl.capacity_binary, bl.CAPACITY_GRID),
        Curve("R_separate", "binary", bl.r_separate_binary, bl.SEPARATE_GRID, takes_m=True),
        Curve("R_pure_message", "binary", bl.r_pure_message_binary, bl.PURE_MESSAGE_GRID),
        Curve("R_upp", "gaussian", gr.r_upper_gaussian, gr.MAC_GRID),
        Curve("R_no_SI", "gaussian", gr.r_no_si, gr.MAC_GRID),
        Curve("R_GP_QS", "gaussian", gr.r_gp_qs, gr.MAC_GRID),
        Curve("R_QGP", "gaussian", gr.r_qgp, None),
        Curve("C_limit", "gaussian", gr.c1_limit_capacity, None),
    )
}

BINARY_VARS = ("pz", "px2", "C2")
GAUSSIAN_VARS = ("SNR", "C1", "C2", "P1", "P2", "PS", "N0")

BINARY_DEFAULTS = {"pz": 0.1, "px2": 0.3, "C2": 0.5}
GAUSSIAN_DEFAULTS = {"C1": 1.5, "C2": 1.0, "P1": 1.0, "P2": 1.0, "PS": 0.2, "N0": 0.1}


@dataclass(frozen=True)
class CsvTable:
    """Rectangular numeric table; the first column is the swept variable."""

    header: tuple
    rows: tuple = ()
    name: str = "table"

    def __post_init__(self):
        object.__setattr__(self, "header", tuple(self.header))
        object.__setattr__(self, "rows", tuple(tuple(float(v) for v in r) for r in self.rows))
        for r in self.rows:
            if len(r) != len(self.header):
                raise ConfigError("every row must have one value per column")

    def column(self, name: str) -> np.ndarray:
        j = self.header.index(name)
        return np.array([r[j] for r in self.rows])


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: swept variable and its values, fixed parameters, curves."""

    variable: str
    values: tuple
    fixed: dict = field(default_factory=dict)
    curves: tuple = ()
    name: str = "custom"
    m: int = 2
    grid_points: Optional[int] = None
    refine_rounds: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "curves", tuple(self.curves))
        for c in self.curves:
            if c not in CURVES:
                raise ConfigError(f"unknown curve {c!r}; choose from {sorted(CURVES)}")
        families = {CURVES[c].family for c in self.curves}
        if len(families) > 1:
            raise ConfigError("binary and Gaussian curves cannot share a sweep")
        family = families.pop() if families else self.family_of_variable()
        allowed = BINARY_VARS if family == "binary" else GAUSSIAN_VARS
        if self.variable not in allowed:
            raise ConfigError(f"variable {self.variable!r} does not apply to {family} curves")
        if not self.values:
            raise ConfigError("the swept range is empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ConfigError("swept values must be strictly increasing")
        for k in self.fixed:
            if k not in allowed:
                raise ConfigError(f"parameter {k!r} does not apply to {family} curves")

    def family_of_variable(self) -> str:
        return "binary" if self.variable in BINARY_VARS and self.variable != "C2" else "gaussian"

    @property
    def family(self) -> str:
        return CURVES[self.curves[0]].family if self.curves else self.family_of_variable()


def grid_range(start: float, stop: float, step: float) -> tuple:
    """Inclusive arithmetic range, rounded to kill accumulated drift."""
    if step <= 0:
        raise ConfigError("step must be positive")
    if stop < start:
        raise ConfigError("stop must not be below start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + i * step, 12) for i in range(count))


def presets(name: str) -> list:
    """Sweep specs of a named figure preset."""
    binary = ("C", "R_separate", "R_pure_message")
    gauss = ("R_upp", "R_no_SI", "R_GP_QS", "R_QGP")
    if name == "fig2":
        pz = grid_range(0.01, 0.49, 0.01)
        return [SweepSpec("pz", pz, {"px2": px2, "C2": 0.5}, binary, f"fig2_px2_{px2}") for px2 in (0.1, 0.3)]
    if name in ("fig4", "fig5"):
        snr = grid_range(-10, 30, 1)
        ps_values = (0.2, 0.4) if name == "fig4" else (0.8, 1.2)
        fixed = {"C1": 1.5, "C2": 1.0, "P1": 1.0, "P2": 1.0}
        return [SweepSpec("SNR", snr, {**fixed, "PS": ps}, gauss, f"{name}_PS_{ps}") for ps in ps_values]
    if name == "fig6":
        fixed = {"C2": 1.0, "P1": 1.0, "P2": 1.0, "N0": 0.1, "PS": 1.2}
        return [SweepSpec("C1", grid_range(0, 6, 0.1), fixed, gauss, "fig6")]
    if name == "fig7":
        fixed = {"C1": 1.5, "C2": 1.0, "P1": 1.0, "P2": 1.0, "N0": 0.1}
        return [SweepSpec("PS", grid_range(0.1, 5, 0.1), fixed, gauss, "fig7")]
    raise ConfigError(f"unknown preset {name!r}")


PRESETS = ("fig2", "fig4", "fig5", "fig6", "fig7")


def make_params(family: str, values: dict):
    """Parameter object for a curve family from a flat name -> value map.

    For the Gaussian family an ``SNR`` entry (dB) sets ``N0 = P1 / 10^(SNR/10)``.
    """
    if family == "binary":
        d = {**BINARY_DEFAULTS, **{k: v for k, v in values.items() if k in BINARY_VARS}}
        return bl.BinaryLineParams(d["pz"], d["px2"], d["C2"])
    d = {**GAUSSIAN_DEFAULTS, **{k: v for k, v in values.items() if k in GAUSSIAN_VARS and k != "SNR"}}
    if values.get("SNR") is not None:
        d["N0"] = d["P1"] / 10.0 ** (values["SNR"] / 10.0)
    return gr.GaussianDiamondParams(**d)


def curve_cfg(curve: Curve, grid_points=None, refine_rounds=None) -> Optional[GridConfig]:
    """Default grid of `curve` with optional overrides; None keeps the built-in."""
    if curve.default_cfg is None or (grid_points is None and refine_rounds is None):
        return None
    changes = {}
    if grid_points is not None:
        changes["coarse_points_per_dim"] = grid_points
    if refine_rounds is not None:
        changes["refine_rounds"] = refine_rounds
    return dataclasses.replace(curve.default_cfg, **changes)


def evaluate_curve(name: str, params, m: int = 2, grid_points=None, refine_rounds=None):
    """Run one curve; returns its RateResult (or a float for closed forms)."""
    curve = CURVES[name]
    cfg = curve_cfg(curve, grid_points, refine_rounds)
    if curve.default_cfg is None:
        return curve.fn(params)
    if curve.takes_m:
        return curve.fn(params, m, cfg)
    return curve.fn(params, cfg)


def _row(args):
    spec, x = args
    params = make_params(spec.family, {**spec.fixed, spec.variable: x})
    out = [x]
    failed = False
    for c in spec.curves:
        try:
            out.append(float(evaluate_curve(c, params, spec.m, spec.grid_points, spec.refine_rounds)))
        except (DiamondCapError, ArithmeticError, ValueError):
            out.append(float("nan"))
            failed = True
    return out, failed


def run_sweep(spec: SweepSpec, jobs: int = 1):
    """Evaluate every curve at every swept value.

    Returns ``(table, n_failed)``; a point where a curve fails is kept
    with NaN in that column.  Rows come back in swept order whatever
    `jobs` is.
    """
    if not spec.curves:
        return CsvTable((spec.variable,), (), spec.name), 0
    work = [(spec, x) for x in spec.values]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_row, work))
    else:
        results = [_row(w) for w in work]
    rows = [r for r, _ in results]
    n_failed = sum(f for _, f in results)
    return CsvTable((spec.variable,) + spec.curves, rows, spec.name), n_failed


def format_value(v: float) -> str:
    if math.isnan(v):
        return NAN_MARKER
    return f"{v:#.9g}"


def csv_text(table: CsvTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.header)
    w.writerows([format_value(v) for v in r] for r in table.rows)
    return buf.getvalue()


def emit_csv(table: CsvTable, path) -> None:
    """Write `table` as CSV: header line, 9 significant digits, LF endings.

    `path` may be a filesystem path or a writable text stream.
    """
    text = csv_text(table)
    if hasattr(path, "write"):
        path.write(text)
        return
    with open(path, "w", newline="", encoding="ascii") as fh:
        fh.write(text)


def read_csv(path, name: str = "table") -> CsvTable:
    with open(path, newline="", encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    return CsvTable(rows[0], [[float(v) for v in r] for r in rows[1:] if r], name)
