"""End-to-end acceptance checks, one test (or group) per criterion.

The terminal summary lists every criterion as PASS or FAIL.
"""

import math
import time

import numpy as np
import pytest

from diamondcap import binary_line as bl
from diamondcap.binning_sim import SimConfig, run_sim
from diamondcap.dm_oracle import brute_force_capacity
from diamondcap.gaussian_rates import (GaussianDiamondParams, GpQsPoint, c1_limit_capacity,
                                       gp_qs_coeffs, gp_qs_mi_terms, gp_qs_objective, mac_bounds,
                                       r_gp_qs, r_no_si, r_qgp, r_upper_gaussian, snr_params,
                                       verify_gp_qs_terms, verify_qgp)
from diamondcap.sweep import PRESETS, csv_text, grid_range, presets, run_sweep

criterion = pytest.mark.criterion

BIN = bl.BinaryLineParams(0.1, 0.3, 0.5)


def random_params(rng):
    c1, c2 = rng.uniform(0.1, 5.0, 2)
    p1, p2, ps, n0 = rng.uniform(0.1, 10.0, 4)
    return GaussianDiamondParams(c1, c2, p1, p2, ps, n0)


def random_point(rng, p):
    d1 = rng.uniform(p.PS * 2 ** (-2 * p.C1), p.PS)
    d2 = rng.uniform(p.PS * 2 ** (-2 * (p.C1 + p.C2)), d1)
    return GpQsPoint(rng.uniform(0, 1), d1, d2)


def run_presets():
    tables, seconds = {}, {}
    for name in PRESETS:
        t0 = time.perf_counter()
        tables[name] = [run_sweep(spec)[0] for spec in presets(name)]
        seconds[name] = time.perf_counter() - t0
    return tables, seconds


@pytest.fixture(scope="module")
def preset_tables():
    return run_presets()


@pytest.fixture(scope="module")
def gaussian_draws():
    """Achievable rates and the upper bound at 100 seeded parameter draws."""
    rng = np.random.default_rng(2024)
    out = []
    for _ in range(100):
        p = random_params(rng)
        out.append((p, r_upper_gaussian(p).value, r_no_si(p), r_gp_qs(p).value, r_qgp(p).value))
    return out


@criterion(1, "binary closed form matches the brute-force oracle within 1e-3")
def test_binary_oracle_equivalence():
    t0 = time.perf_counter()
    worst = 0.0
    for px2 in (0.1, 0.3):
        for pz in grid_range(0.02, 0.48, 0.02):
            p = bl.BinaryLineParams(pz, px2, 0.5)
            gap = abs(bl.capacity_binary(p).value - brute_force_capacity(bl.to_dm_spec(p)).value)
            worst = max(worst, gap)
    elapsed = time.perf_counter() - t0
    print(f"worst gap {worst:.3g}, {elapsed:.1f} s")
    assert worst < 1e-3
    assert elapsed < 120


@criterion(2, "binary ordering C >= R_separate >= R_pure_message with strict gaps")
def test_binary_ordering(preset_tables):
    tables, seconds = preset_tables
    for t in tables["fig2"]:
        c, sep, pure = t.column("C"), t.column("R_separate"), t.column("R_pure_message")
        assert np.all(c >= sep - 1e-4)
        assert np.all(sep >= pure - 1e-4)
    c = bl.capacity_binary(BIN).value
    sep = bl.r_separate_binary(BIN, 2).value
    pure = bl.r_pure_message_binary(BIN).value
    print(f"at pz=0.1: C={c:.6f} R_separate={sep:.6f} R_pure_message={pure:.6f}")
    assert c - sep > 5e-3
    assert sep - pure > 5e-3
    assert seconds["fig2"] < 300


@criterion(3, "a third description symbol does not raise the separate rate")
def test_separate_saturates_in_m():
    for pz in (0.05, 0.15, 0.25, 0.35, 0.45):
        p = bl.BinaryLineParams(pz, 0.3, 0.5)
        gain = bl.r_separate_binary(p, 3).value - bl.r_separate_binary(p, 2).value
        assert gain < 1e-3, pz


@criterion(4, "QGP closed form equals its covariance evaluation")
def test_qgp_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    worst = max(verify_qgp(random_params(rng)) for _ in range(100))
    elapsed = time.perf_counter() - t0
    print(f"worst residual {worst:.3g}, {elapsed:.2f} s")
    assert worst < 1e-9
    assert elapsed < 10


@criterion(5, "GP-QS layer rates match closed forms and the optimal scaling wins")
def test_gp_qs_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(12)
    worst = 0.0
    scale = np.linspace(0.5, 1.5, 101)
    for _ in range(100):
        p = random_params(rng)
        pt = random_point(rng, p)
        worst = max(worst, *verify_gp_qs_terms(p, pt))
        c = gp_qs_coeffs(p, pt)
        first = [gp_qs_mi_terms(p, pt, alpha1=a * c.alpha1)[0] for a in scale]
        second = [gp_qs_mi_terms(p, pt, alpha2=a * c.alpha2)[1] for a in scale]
        assert int(np.argmax(first)) == 50
        assert int(np.argmax(second)) == 50
    elapsed = time.perf_counter() - t0
    print(f"worst residual {worst:.3g}, {elapsed:.1f} s")
    assert worst < 1e-9
    assert elapsed < 30


@criterion(6, "with a huge first link every rate reaches the cooperative limit")
def test_large_c1_limit():
    p = GaussianDiamondParams(20.0, 1.0, 1.0, 1.0, 1.2, 0.1)
    limit = c1_limit_capacity(p)
    assert limit == pytest.approx(0.5 * math.log2(41.0), abs=1e-12)
    for rate in (r_gp_qs(p).value, r_qgp(p).value, r_upper_gaussian(p).value):
        assert abs(rate - limit) < 1e-3


@criterion(7, "QGP ignores the state power; the other rates do not improve with it")
def test_state_power_invariance(preset_tables):
    for snr in (-10, 0, 10, 30):
        vals = {r_qgp(snr_params(snr, PS=ps)).value for ps in (0.01, 1.0, 100.0)}
        assert len(vals) == 1, snr
    (fig7,) = preset_tables[0]["fig7"]
    for name in ("R_GP_QS", "R_no_SI"):
        assert np.all(np.diff(fig7.column(name)) <= 0), name


@criterion(8, "full-distortion GP-QS reproduces the state-as-noise bounds")
def test_domination_identity(gaussian_draws):
    rng = np.random.default_rng(13)
    for _ in range(100):
        p = random_params(rng)
        rho_p = rng.uniform(0, 1)
        b, ok = gp_qs_objective(p, GpQsPoint(rho_p ** 2, p.PS, p.PS))
        link, mac_sum, private = mac_bounds(p, rho_p, p.N0 + p.PS)[0]
        assert ok
        np.testing.assert_allclose(b, (link, private, mac_sum), atol=1e-12, rtol=0)
    for p, _, no_si, gp_qs, _ in gaussian_draws:
        assert gp_qs >= no_si.value - 1e-6
    for snr in range(-10, 31, 5):
        for ps in (0.2, 0.4, 0.8, 1.2):
            p = snr_params(snr, PS=ps)
            assert r_gp_qs(p).value >= r_no_si(p).value - 1e-6


def _ordering_violations(ps, check):
    bad = []
    for snr in range(-10, 31, 5):
        p = snr_params(snr, PS=ps)
        no_si, gp_qs, qgp = r_no_si(p).value, r_gp_qs(p).value, r_qgp(p).value
        if not check(no_si, gp_qs, qgp):
            bad.append(f"{snr} dB: no_si={no_si:.5f} gp_qs={gp_qs:.5f} qgp={qgp:.5f}")
    return bad


@criterion(9, "scheme orderings versus SNR at the four state powers")
@pytest.mark.parametrize("ps, check", [
    (0.2, lambda no_si, gp_qs, qgp: gp_qs >= no_si and qgp <= no_si),
    (0.4, lambda no_si, gp_qs, qgp: gp_qs >= no_si and qgp >= no_si),
    (0.8, lambda no_si, gp_qs, qgp: qgp >= gp_qs),
    (1.2, lambda no_si, gp_qs, qgp: qgp >= gp_qs),
], ids=["PS0.2", "PS0.4", "PS0.8", "PS1.2"])
def test_snr_orderings(ps, check):
    bad = _ordering_violations(ps, check)
    print("\n".join(bad))
    assert not bad


@criterion(10, "every achievable rate sits below its upper bound")
def test_sandwich(gaussian_draws, preset_tables):
    for p, upper, no_si, gp_qs, qgp in gaussian_draws:
        assert max(no_si.value, gp_qs, qgp) <= upper + 1e-6, p
    for t in preset_tables[0]["fig2"]:
        c = t.column("C")
        assert np.all(t.column("R_separate") <= c + 1e-4)
        assert np.all(t.column("R_pure_message") <= c + 1e-4)


def _sim(n, r2, seed, policy):
    return run_sim(SimConfig(n, r2, BIN, policy, trials=2000, master_seed=seed)).error_rate


@criterion(11, "simulated error falls with blocklength below capacity, stays high above")
def test_simulator_trends():
    t0 = time.perf_counter()
    cap = bl.capacity_binary(BIN)
    policy = bl.BinaryInputPolicy(cap.argmax["p0"], cap.argmax["p1"])
    monotone = 0
    for seed in range(5):
        errs = [_sim(n, 0.5 * cap.value, seed, policy) for n in (8, 12, 16)]
        print(f"seed {seed}: {errs}")
        monotone += errs[0] >= errs[1] >= errs[2]
    assert monotone >= 4
    for seed in range(5):
        assert _sim(16, 2 * cap.value, seed, policy) > 0.3
    assert time.perf_counter() - t0 < 300


@criterion(12, "preset sweeps and seeded runs repeat bit for bit")
def test_reproducibility(preset_tables):
    first = {k: [csv_text(t) for t in v] for k, v in preset_tables[0].items()}
    again = {k: [csv_text(t) for t in v] for k, v in run_presets()[0].items()}
    assert first == again
    cap = bl.capacity_binary(BIN)
    policy = bl.BinaryInputPolicy(cap.argmax["p0"], cap.argmax["p1"])
    cfg = SimConfig(12, 0.5 * cap.value, BIN, policy, trials=300, master_seed=7)
    assert run_sim(cfg) == run_sim(cfg)
    assert brute_force_capacity(bl.to_dm_spec(BIN)).value == brute_force_capacity(bl.to_dm_spec(BIN)).value
