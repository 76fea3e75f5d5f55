import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from diamondcap.binary_line import (BinaryInputPolicy, BinaryLineParams, _water_fill,
                                    capacity_binary, capacity_bounds, r_pure_message_binary,
                                    r_separate_binary, separate_joint)
from diamondcap.errors import DomainError
from diamondcap.info_math import binary_convolve, binary_entropy


def _hb(p):
    return 0.0 if p in (0.0, 1.0) else -p * math.log2(p) - (1 - p) * math.log2(1 - p)


FIG2 = BinaryLineParams(0.1, 0.3, 0.5)


@pytest.mark.parametrize("px2", [0.1, 0.3])
def test_all_rates_vanish_on_useless_channel(px2):
    params = BinaryLineParams(0.5, px2, 0.5)
    assert capacity_binary(params).value == 0.0
    assert r_pure_message_binary(params).value == 0.0
    assert r_separate_binary(params, 2).value == 0.0


def test_capacity_noiseless_unconstrained():
    res = capacity_binary(BinaryLineParams(0.0, 0.5, 10.0))
    assert res.value == pytest.approx(0.5, abs=1e-9)
    assert res.argmax["p1"] == pytest.approx(0.5, abs=1e-6)


def test_capacity_bounds_closed_form():
    b1, b2, i_xs = capacity_bounds(FIG2, 0.2, 0.4)
    hx = _hb(0.3) - 0.5 * _hb(0.2) - 0.5 * _hb(0.4)
    assert i_xs == pytest.approx(hx, abs=1e-14)
    assert b1 == pytest.approx(0.5 - hx, abs=1e-14)
    assert b2 == pytest.approx(0.5 * _hb(0.4 * 0.9 + 0.6 * 0.1) - 0.5 * _hb(0.1), abs=1e-14)


def test_capacity_argmax_is_feasible():
    res = capacity_binary(FIG2)
    pol = BinaryInputPolicy(res.argmax["p0"], res.argmax["p1"])
    assert pol.cost_feasible(FIG2)
    assert capacity_bounds(FIG2, pol.p0, pol.p1)[2] <= FIG2.C2 + 1e-12


def test_pure_message_value():
    res = r_pure_message_binary(FIG2)
    assert res.argmax["q"] == pytest.approx(0.3, abs=1e-12)
    expected = 0.5 * (_hb(0.3 * 0.9 + 0.7 * 0.1) - _hb(0.1))
    assert res.value == pytest.approx(expected, abs=1e-12)


def test_pure_message_link_limited():
    assert r_pure_message_binary(BinaryLineParams(0.1, 0.3, 0.0)).value == 0.0
    assert r_pure_message_binary(BinaryLineParams(0.0, 0.5, 0.1)).value == pytest.approx(0.1)


def test_separate_with_one_symbol_is_pure_message():
    for pz in (0.05, 0.1, 0.3):
        params = BinaryLineParams(pz, 0.3, 0.5)
        assert r_separate_binary(params, 1).value == pytest.approx(r_pure_message_binary(params).value, abs=1e-9)


def test_separate_strictly_between():
    pure = r_pure_message_binary(FIG2).value
    sep = r_separate_binary(FIG2, 2).value
    cap = capacity_binary(FIG2).value
    assert pure < sep < cap


@pytest.mark.parametrize("pz", [0.05, 0.2])
def test_separate_nondecreasing_in_m(pz):
    params = BinaryLineParams(pz, 0.3, 0.5)
    vals = [r_separate_binary(params, m).value for m in (1, 2, 3)]
    assert vals[0] <= vals[1] + 1e-9 <= vals[2] + 2e-9


def test_capacity_nonincreasing_in_pz():
    caps = [capacity_binary(BinaryLineParams(pz, 0.3, 0.5)).value for pz in np.arange(0.0, 0.51, 0.05)]
    assert np.all(np.diff(caps) <= 1e-9)


def test_separate_argmax_is_a_valid_description():
    res = r_separate_binary(FIG2, 2)
    np.testing.assert_allclose(res.argmax["desc"].sum(axis=1), 1.0, atol=1e-12)
    assert np.all(res.argmax["desc"] >= 0)


def test_validation():
    with pytest.raises(DomainError):
        BinaryLineParams(0.6, 0.3, 0.5)
    with pytest.raises(DomainError):
        BinaryLineParams(0.1, 0.7, 0.5)
    with pytest.raises(DomainError):
        BinaryLineParams(0.1, 0.3, -1)
    with pytest.raises(DomainError):
        BinaryInputPolicy(1.2, 0.0)
    with pytest.raises(DomainError):
        r_separate_binary(FIG2, 0)


def test_separate_joint_is_normalized():
    rng = np.random.default_rng(0)
    desc = rng.random((4, 2, 3))
    desc /= desc.sum(axis=2, keepdims=True)
    joint = separate_joint(desc, rng.random((4, 3)), 0.2)
    np.testing.assert_allclose(joint.sum(axis=(1, 2, 3, 4)), 1.0, atol=1e-14)


@given(st.integers(0, 2**32 - 1), st.floats(0.0, 0.49), st.floats(0.0, 0.5))
def test_water_fill_beats_grid(seed, pz, px2):
    # oracle: dense grid over (q_0, q_1) with the cost constraint
    rng = np.random.default_rng(seed)
    pi = rng.dirichlet([1, 1])
    w = pi * rng.uniform(0, 1, 2)

    def gain(q):
        return (w * (binary_entropy(binary_convolve(q, pz)) - binary_entropy(pz))).sum(axis=-1)

    q = _water_fill(pi[None], w[None], pz, px2)[0]
    assert pi @ q <= px2 + 1e-9
    g = np.linspace(0, 0.5, 201)
    grid = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    ok = grid @ pi <= px2
    assert gain(q) >= gain(grid[ok]).max() - 1e-9
