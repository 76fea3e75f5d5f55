import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from diamondcap.binary_line import (BinaryLineParams, capacity_binary, capacity_bounds,
                                    r_pure_message_binary, r_separate_binary, to_dm_spec)
from diamondcap.dm_oracle import (DmChannelSpec, SeparatePolicy, brute_force_capacity,
                                  brute_force_separate, cardinality_limits, eval_separate,
                                  eval_theorem1, mutual_information)
from diamondcap.errors import DomainError
from diamondcap.optimizer import GridConfig
from diamondcap.info_math import binary_entropy


def _hb(p):
    return 0.0 if p in (0.0, 1.0) else -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def _noiseless_x2(C1=0.0, C2=0.5):
    chan = np.zeros((1, 2, 1, 2))
    chan[0, 0, 0, 0] = chan[0, 1, 0, 1] = 1.0
    return DmChannelSpec(np.array([1.0]), chan, C1, C2)


def _random_pmf(rng, shape):
    p = rng.random(shape)
    return p / p.sum()


def _random_rows(rng, shape):
    p = rng.random(shape) + 1e-3
    return p / p.sum(axis=-1, keepdims=True)


# mutual information -----------------------------------------------------------

def test_mi_product_and_copy():
    assert mutual_information(np.outer([0.3, 0.7], [0.6, 0.4]), (0,), (1,)) == pytest.approx(0, abs=1e-15)
    assert mutual_information(np.diag([0.5, 0.5]), (0,), (1,)) == pytest.approx(1.0, abs=1e-15)


def test_mi_bsc():
    pz = 0.1
    joint = 0.5 * np.array([[1 - pz, pz], [pz, 1 - pz]])
    expected = 1 - _hb(pz)
    assert mutual_information(joint, (0,), (1,)) == pytest.approx(expected, abs=1e-14)
    assert expected == pytest.approx(0.531, abs=1e-3)


def test_mi_validation():
    with pytest.raises(DomainError):
        mutual_information(np.full((2, 2), 0.3), (0,), (1,))
    with pytest.raises(DomainError):
        mutual_information(np.full((2, 2), 0.25), (0,), (0,))


@given(st.integers(0, 2**32 - 1))
def test_mi_chain_rule(seed):
    p = _random_pmf(np.random.default_rng(seed), (3, 2, 4))  # axes S, X1, X2
    whole = mutual_information(p, (1, 2), (0,))
    parts = mutual_information(p, (1,), (0,)) + mutual_information(p, (2,), (0,), (1,))
    assert whole == pytest.approx(parts, abs=1e-10)


def test_mi_batches_match_single_evaluation():
    rng = np.random.default_rng(3)
    batch = np.stack([_random_pmf(rng, (2, 3)) for _ in range(5)])
    single = [mutual_information(b, (0,), (1,)) for b in batch]
    np.testing.assert_allclose(mutual_information(batch, (0,), (1,), batch_dims=1), single, atol=1e-14)


# channel spec -----------------------------------------------------------------

def test_spec_text_round_trip():
    spec = to_dm_spec(BinaryLineParams(0.1, 0.3, 0.5))
    back = DmChannelSpec.from_text(spec.to_text())
    np.testing.assert_array_equal(back.channel, spec.channel)
    np.testing.assert_array_equal(back.state_pmf, spec.state_pmf)
    assert (back.C1, back.C2, back.budget) == (spec.C1, spec.C2, spec.budget)


def test_spec_validation():
    with pytest.raises(DomainError):
        DmChannelSpec(np.array([0.5, 0.6]), np.full((1, 1, 2, 1), 1.0), 0, 0)
    with pytest.raises(DomainError):
        DmChannelSpec(np.array([1.0]), np.full((1, 1, 1, 2), 0.7), 0, 0)
    with pytest.raises(DomainError):
        DmChannelSpec(np.array([1.0]), np.full((1, 1, 1, 1), 1.0), -1, 0)
    with pytest.raises(DomainError):
        DmChannelSpec.from_text('{"format": "other"}')


def test_oracle_alphabet_limit():
    chan = np.full((1, 5, 1, 1), 1.0)
    with pytest.raises(DomainError):
        brute_force_capacity(DmChannelSpec(np.array([1.0]), chan, 0, 1))


# joint capacity -----------------------------------------------------------------

def test_state_independent_policy_has_no_link_cost():
    spec = to_dm_spec(BinaryLineParams(0.1, 0.5, 0.5))
    ev = eval_theorem1(spec, np.array([[[0.6, 0.4]], [[0.6, 0.4]]]))
    assert ev.bounds[0] == pytest.approx(spec.C1 + spec.C2, abs=1e-12)
    assert ev.flags["link_common"] and ev.flags["link_total"]


def test_binary_policy_matches_closed_form_terms():
    params = BinaryLineParams(0.1, 0.3, 0.5)
    spec = to_dm_spec(params)
    p0, p1 = 0.0, 0.5
    ev = eval_theorem1(spec, np.array([[[1 - p0, p0]], [[1 - p1, p1]]]))
    b1, b2, _ = capacity_bounds(params, p0, p1)
    np.testing.assert_allclose(ev.bounds, [b1, b2, b2], atol=1e-12)
    # the same terms from first principles
    assert b2 == pytest.approx(0.5 * _hb(0.5 * 0.9 + 0.5 * 0.1) - 0.5 * _hb(0.1), abs=1e-12)


def test_policy_shape_checked():
    with pytest.raises(DomainError):
        eval_theorem1(_noiseless_x2(), np.ones((1, 2, 2)))


def test_brute_force_simple_cases():
    assert brute_force_capacity(_noiseless_x2(0.0, 0.5)).value == pytest.approx(0.5, abs=1e-6)
    assert brute_force_capacity(_noiseless_x2(0.0, 5.0)).value == pytest.approx(1.0, abs=1e-6)
    assert brute_force_capacity(_noiseless_x2(0.0, 0.0)).value == 0.0


def test_brute_force_matches_binary_closed_form():
    params = BinaryLineParams(0.1, 0.3, 0.5)
    brute = brute_force_capacity(to_dm_spec(params))
    assert brute.value == pytest.approx(capacity_binary(params).value, abs=1e-3)
    pol = brute.extra["policy"]
    assert eval_theorem1(to_dm_spec(params), pol).feasible


@given(st.integers(0, 2**32 - 1))
def test_bounds_invariant_under_output_relabeling(seed):
    rng = np.random.default_rng(seed)
    chan = _random_rows(rng, (2, 2, 2, 3))
    spec = DmChannelSpec(np.array([0.4, 0.6]), chan, 0.3, 0.7)
    perm = rng.permutation(3)
    spec_p = DmChannelSpec(spec.state_pmf, chan[..., perm], 0.3, 0.7)
    pol = _random_rows(rng, (2, 4)).reshape(2, 2, 2)
    np.testing.assert_allclose(eval_theorem1(spec, pol).bounds, eval_theorem1(spec_p, pol).bounds, atol=1e-12)


# separate scheme -------------------------------------------------------------------

def _sep_binary(desc, q):
    """Separate policy of the binary example: desc is p(s2|s), q = P[X2=1|s2]."""
    desc = np.asarray(desc, dtype=float)
    m = desc.shape[1]
    relay2 = np.stack([1 - np.asarray(q), np.asarray(q)], axis=-1).reshape(1, 1, m, 2)
    return SeparatePolicy(desc.reshape(2, 1, m), np.ones((1, 1)), relay2)


def test_cardinality_limits():
    assert cardinality_limits(2) == (5, 12)


def test_singleton_descriptions_reduce_to_pure_message():
    params = BinaryLineParams(0.1, 0.3, 0.5)
    ev = eval_separate(to_dm_spec(params), _sep_binary(np.ones((2, 1)), [0.3]))
    assert ev.info["I(S1;S)"] == pytest.approx(0, abs=1e-15)
    assert ev.info["I(S1,S2;S)"] == pytest.approx(0, abs=1e-15)
    assert ev.rate == pytest.approx(r_pure_message_binary(params).value, abs=1e-9)


def test_perfect_description_conditions_like_state():
    params = BinaryLineParams(0.1, 0.5, 1.0)
    spec = to_dm_spec(params)
    q = [0.2, 0.5]
    ev = eval_separate(spec, _sep_binary(np.eye(2), q))
    joint = eval_theorem1(spec, np.array([[[0.8, 0.2]], [[0.5, 0.5]]]))
    assert ev.bounds[2] == pytest.approx(joint.info["I(X1,X2;Y|S)"], abs=1e-12)


def test_separate_validation():
    spec = to_dm_spec(BinaryLineParams(0.1, 0.3, 0.5))
    with pytest.raises(DomainError):
        eval_separate(spec, _sep_binary(np.ones((2, 1)), [0.3]), limits=(1, 0))
    with pytest.raises(DomainError):
        eval_separate(spec, _sep_binary(np.full((2, 2), 0.7), [0.3, 0.3]))


def test_brute_force_separate_m1_is_pure_message():
    params = BinaryLineParams(0.1, 0.3, 0.5)
    brute = brute_force_separate(to_dm_spec(params), (1, 1))
    assert brute.value == pytest.approx(r_pure_message_binary(params).value, abs=1e-4)


def test_brute_force_separate_useless_channel():
    assert brute_force_separate(to_dm_spec(BinaryLineParams(0.5, 0.3, 0.5)), (1, 2), GridConfig(9, 2)).value == pytest.approx(0, abs=1e-12)


def test_brute_force_separate_between_pure_and_capacity():
    params = BinaryLineParams(0.1, 0.3, 0.5)
    brute = brute_force_separate(to_dm_spec(params), (1, 2)).value
    assert brute == pytest.approx(r_separate_binary(params, 2).value, abs=1e-3)
    assert r_pure_message_binary(params).value < brute < capacity_binary(params).value


def test_brute_force_separate_m3_no_gain():
    params = BinaryLineParams(0.1, 0.3, 0.5)
    spec = to_dm_spec(params)
    two = brute_force_separate(spec, (1, 2))
    pol = two.extra["policy"]
    # embed the binary optimum with an unused third description symbol
    desc = np.concatenate([pol.desc[:, 0, :], np.zeros((2, 1))], axis=1)
    q = np.append(pol.relay2[0, 0, :, 1], 0.0)
    seed = np.concatenate([desc[:, :2].ravel(), 1 - q])
    # seeded, so a coarse 7-D grid suffices to test that nothing better is nearby
    three = brute_force_separate(spec, (1, 3), GridConfig(5, 4, 3, 0.3), candidates=seed[None])
    assert three.value >= two.value - 1e-12
    assert three.value - two.value < 1e-3


def test_separate_never_beats_capacity_on_random_specs():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        params = BinaryLineParams(rng.uniform(0, 0.5), rng.uniform(0, 0.5), rng.uniform(0, 1))
        spec = to_dm_spec(params)
        cap = capacity_binary(params).value
        m = int(rng.integers(1, 4))
        ev = eval_separate(spec, _sep_binary(_random_rows(rng, (2, m)), rng.uniform(0, 1, m)))
        if ev.feasible:
            assert ev.rate <= cap + 1e-4


@given(st.integers(0, 2**32 - 1))
def test_data_processing_through_first_description(seed):
    rng = np.random.default_rng(seed)
    spec = DmChannelSpec(np.array([0.3, 0.7]), _random_rows(rng, (2, 2, 2, 2)), 1.0, 1.0)
    sep = SeparatePolicy(_random_rows(rng, (2, 4)).reshape(2, 2, 2), _random_rows(rng, (2, 2)),
                         _random_rows(rng, (2, 2, 2, 2)))
    ev = eval_separate(spec, sep)
    # p(s, s1, x1) built directly from the factors
    p = np.einsum("s,si,ia->sia", spec.state_pmf, sep.desc.sum(axis=2), sep.relay1)
    assert mutual_information(p, (2,), (0,)) <= ev.info["I(S1;S)"] + 1e-12
