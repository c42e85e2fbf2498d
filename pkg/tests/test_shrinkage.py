import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gscrank import shrinkage
from gscrank.shrinkage import (Family, RelaxationSpec, denoise_group, rho_supergradient,
                               scalar_prox, shrink_stack, surrogate_penalty, update_weights,
                               weighted_sv_prox)
from gscrank.verify import grid_prox_oracle, prox_oracle_errors

HALF = RelaxationSpec(Family.SCHATTEN_P, 0.5)
TWO_THIRDS = RelaxationSpec(Family.SCHATTEN_P, 2.0 / 3.0)
NUCLEAR = RelaxationSpec(Family.NUCLEAR, 1.0)

# (xi, delta) -> minimizer, frozen from the brute-force grid oracle (step 1e-5)
ORACLE_HALF = {(1.0, 3.0): 2.69545, (1.0, 1.6): 1.12954, (0.5, 2.0): 1.8144,
               (2.0, 5.0): 4.53017, (0.3, 0.5): 0.0}
ORACLE_TWO_THIRDS = {(1.0, 3.0): 2.50941, (1.0, 1.6): 0.91273, (0.5, 2.0): 1.72189,
                     (2.0, 5.0): 4.17174, (0.3, 0.5): 0.0}


@pytest.mark.parametrize("key,expected", ORACLE_HALF.items())
def test_half_matches_frozen_oracle(key, expected):
    xi, delta = key
    assert scalar_prox(HALF, xi, delta) == pytest.approx(expected, abs=2e-5)


@pytest.mark.parametrize("key,expected", ORACLE_TWO_THIRDS.items())
def test_two_thirds_matches_frozen_oracle(key, expected):
    xi, delta = key
    assert scalar_prox(TWO_THIRDS, xi, delta) == pytest.approx(expected, abs=2e-5)


def test_half_threshold_location():
    # the jump sits at 1.5 * xi**(2/3); for xi = 1 that is 1.5
    assert scalar_prox(HALF, 1.0, 1.499) == 0.0
    assert scalar_prox(HALF, 1.0, 1.501) > 0.9


def test_two_thirds_threshold_location():
    t = (2.0 / 3.0) * (3.0 * 2.0 ** 3) ** 0.25
    assert scalar_prox(TWO_THIRDS, 1.0, t - 1e-3) == 0.0
    assert scalar_prox(TWO_THIRDS, 1.0, t + 1e-3) > 0.5


def test_nuclear_is_soft_threshold():
    d = np.array([0.0, 0.5, 1.0, 3.0])
    np.testing.assert_array_equal(scalar_prox(NUCLEAR, 1.0, d), [0.0, 0.0, 0.0, 2.0])


def test_active_half_constants_selected_by_oracle():
    # regression: the normalization chosen by the oracle for the 1/2-weighted objective
    assert shrinkage.HALF_CONSTANT_SET == "objective_half"
    errs = {}
    for name in shrinkage.HALF_CONSTANTS:
        d = np.linspace(0, 8, 200)
        got = shrinkage.half_threshold(d, 1.0, constants=name)
        ref = np.array([grid_prox_oracle(1.0, x, 0.5) for x in d])
        errs[name] = np.abs(got - ref).max()
    assert errs["objective_half"] < 1e-4
    assert errs["objective_unit"] > 1e-1


def test_mutated_half_threshold_fails_oracle(monkeypatch):
    t_coef, a_coef = shrinkage.HALF_CONSTANTS["objective_half"]
    monkeypatch.setitem(shrinkage.HALF_CONSTANTS, "objective_half", (1.1 * t_coef, a_coef))
    assert prox_oracle_errors(HALF) > 1e-4


def test_general_exponent_numeric_path():
    spec = RelaxationSpec(Family.SCHATTEN_P, 0.3)
    for xi, d in [(0.5, 2.0), (1.0, 4.0), (2.0, 1.0)]:
        assert scalar_prox(spec, xi, d) == pytest.approx(grid_prox_oracle(xi, d, 0.3), abs=2e-5)


@settings(max_examples=60, deadline=None)
@given(xi=st.floats(0.01, 5.0), delta=st.floats(0.0, 20.0),
       p=st.sampled_from([0.5, 2.0 / 3.0]))
def test_prox_is_global_minimizer(xi, delta, p):
    spec = RelaxationSpec(Family.SCHATTEN_P, p)
    s = float(scalar_prox(spec, xi, delta))
    f = lambda v: 0.5 * (v - delta) ** 2 + xi * v ** p
    grid = np.linspace(0, max(delta, 1e-9), 4001)
    assert f(s) <= f(grid).min() + 1e-6
    assert 0.0 <= s <= delta + 1e-12


@settings(max_examples=40, deadline=None)
@given(xi=st.floats(0.01, 5.0), d1=st.floats(0.0, 20.0), d2=st.floats(0.0, 20.0),
       p=st.sampled_from([0.5, 2.0 / 3.0, 1.0]))
def test_prox_monotone_in_delta(xi, d1, d2, p):
    spec = RelaxationSpec.from_p(p)
    lo, hi = sorted((d1, d2))
    assert scalar_prox(spec, xi, lo) <= scalar_prox(spec, xi, hi) + 1e-12


@settings(max_examples=40, deadline=None)
@given(delta=st.floats(0.1, 20.0), x1=st.floats(0.01, 5.0), x2=st.floats(0.01, 5.0))
def test_prox_nonincreasing_in_weight(delta, x1, x2):
    lo, hi = sorted((x1, x2))
    assert scalar_prox(HALF, hi, delta) <= scalar_prox(HALF, lo, delta) + 1e-12


def test_supergradient_capped_at_epsilon():
    w = rho_supergradient(HALF, np.array([0.0, 0.05, 0.1, 1.0]))
    cap = 0.5 * 0.1 ** -0.5
    np.testing.assert_allclose(w, [cap, cap, cap, 0.5])
    assert np.all(np.isfinite(w))


@pytest.mark.parametrize("family", list(Family))
def test_weights_nondecreasing_for_descending_values(family):
    spec = RelaxationSpec(family, 0.5, truncation_rank=2)
    sigma = np.array([50.0, 20.0, 5.0, 1.0, 0.2, 0.0])
    w = update_weights(spec, sigma)
    assert np.all(np.diff(w) >= -1e-15)


def test_family_weight_definitions():
    sigma = np.array([4.0, 1.0, 0.0])
    np.testing.assert_array_equal(update_weights(NUCLEAR, sigma), [1, 1, 1])
    np.testing.assert_array_equal(
        update_weights(RelaxationSpec(Family.TRUNCATED, 1.0, truncation_rank=1), sigma), [0, 1, 1])
    np.testing.assert_allclose(
        update_weights(RelaxationSpec(Family.WEIGHTED_NUCLEAR, 1.0), sigma), 1 / (sigma + 0.1))
    np.testing.assert_allclose(
        update_weights(RelaxationSpec(Family.WEIGHTED_SCHATTEN_P, 0.5), sigma),
        1 / (np.sqrt(sigma) + 0.1))
    np.testing.assert_allclose(update_weights(HALF, np.array([16.0])), [0.5 * 4.0 ** -0.5])


def test_surrogate_penalty_double_composition():
    assert surrogate_penalty(HALF, np.array([16.0, 1.0])) == pytest.approx(2.0 + 1.0)
    assert surrogate_penalty(RelaxationSpec(Family.TRUNCATED, 1.0, truncation_rank=1),
                             np.array([5.0, 2.0])) == pytest.approx(2.0)


def test_weighted_sv_prox_equals_svt():
    rng = np.random.default_rng(0)
    for _ in range(10):
        Y = rng.standard_normal((36, 60)) * 5
        U, s, Vt = np.linalg.svd(Y, full_matrices=False)
        X, sp = weighted_sv_prox(Y, np.ones(36), NUCLEAR, 3.0)
        assert np.linalg.norm(X - U @ np.diag(np.maximum(s - 3.0, 0)) @ Vt) < 1e-8
        assert np.all(np.diff(sp.values) <= 0)


def test_weighted_sv_prox_rejects_bad_input():
    Y = np.ones((4, 5))
    with pytest.raises(ValueError, match="nondecreasing"):
        weighted_sv_prox(Y, np.array([2.0, 1.0, 1.0, 1.0]), NUCLEAR, 1.0)
    Y[0, 0] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        weighted_sv_prox(Y, np.ones(4), NUCLEAR, 1.0)


def test_denoise_group_zero_lambda_identity():
    Y = np.random.default_rng(1).standard_normal((16, 20))
    X, _ = denoise_group(Y, 0.0, HALF)
    np.testing.assert_allclose(X, Y, atol=1e-12)


def test_denoise_group_rank_one_preserved():
    u = np.arange(1, 17, dtype=float)
    Y = np.outer(u, np.ones(20)) * 10
    X, sp = denoise_group(Y, 1.0, HALF, inner_iters=3)
    assert np.count_nonzero(sp.values) == 1
    assert np.linalg.norm(X - Y) / np.linalg.norm(Y) < 1e-2


def test_denoise_group_objective_nonincreasing():
    rng = np.random.default_rng(2)
    Y = rng.standard_normal((36, 3)) @ rng.standard_normal((3, 60)) * 10
    Y += rng.standard_normal(Y.shape) * 3
    objs = []
    for t in range(1, 7):
        X, sp = denoise_group(Y, 20.0, TWO_THIRDS, inner_iters=t)
        objs.append(0.5 * np.linalg.norm(Y - X) ** 2 + 20.0 * surrogate_penalty(TWO_THIRDS, sp.values))
    assert np.all(np.diff(objs) <= 1e-8)


@pytest.mark.parametrize("shape,scale,lam", [((5, 16, 12), 4.0, 2.0), ((4, 12, 16), 4.0, 2.0),
                                              ((3, 64, 60), 80.0, 300.0)])
def test_shrink_stack_matches_per_group(shape, scale, lam):
    rng = np.random.default_rng(3)
    Y = rng.standard_normal(shape) * scale + 120.0
    Y[0, :, 1] = Y[0, :, 0]  # rank-deficient group
    X, vals = shrink_stack(Y, lam, HALF, inner_iters=2)
    for g in range(shape[0]):
        Xg, sp = denoise_group(Y[g], lam, HALF, inner_iters=2)
        np.testing.assert_allclose(X[g], Xg, atol=1e-8 * np.abs(Y).max())
        np.testing.assert_allclose(vals[g], sp.values, atol=1e-8 * np.abs(Y).max())


def test_shrink_stack_zero_threshold_is_identity():
    Y = np.random.default_rng(4).uniform(0, 255, (3, 64, 60))
    X, _ = shrink_stack(Y, 0.0, HALF)
    assert np.abs(X - Y).max() <= 1e-9


def test_spec_validation():
    with pytest.raises(ValueError):
        RelaxationSpec(Family.SCHATTEN_P, 0.0)
    with pytest.raises(ValueError):
        RelaxationSpec(Family.SCHATTEN_P, 0.5, epsilon=0.0)
    assert RelaxationSpec.from_p(1.0).family is Family.NUCLEAR
    assert RelaxationSpec.from_p(0.6667).p == pytest.approx(2 / 3, abs=1e-12)
    assert math.isclose(RelaxationSpec.from_p(0.5).exponent, 0.5)
