import math
import warnings

import numpy as np
import pytest

from oselab.errors import DomainError
from oselab.oseledets import Spectrum, default_window, filtration_data, lyapunov_spectrum, splitting
from oselab.regular_blocks import (
    ClauseKind,
    RegularBlockParams,
    block_profile,
    build_block,
    membership_invertible,
    membership_noninvertible,
    norm_growth_check,
)
from oselab.systems import SystemSpec, make_system

L4 = math.log(4)
DIAG_SPEC = Spectrum.from_exponents([-L4, L4])
X0 = np.array([0.123, 0.456])


def const(matrix, base="cat_map"):
    return make_system(SystemSpec("constant", {"matrix": matrix, "base": base}))


def sheared():
    S = np.array([[1.0, 1.0], [0.0, 1.0]])
    return const((S @ np.diag([4, 0.25]) @ np.linalg.inv(S)).tolist())


@pytest.fixture(scope="module")
def perturbed_profile():
    sys = make_system(SystemSpec("perturbed_diagonal", {"diag": [4, 0.25], "rho": 0.01, "nu": 0.5}))
    spec = lyapunov_spectrum(sys, X0)
    pts = sys.sample(np.random.default_rng(5), 200)
    return block_profile(sys, pts, spec, 0.1, 50)


def test_params_validation():
    with pytest.raises(DomainError):
        RegularBlockParams(eps=0.5, ell=1, spectrum=DIAG_SPEC)
    with pytest.raises(DomainError):
        RegularBlockParams(eps=0.1, ell=0.5, spectrum=DIAG_SPEC)
    p = RegularBlockParams(eps=0.1, ell=1, spectrum=DIAG_SPEC)
    assert p.L_bound == pytest.approx(math.exp(4 * L4))
    with pytest.warns(UserWarning):
        RegularBlockParams(eps=0.1, ell=1, spectrum=DIAG_SPEC, L_bound=2.0)


def test_noninvertible_diag_passes_at_ell_one():
    sys = const([[4, 0], [0, 0.25]])
    p = RegularBlockParams(eps=0.1, ell=1, spectrum=DIAG_SPEC, horizon=20)
    m = membership_noninvertible(sys, X0, filtration_data(sys, X0, 40, DIAG_SPEC), p)
    assert m.passed
    assert m.worst_violation >= -1e-9
    assert m.required_ell == pytest.approx(1.0)


def test_noninvertible_sheared_fails_with_clause():
    sys = sheared()
    p = RegularBlockParams(eps=0.1, ell=1, spectrum=DIAG_SPEC, horizon=20)
    m = membership_noninvertible(sys, X0, filtration_data(sys, X0, 40, DIAG_SPEC), p)
    assert not m.passed
    assert m.worst_violation < -1e-9
    assert m.failing_clause is not None
    assert m.failing_clause.kind in (ClauseKind.COMPLEMENT_LOWER, ClauseKind.COMPLEMENT_UPPER,
                                     ClauseKind.FILTRATION_UPPER)
    # raising ell to the reported requirement makes the point pass
    p2 = RegularBlockParams(eps=0.1, ell=m.required_ell * (1 + 1e-9), spectrum=DIAG_SPEC, horizon=20)
    assert membership_noninvertible(sys, X0, filtration_data(sys, X0, 40, DIAG_SPEC), p2).passed


def test_doubling_base_constant_generator():
    sys = const([[4, 0], [0, 0.25]], base="doubling")
    assert not sys.invertible
    x = np.array([0.3])
    p = RegularBlockParams(eps=0.1, ell=1, spectrum=DIAG_SPEC, horizon=20)
    assert membership_noninvertible(sys, x, filtration_data(sys, x, 40, DIAG_SPEC), p).passed


def test_invertible_diag_passes():
    sys = const([[4, 0], [0, 0.25]])
    p = RegularBlockParams(eps=0.1, ell=2, spectrum=DIAG_SPEC, horizon=20)
    m = membership_invertible(sys, X0, splitting(sys, X0, 40, DIAG_SPEC), p)
    assert m.passed


def test_invertible_cat_minimal_ell_from_angle():
    sys = const([[2, 1], [1, 1]])
    spec = lyapunov_spectrum(sys, X0)
    data = splitting(sys, X0, default_window(spec), spec)
    cos = abs(float(data.splitting[0].frame[:, 0] @ data.splitting[1].frame[:, 0]))
    p = RegularBlockParams(eps=0.05, ell=1, spectrum=spec, horizon=10)
    m = membership_invertible(sys, X0, data, p)
    # symmetric matrix: orthogonal eigendirections, so 1/(1 - cos) = 1
    assert m.required_ell == pytest.approx(max(1.0, 1 / (1 - cos)), rel=1e-6)
    assert m.passed


def test_invertible_sheared_needs_angle_ell():
    S = np.array([[1.0, 1.0], [0.0, 1.0]])
    sys = sheared()
    data = splitting(sys, X0, 40, DIAG_SPEC)
    dirs = S / np.linalg.norm(S, axis=0)
    cos = abs(dirs[:, 0] @ dirs[:, 1])
    p = RegularBlockParams(eps=0.1, ell=1, spectrum=DIAG_SPEC, horizon=10)
    m = membership_invertible(sys, X0, data, p)
    assert not m.passed
    assert m.required_ell >= 1 / (1 - cos) * (1 - 1e-9)


def test_norm_growth_examples():
    sys = const([[4, 0], [0, 0.25]])
    p = RegularBlockParams(eps=0.1, ell=1, spectrum=DIAG_SPEC, horizon=10)
    rep = norm_growth_check(sys, X0, p)
    assert rep.passed and rep.margin >= 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        bad = RegularBlockParams(eps=0.1, ell=1, spectrum=DIAG_SPEC, horizon=10, L_bound=1.0)
    assert not norm_growth_check(sys, X0, bad).passed
    p0 = RegularBlockParams(eps=0.1, ell=1, spectrum=DIAG_SPEC, horizon=0)
    rep0 = norm_growth_check(sys, X0, p0)
    assert rep0.measured == pytest.approx(1.0) and rep0.passed


def test_build_block_constant_fraction_one(rng):
    sys = const([[4, 0], [0, 0.25]])
    p = RegularBlockParams(eps=0.1, ell=1, spectrum=DIAG_SPEC, horizon=10)
    res = build_block(sys, sys.sample(rng, 100), None, p)
    assert res.fraction == 1.0
    assert res.summary()["n_passing"] == 100


def test_build_block_data_fn_matches_batch(rng):
    sys = sheared()
    pts = sys.sample(rng, 5)
    p = RegularBlockParams(eps=0.1, ell=3, spectrum=DIAG_SPEC, horizon=8)
    a = build_block(sys, pts, lambda x: splitting(sys, x, 40, DIAG_SPEC), p)
    b = build_block(sys, pts, None, p)
    assert [m.passed for _, m in a] == [m.passed for _, m in b]


def test_horizon_zero_only_identity_clauses(rng):
    sys = sheared()
    p = RegularBlockParams(eps=0.1, ell=4, spectrum=DIAG_SPEC, horizon=0)
    assert build_block(sys, sys.sample(rng, 10), None, p).fraction == 1.0


def test_monotone_in_ell_and_horizon(perturbed_profile):
    prof = perturbed_profile
    ells = [1, 2, 4, 8, 16]
    for h in (10, 25, 50):
        sets = [prof.passing(e, h) for e in ells]
        for a, b in zip(sets, sets[1:]):
            assert np.all(b[a])
    for e in ells:
        sets = [prof.passing(e, h) for h in (10, 25, 50)]
        for a, b in zip(sets, sets[1:]):
            assert np.all(a[b])


def test_norm_growth_follows_membership():
    sys = make_system(SystemSpec("perturbed_diagonal", {"diag": [4, 0.25], "rho": 0.01, "nu": 0.5}))
    spec = lyapunov_spectrum(sys, X0)
    pts = sys.sample(np.random.default_rng(9), 20)
    p = RegularBlockParams(eps=0.1, ell=4, spectrum=spec, horizon=15)
    res = build_block(sys, pts, None, p)
    assert res.fraction > 0
    for x in res.passing_points():
        assert norm_growth_check(sys, x, p).passed


def test_many_exponents_sample_subsets():
    from oselab.errors import SubsetBlowup
    from oselab.regular_blocks import SAMPLED_SUBSETS, _subsets

    # k = 13 has only 2^12 - 1 proper subsets containing index 0
    assert len(_subsets(13, None, None)) == min(SAMPLED_SUBSETS, 2**12 - 1)
    assert len(_subsets(20, None, None)) == SAMPLED_SUBSETS
    assert all(s[0] == 0 and len(s) < 20 for s in _subsets(20, None, None))
    assert len(_subsets(4, None, None)) == 2**3 - 1
    with pytest.raises(SubsetBlowup):
        _subsets(13, True, None)
