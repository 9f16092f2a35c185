import numpy as np
import pytest

from oselab.cocycle import (
    CocycleSystem,
    check_system,
    forward_orbit,
    holder_iterate_constant,
    iterate,
    orbit_segment,
    verify_iterate_holder,
)
from oselab.errors import DomainError, NotInvertible, Overflow
from oselab.systems import SystemSpec, make_system, rotation, torus_metric


def move(sys, x, n):
    for _ in range(abs(n)):
        x = sys.step(x) if n > 0 else sys.inverse_step(x)
    return x


@pytest.fixture
def diag_sys():
    return make_system(SystemSpec("constant", {"matrix": [[2, 0], [0, 0.5]]}))


@pytest.fixture
def perturbed():
    return make_system(SystemSpec("perturbed_diagonal", {"diag": [4, 0.25], "rho": 0.05, "nu": 0.5}))


def test_iterate_examples(diag_sys):
    x = np.array([0.1, 0.7])
    assert np.allclose(iterate(diag_sys, x, 3), np.diag([8, 1 / 8]))
    assert np.array_equal(iterate(diag_sys, x, 0), np.eye(2))
    assert np.allclose(iterate(diag_sys, x, -1), np.diag([0.5, 2]))


def test_iterate_errors():
    dbl = make_system(SystemSpec("doubling"))
    with pytest.raises(NotInvertible):
        iterate(dbl, np.array([0.3]), -1)
    big = make_system(SystemSpec("constant", {"matrix": [[1e10, 0], [0, 1e-10]]}))
    with pytest.raises(Overflow), np.errstate(over="ignore"):
        iterate(big, np.array([0.2, 0.4]), 31)


@pytest.fixture
def smooth_rot():
    # isometric base, so forward and backward orbits carry no round-off drift
    base = adversarial_system(1.0, c=3.0)
    shear = np.array([[1.5, 0.7], [0.0, 1 / 1.5]])
    gen = base.generator
    return CocycleSystem(dim=2, step=base.step, inverse_step=base.inverse_step, metric=torus_metric,
                         generator=lambda x: shear @ gen(x), lipschitz_L=1.0, holder_c0=10.0,
                         holder_nu=1.0, kind="sheared_rotation")


def test_cocycle_identity(smooth_rot, rng):
    perturbed = smooth_rot
    for x in rng.uniform(0, 1, (5, 1)):
        for m, n in [(3, 4), (-5, 7), (12, -20), (-20, -3), (20, 20), (0, -9)]:
            lhs = iterate(perturbed, x, m + n)
            rhs = iterate(perturbed, move(perturbed, x, n), m) @ iterate(perturbed, x, n)
            assert np.linalg.norm(lhs - rhs, 2) <= 1e-9 * max(np.linalg.norm(lhs, 2), 1.0)


def test_inverse_identity(smooth_rot, perturbed, rng):
    x = perturbed.sample(rng, 1)[0]
    assert np.allclose(iterate(perturbed, x, 2) @ iterate(perturbed, move(perturbed, x, 2), -2), np.eye(2))
    perturbed = smooth_rot
    for x in rng.uniform(0, 1, (5, 1)):
        for n in (1, 7, 15):
            prod = iterate(perturbed, x, n) @ iterate(perturbed, move(perturbed, x, n), -n)
            assert np.allclose(prod, np.eye(2), atol=1e-9)


def test_orbit_shapes(perturbed, rng):
    xs = perturbed.sample(rng, 3)
    assert forward_orbit(perturbed, xs, 4).shape == (3, 4, 2)
    seg = orbit_segment(perturbed, xs[0], -2, 3)
    assert seg.shape == (5, 2)
    assert np.allclose(perturbed.step(seg[1]), seg[2])


def test_holder_iterate_constant_examples():
    assert holder_iterate_constant(1, 1, 2, 0.1) == pytest.approx(4.0)
    assert holder_iterate_constant(5, 0.5, 1, 0) == pytest.approx(6.0)
    assert holder_iterate_constant(1e-15, 1, 1, 0) == pytest.approx(1.0)
    for bad in [(0, 1, 2, 0), (1, 0, 2, 0), (1, 1.5, 2, 0), (1, 1, 0.5, 0), (1, 1, 2, -1)]:
        with pytest.raises(DomainError):
            holder_iterate_constant(*bad)


def test_verify_constant_generator(diag_sys, rng):
    xs = diag_sys.sample(rng, 20)
    ys = diag_sys.neighbor(rng, xs, np.full(20, 1e-3))
    rep = verify_iterate_holder(diag_sys, list(zip(xs, ys)), 10)
    assert rep.passed
    assert rep.measured == 0.0


def test_verify_shift_pairs_agreeing_on_ten_symbols(rng):
    mats = [np.diag([2.0, 0.5]), rotation(0.3)]
    sys = make_system(SystemSpec("shift_iid", {"matrices": [m.tolist() for m in mats], "window": 64}))
    xs = sys.sample(rng, 30)
    ys = xs.copy()
    ys[:, 1 + 10] = 1 - ys[:, 1 + 10]
    assert np.allclose(sys.metric(xs, ys), 2.0**-10)
    rep = verify_iterate_holder(sys, list(zip(xs, ys)), 8)
    assert rep.passed and rep.context["violations"] == 0
    # exhaustive oracle: A^8 depends only on the first 8 symbols, so the
    # products of every length-8 word agree at both points of a pair
    for x, y in zip(xs[:3], ys[:3]):
        for n in range(1, 9):
            assert np.array_equal(iterate(sys, x, n), iterate(sys, y, n))


def adversarial_system(c0_scale, c=50.0):

    def gen(x):
        return rotation(c * np.sin(2 * np.pi * x[..., 0]) / (2 * np.pi))

    # |A(x) - A(y)| <= c |x - y|; the declared constant is understated by c0_scale
    return CocycleSystem(
        dim=2,
        step=lambda x: np.mod(x + 0.3819660112501051, 1.0),
        inverse_step=lambda x: np.mod(x - 0.3819660112501051, 1.0),
        metric=torus_metric,
        generator=gen,
        lipschitz_L=1.0,
        holder_c0=c / c0_scale,
        holder_nu=1.0,
        kind="adversarial",
    )


def test_verify_detects_understated_constant(rng):
    xs = rng.uniform(0, 1, (200, 1))
    ys = np.mod(xs + 1e-4, 1.0)
    honest = verify_iterate_holder(adversarial_system(1.0), list(zip(xs, ys)), 5)
    assert honest.passed and honest.context["violations"] == 0
    bad = verify_iterate_holder(adversarial_system(100.0), list(zip(xs, ys)), 5)
    assert not bad.passed
    assert bad.margin < 0
    assert bad.context["violations"] > 0


def test_verify_rejects_zero_distance(diag_sys):
    x = np.array([0.1, 0.2])
    with pytest.raises(DomainError):
        verify_iterate_holder(diag_sys, [(x, x)], 3)


def test_check_system(perturbed, rng):
    check_system(perturbed, perturbed.sample(rng, 50))
