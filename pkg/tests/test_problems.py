import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsengvi.problems import (eval_example1, eval_softsphere, example1_problem, example3_problem,
                              generate_example2, minty_certificate, monotonicity_gap, quartic_prox)
from tsengvi.rng import make_rng
from tsengvi.sets import Box
from tsengvi.space import euclidean


def argmin_by_descent(x, tol=1e-10):
    """Damped gradient descent on ||y||^4/4 + ||x - y||^2/2 (independent oracle)."""
    y = np.zeros_like(x)
    for _ in range(200000):
        g = np.dot(y, y) * y + (y - x)
        if np.linalg.norm(g) <= tol:
            break
        y = y - g / (1 + 3 * np.dot(y, y))
    return y


# ---------------------------------------------------------------- example 1

def test_example1_at_origin():
    np.testing.assert_array_equal(eval_example1(np.zeros(4)), np.zeros(4))


def test_example1_norm_two():
    # rho = 1 solves rho^3 + rho = 2, so y* = x/2 and A(x) = x / (2 * 5)
    x = np.array([2.0, 0.0, 0.0])
    np.testing.assert_allclose(eval_example1(x), x / 10, rtol=1e-14)
    x = np.full(4, 1.0)  # norm 2 as well
    np.testing.assert_allclose(eval_example1(x), x / 10, rtol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 20), st.floats(0.01, 30))
def test_inner_argmin_matches_descent(seed, m, scale):
    x = make_rng(seed).normal(size=m)
    x *= scale / np.linalg.norm(x)
    np.testing.assert_allclose(quartic_prox(x), argmin_by_descent(x), atol=1e-6)


def test_example1_lipschitz_is_finite():
    rng = make_rng(3)
    ratios = []
    for _ in range(10000):
        x, y = rng.uniform(-5, 5, (2, 7))
        ratios.append(np.linalg.norm(eval_example1(x) - eval_example1(y)) / np.linalg.norm(x - y))
    assert np.isfinite(max(ratios))
    assert max(ratios) < 10


def test_example1_problem():
    p = example1_problem(5)
    assert isinstance(p.feasible_set, Box)
    np.testing.assert_array_equal(p.feasible_set.a, -5)
    np.testing.assert_array_equal(p.known_solution, 0)


# ---------------------------------------------------------------- example 2

def test_example2_is_deterministic():
    a, b = generate_example2(6, 11), generate_example2(6, 11)
    assert np.array_equal(a.operator.G, b.operator.G)
    assert not np.array_equal(a.operator.G, generate_example2(6, 12).operator.G)


def test_example2_structure():
    p = generate_example2(8, 3)
    op = p.operator
    np.testing.assert_array_equal(op.M.T, -op.M)
    assert np.all(np.abs(op.M) <= 2) and np.all(np.abs(op.B) <= 2)
    e = np.diag(op.E)
    assert np.all((e >= 0) & (e <= 2))
    np.testing.assert_array_equal(op.E, np.diag(e))
    np.testing.assert_array_equal(op.G, op.B @ op.B.T + op.M + op.E)
    np.testing.assert_array_equal(p.evaluate(np.zeros(8)), 0)
    np.testing.assert_array_equal(p.feasible_set.a, -2)
    np.testing.assert_array_equal(p.feasible_set.b, 5)
    np.testing.assert_array_equal(p.known_solution, 0)


@pytest.mark.parametrize("m", [5, 10, 20])
def test_example2_lipschitz_matches_svd(m):
    p = generate_example2(m, 1)
    assert p.lipschitz == pytest.approx(np.linalg.norm(p.operator.G, 2), rel=1e-10)


def test_eval_counter():
    p = generate_example2(4, 1)
    before = p.eval_count
    p.evaluate(np.ones(4))
    assert p.eval_count == before + 1
    p.project(np.ones(4))
    assert p.projection_count == 1
    q = p.clone()
    assert q.eval_count == 0 and q.operator is p.operator


def test_eval_counter_threadsafe():
    p = generate_example2(3, 1)

    def work():
        for _ in range(500):
            p.evaluate(np.ones(3))

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert p.eval_count == 4000


# ---------------------------------------------------------------- example 3

def test_softsphere_values():
    p = example3_problem()
    sp = p.space
    np.testing.assert_array_equal(eval_softsphere(1.5, sp.zeros(), sp), 0)
    x = np.full(sp.dim, 1.5)  # constant with L2 norm 1.5
    np.testing.assert_allclose(eval_softsphere(1.5, x, sp), 0, atol=1e-14)
    x = np.full(sp.dim, 0.5)
    np.testing.assert_allclose(eval_softsphere(1.5, x, sp), x, rtol=1e-14)


def test_softsphere_along_rays():
    p = example3_problem()
    sp = p.space
    x = np.sin(3 * sp.nodes)
    for t in (0.0, 0.3, 1.0, 2.5):
        expected = (1.5 - t * sp.norm(x)) * t * x
        np.testing.assert_allclose(p.operator(t * x), expected, rtol=1e-13, atol=1e-15)


def test_example3_problem():
    p = example3_problem()
    np.testing.assert_array_equal(p.known_solution, 0)
    assert p.lipschitz is None
    assert p.feasible_set.q == 1.0
    with pytest.raises(ValueError):
        example3_problem(Bcap=1.5, radius=1.0, m_scalar=2.0)


def test_nonmonotone_witness():
    p = example3_problem()
    x = np.full(p.space.dim, 0.72)
    gap = monotonicity_gap(p, x, 1.1 * x)
    closed_form = (1 - 1.1) ** 2 * 0.72 ** 2 * (1.5 - 2.1 * 0.72)
    assert closed_form == pytest.approx(-6.2208e-5, rel=1e-12)
    assert gap < 0
    assert gap == pytest.approx(closed_form, rel=1e-8)


def test_pseudomonotone_spot_check():
    p = example3_problem(N=50)
    sp, C, rng = p.space, p.feasible_set, make_rng(5)
    checked = tried = 0
    while checked < 1000:
        tried += 1
        x = C.sample(rng)
        # draw y near the ray through x; independent draws are almost
        # always orthogonal in 51 dimensions and rarely meet the premise
        y = C.project(rng.uniform(0, 2) * x + 0.2 * rng.normal(size=sp.dim))
        if sp.inner(p.operator(x), y - x) >= 0:
            checked += 1
            assert sp.inner(p.operator(y), y - x) >= -1e-10
    assert tried < 10000


# ---------------------------------------------------------------- Minty

def test_minty_at_solutions():
    p = generate_example2(5, 1)
    assert minty_certificate(p, np.zeros(5), 2000, make_rng(1)) >= -1e-8
    p3 = example3_problem()
    assert minty_certificate(p3, p3.space.zeros(), 500, make_rng(2)) >= -1e-8


def test_minty_rejects_corner():
    found = []
    for seed in range(1, 6):
        p = generate_example2(5, seed)
        corner = np.full(5, 5.0)
        found.append(minty_certificate(p, corner, 200, make_rng(seed)) < 0)
    assert any(found)


def test_minty_candidate_outside():
    p = generate_example2(3, 1)
    with pytest.raises(ValueError):
        minty_certificate(p, np.full(3, 6.0), 10, make_rng(0))
