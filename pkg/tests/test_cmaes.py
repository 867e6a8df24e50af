import numpy as np
import pytest

from posesim.cmaes import Cmaes, cmaes_minimize


def sphere(x):
    return float(x @ x)


def rosenbrock(x):
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


def test_sphere_10d_converges():
    x, f, hist = cmaes_minimize(sphere, np.ones(10), 0.3, population=20,
                                iterations=300, seed=1)
    assert f < 1e-10


def test_quadratic_1d_finds_minimum():
    x, f, hist = cmaes_minimize(lambda v: float((v[0] - 3.0) ** 2),
                                np.zeros(1), 0.5, population=8,
                                iterations=200, seed=2)
    assert abs(x[0] - 3.0) < 1e-5


def test_rosenbrock_5d_converges():
    x, f, hist = cmaes_minimize(rosenbrock, np.zeros(5), 0.3, population=16,
                                iterations=2000, seed=3)
    assert f < 1e-6
    assert np.allclose(x, 1.0, atol=1e-2)


def test_best_so_far_monotone_on_noisy_objective():
    rng_holder = np.random.default_rng(7)

    def nasty(x):
        return float(np.sin(x @ x * 3.0) + rng_holder.normal() * 0.5)

    _, _, hist = cmaes_minimize(nasty, np.zeros(4), 0.5, population=12,
                                iterations=60, seed=4)
    bsf = np.asarray(hist.best_so_far)
    assert np.all(np.diff(bsf) <= 0)


def test_deterministic_given_seed():
    a = cmaes_minimize(rosenbrock, np.zeros(5), 0.3, population=12,
                       iterations=100, seed=9)
    b = cmaes_minimize(rosenbrock, np.zeros(5), 0.3, population=12,
                       iterations=100, seed=9)
    assert a[1] == b[1]
    assert np.array_equal(a[0], b[0])
    assert a[2].best_so_far == b[2].best_so_far
    assert a[2].gen_best == b[2].gen_best


def test_parallel_map_does_not_change_result():
    from concurrent.futures import ThreadPoolExecutor
    serial = cmaes_minimize(rosenbrock, np.zeros(4), 0.3, population=12,
                            iterations=50, seed=11)
    with ThreadPoolExecutor(max_workers=4) as ex:
        parallel = cmaes_minimize(rosenbrock, np.zeros(4), 0.3, population=12,
                                  iterations=50, seed=11, parallel_map=ex.map)
    assert serial[1] == parallel[1]
    assert np.array_equal(serial[0], parallel[0])
    assert serial[2].best_so_far == parallel[2].best_so_far


def test_non_finite_objective_treated_as_worst():
    def half_nan(x):
        return float("nan") if x[0] > 0 else sphere(x)

    x, f, hist = cmaes_minimize(half_nan, np.full(3, -0.5), 0.3, population=12,
                                iterations=80, seed=5)
    assert np.isfinite(f)
    assert f < 1e-3


def test_result_never_worse_than_start():
    # a warm start at the optimum cannot be lost
    x, f, hist = cmaes_minimize(sphere, np.zeros(6), 0.5, population=8,
                                iterations=5, seed=6)
    assert f == 0.0
    assert np.allclose(x, 0.0)


def test_parameter_validation():
    with pytest.raises(ValueError):
        Cmaes(np.ones(3), 0.3, population=3, seed=0)
    with pytest.raises(ValueError):
        Cmaes(np.ones(3), -0.1, population=8, seed=0)
    with pytest.raises(ValueError):
        Cmaes(np.array([]), 0.3, population=8, seed=0)


def test_covariance_stays_symmetric_positive():
    es = Cmaes(np.zeros(6), 0.4, population=10, seed=12)
    rng = np.random.default_rng(0)
    for _ in range(40):
        xs = es.ask()
        es.tell([sphere(x) + rng.normal() * 0.01 for x in xs])
        C = es.state.C
        assert np.allclose(C, C.T)
        assert np.linalg.eigvalsh(C).min() > 0
        assert es.state.sigma > 0
