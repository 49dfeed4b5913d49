import numpy as np
import pytest

from hdtest.exceptions import (
    DataShapeError,
    DegenerateDataError,
    InsufficientSamplesError,
    PairingError,
)
from hdtest.kernels import KernelSpec, distance_matrix, gram_matrix, induced_kernel_matrix
from hdtest.stats import (
    StatisticSpec,
    dcor2,
    dcov2,
    double_center,
    energy_two_sample,
    hsic,
    mmd2_biased,
    mmd2_biased_from_grams,
    mmd2_unbiased,
    mmd_estimation_bound,
    u_center,
    udcor2,
    udcov2,
)

rng = np.random.default_rng(77)


def brute_mmd2_biased(X, Y, spec):
    from hdtest.kernels import kernel_eval

    n, m = len(X), len(Y)
    kxx = sum(kernel_eval(a, b, spec) for a in X for b in X) / n**2
    kyy = sum(kernel_eval(a, b, spec) for a in Y for b in Y) / m**2
    kxy = sum(kernel_eval(a, b, spec) for a in X for b in Y) / (n * m)
    return kxx + kyy - 2 * kxy


def test_mmd2_biased_identical_samples_is_zero():
    X = rng.standard_normal((15, 3))
    for fam in ("gaussian", "laplace"):
        assert mmd2_biased(X, X, KernelSpec(fam, 1.0)) == pytest.approx(0.0, abs=1e-12)


def test_mmd2_biased_against_loops():
    X = rng.standard_normal((7, 2))
    Y = rng.standard_normal((5, 2)) + 0.3
    for fam in ("gaussian", "laplace"):
        spec = KernelSpec(fam, 1.3)
        assert mmd2_biased(X, Y, spec) == pytest.approx(brute_mmd2_biased(X, Y, spec), abs=1e-12)


def test_mmd2_biased_nonnegative():
    for trial in range(20):
        X = rng.standard_normal((8, 2))
        Y = rng.standard_normal((6, 2))
        assert mmd2_biased(X, Y, KernelSpec("gaussian", 0.8)) >= -1e-12


def test_mmd2_unbiased_excludes_diagonal():
    X = rng.standard_normal((6, 2))
    Y = rng.standard_normal((4, 2)) + 1.0
    spec = KernelSpec("gaussian", 1.0)
    Kxx = gram_matrix(X, X, spec)
    Kyy = gram_matrix(Y, Y, spec)
    Kxy = gram_matrix(X, Y, spec)
    n, m = 6, 4
    ref = (
        (Kxx.sum() - np.trace(Kxx)) / (n * (n - 1))
        + (Kyy.sum() - np.trace(Kyy)) / (m * (m - 1))
        - 2 * Kxy.mean()
    )
    assert mmd2_unbiased(X, Y, spec) == pytest.approx(ref, abs=1e-12)


def test_mmd2_unbiased_mean_matches_population():
    """Average of the unbiased statistic over fresh draws sits within
    3 standard errors of the closed-form population value."""
    from hdtest.analytic import mmd2_gaussian_exact

    gamma = np.sqrt(2.0)
    exact = mmd2_gaussian_exact([0.0], [1.0], 1.0, gamma)
    spec = KernelSpec("gaussian", gamma)
    reps = 200
    vals = np.empty(reps)
    for r in range(reps):
        g = np.random.default_rng([5150, r])
        X = g.standard_normal((40, 1))
        Y = g.standard_normal((40, 1)) + 1.0
        vals[r] = mmd2_unbiased(X, Y, spec)
    se = vals.std(ddof=1) / np.sqrt(reps)
    assert abs(vals.mean() - exact) < 3 * se


def test_mmd2_unbiased_needs_two_points():
    spec = KernelSpec("gaussian", 1.0)
    with pytest.raises(InsufficientSamplesError):
        mmd2_unbiased(np.ones((1, 2)), np.ones((5, 2)), spec)


def test_energy_equals_biased_mmd_with_induced_kernel():
    """The energy statistic is the biased MMD^2 under the unhalved induced
    kernel ||x|| + ||y|| - ||x - y||, as an exact matrix identity."""
    for trial in range(10):
        X = rng.standard_normal((9, 3))
        Y = rng.standard_normal((7, 3)) + 0.5
        Kxx = 2.0 * induced_kernel_matrix(X, X)
        Kyy = 2.0 * induced_kernel_matrix(Y, Y)
        Kxy = 2.0 * induced_kernel_matrix(X, Y)
        assert energy_two_sample(X, Y) == pytest.approx(
            mmd2_biased_from_grams(Kxx, Kyy, Kxy), abs=1e-10
        )


def test_hsic_with_induced_kernel_is_quarter_dcov2():
    for trial in range(10):
        n = 10
        X = rng.standard_normal((n, 2))
        Y = X + 0.5 * rng.standard_normal((n, 2))
        Kx = double_center(induced_kernel_matrix(X, X))
        Ky = double_center(induced_kernel_matrix(Y, Y))
        hs = (Kx * Ky).mean()
        assert hs == pytest.approx(dcov2(X, Y) / 4.0, abs=1e-10)


def test_dcov2_against_definition():
    n = 12
    X = rng.standard_normal((n, 2))
    Y = rng.standard_normal((n, 3))
    A = double_center(distance_matrix(X, X))
    B = double_center(distance_matrix(Y, Y))
    assert dcov2(X, Y) == pytest.approx((A * B).sum() / n**2, abs=1e-12)


def test_dcor2_bounds_and_perfect_dependence():
    X = rng.standard_normal((20, 1))
    assert dcor2(X, 2.0 * X + 1.0) == pytest.approx(1.0, abs=1e-10)
    Y = rng.standard_normal((20, 1))
    v = dcor2(X, Y)
    assert 0.0 <= v <= 1.0


def test_dcor2_degenerate_input():
    X = np.zeros((10, 2))
    Y = rng.standard_normal((10, 2))
    with pytest.raises(DegenerateDataError):
        dcor2(X, Y)


def test_double_center_zero_margins():
    A = rng.standard_normal((9, 9))
    C = double_center(A)
    assert np.allclose(C.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(C.mean(axis=1), 0.0, atol=1e-12)


def test_u_center_formula_and_diagonal():
    A = distance_matrix(rng.standard_normal((6, 2)), rng.standard_normal((6, 2)))
    A = 0.5 * (A + A.T)
    U = u_center(A)
    n = 6
    i, j = 1, 4
    expect = (
        A[i, j]
        - A[i, :].sum() / (n - 2)
        - A[:, j].sum() / (n - 2)
        + A.sum() / ((n - 1) * (n - 2))
    )
    assert U[i, j] == pytest.approx(expect, abs=1e-12)
    assert np.all(np.diag(U) == 0.0)


def test_u_center_needs_four_points():
    with pytest.raises(InsufficientSamplesError):
        u_center(np.ones((3, 3)))


def test_udcov2_near_zero_under_independence():
    """U-centered distance covariance is unbiased: its average over
    independent draws should be within 3 standard errors of zero."""
    reps = 100
    vals = np.empty(reps)
    for r in range(reps):
        g = np.random.default_rng([808, r])
        vals[r] = udcov2(g.standard_normal((25, 3)), g.standard_normal((25, 2)))
    se = vals.std(ddof=1) / np.sqrt(reps)
    assert abs(vals.mean()) < 3 * se


def test_udcor2_degenerate():
    with pytest.raises(DegenerateDataError):
        udcor2(np.zeros((10, 1)), np.arange(10.0)[:, None])


def test_hsic_matches_centered_trace():
    n = 11
    X = rng.standard_normal((n, 2))
    Y = rng.standard_normal((n, 2))
    sx = KernelSpec("gaussian", 1.0)
    sy = KernelSpec("gaussian", 2.0)
    K = double_center(gram_matrix(X, X, sx))
    L = double_center(gram_matrix(Y, Y, sy))
    assert hsic(X, Y, sx, sy) == pytest.approx((K * L).sum() / n**2, abs=1e-12)


def test_pairing_error():
    with pytest.raises(PairingError):
        dcov2(np.ones((5, 1)), np.ones((6, 1)))
    with pytest.raises(PairingError):
        hsic(
            np.ones((5, 1)),
            np.ones((6, 1)),
            KernelSpec("gaussian", 1.0),
            KernelSpec("gaussian", 1.0),
        )


def test_mmd_estimation_bound_value_and_monotonicity():
    # K = 1, n = m = 100, delta = 0.05: 2*(0.2)*(1 + log 40)
    v = mmd_estimation_bound(1.0, 100, 100, 0.05)
    assert v == pytest.approx(2 * 0.2 * (1 + np.log(40.0)), abs=1e-12)
    assert mmd_estimation_bound(1.0, 400, 400, 0.05) < v
    assert mmd_estimation_bound(1.0, 100, 100, 0.01) > v
    with pytest.raises(DataShapeError):
        mmd_estimation_bound(1.0, 100, 100, 1.5)


def test_statistic_spec_modes():
    assert StatisticSpec("mmd2_biased").mode == "two_sample"
    assert StatisticSpec("hsic").mode == "independence"
    assert StatisticSpec("energy").uses_kernel is False
    assert StatisticSpec("hsic").uses_kernel is True
    with pytest.raises(DataShapeError):
        StatisticSpec("tstat")
