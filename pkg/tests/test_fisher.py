import numpy as np
import pytest

from hetcal import (
    FirstStageData,
    NonPositiveVariance,
    SingularInformation,
    SlopeNearZero,
    Theta,
    fisher_information,
    variance_usual,
    variance_x0,
)

from conftest import rel_diff


def random_instance(rng):
    n = int(rng.integers(3, 40))
    k = int(rng.integers(1, 50))
    first = FirstStageData(
        x_fixed=rng.uniform(-2, 5, n),
        y=rng.normal(size=n),
        delta_var=rng.uniform(0, 0.5, n),
    )
    theta = Theta(
        alpha=float(rng.uniform(-3, 3)),
        beta=float(rng.uniform(0.2, 8)) * float(rng.choice([-1.0, 1.0])),
        x0=float(rng.uniform(-2, 4)),
        sigma_eps2=float(rng.uniform(0.01, 2.0)),
    )
    return theta, first, k


def test_matrix_is_exactly_symmetric():
    theta, first, k = random_instance(np.random.default_rng(1))
    info = fisher_information(theta, first, k)
    assert np.array_equal(info, info.T)


def test_zero_cross_information_without_preparation_error():
    rng = np.random.default_rng(2)
    n, k = 6, 4
    first = FirstStageData(
        x_fixed=rng.uniform(0, 2, n), y=np.zeros(n), delta_var=np.zeros(n)
    )
    theta = Theta(alpha=0.3, beta=1.7, x0=0.9, sigma_eps2=0.05)
    info = fisher_information(theta, first, k)
    assert info[1, 3] == 0.0
    # top-left block equals the standard linear-model information
    x, s2, be, x0 = first.x_fixed, theta.sigma_eps2, theta.beta, theta.x0
    expected = np.array(
        [
            [(n + k) / s2, (np.sum(x) + k * x0) / s2, k * be / s2],
            [(np.sum(x) + k * x0) / s2, (np.sum(x**2) + k * x0**2) / s2, k * be * x0 / s2],
            [k * be / s2, k * be * x0 / s2, k * be**2 / s2],
        ]
    )
    assert np.allclose(info[:3, :3], expected, rtol=1e-13)


def test_leading_entry_hand_sum():
    first = FirstStageData(x_fixed=[0.5, 1.5], y=[0, 0], delta_var=[0.04, 0.09])
    theta = Theta(alpha=0.0, beta=2.0, x0=1.0, sigma_eps2=0.25)
    k = 3
    info = fisher_information(theta, first, k)
    g1 = 0.25 + 4 * 0.04
    g2 = 0.25 + 4 * 0.09
    assert info[0, 0] == pytest.approx(1 / g1 + 1 / g2 + k / 0.25, rel=1e-14)


def test_closed_form_variance_matches_matrix_inverse():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(60):
        theta, first, k = random_instance(rng)
        v_closed = variance_x0(theta, first, k)
        v_inverse = float(np.linalg.inv(fisher_information(theta, first, k))[2, 2])
        worst = max(worst, rel_diff(v_closed, v_inverse))
    assert worst < 1e-8


def test_variance_reduces_to_usual_without_preparation_error():
    rng = np.random.default_rng(4)
    for _ in range(20):
        theta, first, k = random_instance(rng)
        stripped = FirstStageData(first.x_fixed, first.y, np.zeros(first.n))
        assert rel_diff(
            variance_x0(theta, stripped, k), variance_usual(theta, stripped, k)
        ) < 1e-10


def test_large_design_variance_matches_tabulated_rounding():
    # the large-sample scenario rounds to 0.0000 / 0.0001 at four decimals
    n, k = 5000, 500
    first = FirstStageData(
        x_fixed=np.linspace(0, 2, n),
        y=np.zeros(n),
        delta_var=np.linspace(0.1 / n, 0.1, n),
    )
    for x0, expected in ((0.01, 0.0000), (0.8, 0.0000), (1.9, 0.0001)):
        v = variance_x0(Theta(0.1, 2.0, x0, 0.04), first, k)
        assert abs(v - expected) <= 5e-5


def test_degenerate_design_raises_singular_information():
    first = FirstStageData(x_fixed=[1.0, 1.0, 1.0], y=[0, 0, 0], delta_var=[0, 0, 0])
    with pytest.raises(SingularInformation):
        variance_x0(Theta(0.0, 2.0, 1.0, 0.04), first, 2)


def test_variance_rejects_zero_slope_and_bad_variance():
    first = FirstStageData(x_fixed=[0, 1, 2], y=[0, 1, 2], delta_var=[0.1, 0.1, 0.1])
    with pytest.raises(SlopeNearZero):
        variance_x0(Theta(0.0, 0.0, 1.0, 0.04), first, 2)
    with pytest.raises(NonPositiveVariance):
        variance_x0(Theta(0.0, 2.0, 1.0, 0.0), first, 2)
    with pytest.raises(NonPositiveVariance):
        fisher_information(Theta(0.0, 2.0, 1.0, -0.5), first, 2)
