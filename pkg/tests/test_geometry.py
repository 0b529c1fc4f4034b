import math

import numpy as np
import pytest
from scipy.integrate import quad

from berslab import geometry
from berslab.diffeo import Density, Diffeo, jacobian
from berslab.numerics import Decay, RealFunction, sup_norm


@pytest.fixture(scope="module")
def identity(grid):
    return Diffeo(grid.zeros())


@pytest.fixture(scope="module")
def path(diffeos):
    return geometry.GeodesicPath(2.0, diffeos[0], diffeos[1])


def test_geodesic_from_identity_closed_form(identity, tanh_map, grid):
    a = tanh_map.a
    path = geometry.GeodesicPath(2.0, identity, tanh_map.diffeo)
    t = 0.3
    jac = lambda x: ((1 - t) + t * np.sqrt(1 + a / np.cosh(x) ** 2)) ** 2
    assert sup_norm(geometry.geodesic_at(path, t).jac - jac(grid.x)) < 1e-14
    for x in (-3.0, 0.0, 2.5):
        exact = grid.x_min + quad(jac, grid.x_min, x, epsabs=1e-13)[0]
        i = int(round((x - grid.x_min) / grid.h))
        assert geometry.geodesic_at(path, t).positions[i] == pytest.approx(exact, abs=1e-10)


def test_distance_closed_form(identity, tanh_map, grid):
    a = tanh_map.a
    integrand = lambda x: (2 * (np.sqrt(1 + a / np.cosh(x) ** 2) - 1)) ** 2
    exact = math.sqrt(quad(integrand, grid.x_min, grid.x_max, epsabs=1e-14)[0])
    assert geometry.distance_p(identity, tanh_map.diffeo, 2.0) == pytest.approx(exact, rel=1e-10)
    with pytest.raises(ValueError):
        geometry.distance_p(identity, tanh_map.diffeo, 1.0)


def test_statistical_velocity_closed_form(identity, tanh_map):
    path = geometry.GeodesicPath(2.0, identity, tanh_map.diffeo)
    root = np.sqrt(tanh_map("d1"))
    assert sup_norm(geometry.statistical_velocity(path, 0.0) - 2 * (root - 1)) < 1e-8


def test_collinearity(path):
    for t in path.t_samples:
        assert geometry.chart_collinearity_residual(path, t) < 1e-12


def test_distance_equals_path_length(path):
    length = geometry.path_length(path)
    dist = geometry.distance_p(path.phi0, path.phi1, 2.0)
    assert abs(length - dist) / dist < 1e-6


@pytest.mark.parametrize("p", [2.0, math.inf])
def test_strain_and_hunter_saxton(diffeos, p):
    path = geometry.GeodesicPath(p, diffeos[0], diffeos[1])
    assert geometry.strain_residual(path, 0.5) < 1e-6
    assert geometry.hunter_saxton_residual(path, 0.5) < 1e-5


def test_strain_residual_is_second_order_in_time_step(path):
    coarse, fine = (geometry.strain_residual(path, 0.5, dt, richardson=False) for dt in (0.02, 0.01))
    assert coarse / fine == pytest.approx(4.0, rel=0.05)


@pytest.mark.parametrize("p", [2.0, 4.0, math.inf])
def test_riccati_law(diffeos, p):
    path = geometry.GeodesicPath(p, diffeos[0], diffeos[1])
    assert geometry.riccati_closed_form_gap(path, 0.5) < 1e-9
    assert geometry.statistical_velocity_riccati_residual(path, 0.5) < 1e-7


@pytest.mark.parametrize("p", [2.0, math.inf])
def test_geodesics_have_zero_covariant_acceleration(diffeos, p):
    path = geometry.GeodesicPath(p, diffeos[0], diffeos[1])
    res = []
    for dt in (0.02, 0.01):
        field = geometry.eulerian_field(path, [0.5 - dt, 0.5, 0.5 + dt])
        res.append(sup_norm(geometry.covariant_derivative(field, field, p)))
    assert res[1] < 1e-4
    assert res[0] / res[1] == pytest.approx(4.0, rel=0.1)


def test_covariant_derivative_validates_times(path):
    field = geometry.eulerian_field(path, [0.4, 0.5])
    with pytest.raises(ValueError):
        geometry.covariant_derivative(field, field, 2.0)


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0, math.inf])
def test_fisher_rao_density_matches_geodesic(diffeos, p):
    mu0, mu1 = jacobian(diffeos[2]), jacobian(diffeos[3])
    path = geometry.GeodesicPath(p, diffeos[2], diffeos[3])
    for t in (0.25, 0.75):
        assert sup_norm(geometry.fisher_rao_geodesic_density(mu0, mu1, p, t)
                        - geometry.geodesic_at(path, t).jac) < 1e-12


@pytest.mark.parametrize("p", [2.0, 3.0, math.inf])
def test_isometry(diffeos, grid, p):
    delta = RealFunction(grid, np.exp(-(grid.x - 0.5) ** 2) * np.sin(grid.x), Decay.VANISHES)
    assert geometry.isometry_check(diffeos[1], delta, p).relative_error < 1e-4


def test_path_validation(diffeos, grid):
    with pytest.raises(ValueError):
        geometry.GeodesicPath(0.5, diffeos[0], diffeos[1])
    from berslab.numerics import Grid
    other = Diffeo(Grid(-10, 10, 2001).zeros())
    with pytest.raises(ValueError):
        geometry.GeodesicPath(2.0, diffeos[0], other)
