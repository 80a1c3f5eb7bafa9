import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fratool.emcore import (
    Frequency,
    JonesMatrix,
    JonesVector,
    X_HAT,
    Y_HAT,
    db,
    db_amplitude,
    from_db_amplitude,
    phase_distance,
    polar,
    rotate_basis,
    wavelength,
    wrap_deg,
)
from fratool.errors import DomainError


def test_wavelength_at_28_ghz():
    assert wavelength(28.0) == pytest.approx(10.7069, abs=1e-4)
    assert wavelength(Frequency(29.0)) == pytest.approx(10.3377, abs=1e-4)


def test_frequency_must_be_positive():
    with pytest.raises(DomainError):
        Frequency(0.0)
    with pytest.raises(DomainError):
        wavelength(-1.0)


def test_db_conversions():
    assert db(2.0) == pytest.approx(3.0103, abs=1e-4)
    assert db_amplitude(0.5) == pytest.approx(-6.0206, abs=1e-4)
    assert float(from_db_amplitude(-0.04)) == pytest.approx(0.99540, abs=1e-5)
    with pytest.raises(DomainError):
        db(0.0)
    with pytest.raises(DomainError):
        db_amplitude(-1.0)


def test_wrap_and_distance():
    assert wrap_deg(-90.0) == pytest.approx(270.0)
    assert wrap_deg(720.0) == 0.0
    assert 0.0 <= wrap_deg(-1e-14) < 360.0
    assert phase_distance(10.0, 350.0) == pytest.approx(20.0)
    assert phase_distance(350.0, 10.0) == pytest.approx(-20.0)
    assert phase_distance(180.0, 0.0) == pytest.approx(-180.0)


def test_wrap_is_periodic():
    rng = np.random.default_rng(5)
    x = rng.uniform(-720.0, 720.0, 200)
    for turns in (-3, -1, 1, 7):
        assert_allclose(wrap_deg(x + 360.0 * turns), wrap_deg(x), atol=1e-9)
    assert wrap_deg(2608.6) == pytest.approx(88.6, abs=1e-9)


def test_rotate_identity_is_invariant():
    rotated = rotate_basis(JonesMatrix.identity(), 37.0)
    assert rotated.allclose(JonesMatrix.identity())


def test_rotate_45_swaps_into_cross_terms():
    rotated = rotate_basis(JonesMatrix.diag(1, -1), 45.0)
    assert rotated.allclose(JonesMatrix(0, 1, 1, 0))


def test_rotated_diagonal_has_half_difference_off_diagonal():
    a, b = polar(0.9, 30.0), polar(0.8, -120.0)
    rotated = rotate_basis(JonesMatrix.diag(a, b), 45.0)
    assert rotated.xy == pytest.approx((a - b) / 2, abs=1e-15)
    assert rotated.yx == pytest.approx((a - b) / 2, abs=1e-15)
    assert rotated.xx == pytest.approx((a + b) / 2, abs=1e-15)


def test_matmul_and_power():
    swap = JonesMatrix(0, 1, 1, 0)
    assert (swap @ Y_HAT).as_array() == pytest.approx(X_HAT.as_array())
    product = swap @ swap
    assert product.allclose(JonesMatrix.identity())
    vector = JonesVector(3, 4j)
    assert vector.power == pytest.approx(25.0)
    assert vector.normalized().norm == pytest.approx(1.0)


def test_singular_values_of_lossy_operator():
    m = JonesMatrix.diag(0.5, polar(0.9, 45))
    assert_allclose(sorted(m.singular_values), [0.5, 0.9])
    assert m.frobenius_norm == pytest.approx(math.hypot(0.5, 0.9))


def test_rotation_preserves_singular_values():
    rng = np.random.default_rng(3)
    m = JonesMatrix.from_array(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    assert_allclose(sorted(rotate_basis(m, 23.0).singular_values), sorted(m.singular_values), atol=1e-12)


def test_rotation_round_trip_restores_the_operator():
    rng = np.random.default_rng(7)
    for alpha in rng.uniform(-180.0, 180.0, 20):
        m = JonesMatrix.from_array(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        assert rotate_basis(rotate_basis(m, alpha), -alpha).allclose(m, atol=1e-12)


def test_jones_matrix_shape_is_checked():
    with pytest.raises(DomainError):
        JonesMatrix.from_array(np.eye(3))
