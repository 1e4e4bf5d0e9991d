import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from optophonon.errors import ShapeError
from optophonon.fockspace import (
    E,
    EP,
    G,
    SpaceShape,
    basis_ket,
    composite_ladders,
    default_cutoff,
    displacement,
    ket_to_dm,
    partial_trace_photon,
    phonon_ladder,
    photon_lowering,
    polaron_dress,
    product_ket,
)


def test_shape_validation():
    with pytest.raises(ShapeError):
        SpaceShape(4, 5)
    with pytest.raises(ShapeError):
        SpaceShape(2, 1)
    assert SpaceShape(3, 10).dim == 30


def test_photon_major_ordering():
    shape = SpaceShape(3, 5)
    assert shape.index(0, G) == 0
    assert shape.index(4, G) == 4
    assert shape.index(0, E) == 5
    assert shape.index(2, EP) == 12
    with pytest.raises(ShapeError):
        shape.index(5, G)


def test_default_cutoff_margin():
    assert default_cutoff(2) == 8
    assert default_cutoff(0) == 6


def test_phonon_ladder_examples():
    b2 = phonon_ladder(2)
    assert np.count_nonzero(b2) == 1 and b2[0, 1] == 1
    assert phonon_ladder(4)[2, 3] == pytest.approx(math.sqrt(3))
    b3 = phonon_ladder(3)
    np.testing.assert_allclose(b3.conj().T @ b3, np.diag([0, 1, 2]))
    with pytest.raises(ShapeError):
        phonon_ladder(1)


def test_photon_lowering_three_levels():
    a = photon_lowering(3)
    assert a[G, E] == 1
    assert a[E, EP] == pytest.approx(math.sqrt(2))
    assert np.count_nonzero(a) == 2


def test_displacement_examples():
    np.testing.assert_allclose(displacement(0.0, 6), np.eye(6), atol=0)
    d = displacement(0.1, 20)
    assert d[0, 0].real == pytest.approx(math.exp(-0.005), abs=1e-12)
    assert d[1, 0].real == pytest.approx(0.1 * math.exp(-0.005), abs=1e-12)
    assert d[0, 0] == pytest.approx(0.995012, abs=1e-6)


@given(st.floats(0.0, 0.3), st.integers(20, 30))
def test_displacement_inverse(eta, cutoff):
    prod = displacement(eta, cutoff) @ displacement(-eta, cutoff)
    assert np.max(np.abs(prod - np.eye(cutoff))) < 1e-10


def test_polaron_dress_limits():
    shape = SpaceShape(3, 20)
    a, b = composite_ladders(shape)
    at, bt = polaron_dress(a, b, 0.0)
    np.testing.assert_allclose(at, a, atol=1e-15)
    np.testing.assert_allclose(bt, b, atol=0)

    at, bt = polaron_dress(a, b, 0.1)
    g_block = slice(0, shape.phonon_cutoff)
    np.testing.assert_allclose(bt[g_block, g_block], b[g_block, g_block], atol=0)
    element = at[shape.index(0, G), shape.index(0, E)]
    assert element.real == pytest.approx(math.exp(-0.005), abs=1e-12)


def test_polaron_dress_shape_mismatch():
    with pytest.raises(ShapeError):
        polaron_dress(np.eye(4), np.eye(6), 0.1)


def test_partial_trace_examples():
    shape = SpaceShape(2, 3)
    rho = ket_to_dm(basis_ket(shape, 0, G))
    np.testing.assert_allclose(partial_trace_photon(rho, shape), np.diag([1, 0, 0]))

    mix = 0.5 * (ket_to_dm(basis_ket(shape, 0, G)) + ket_to_dm(basis_ket(shape, 1, E)))
    np.testing.assert_allclose(partial_trace_photon(mix, shape), np.diag([0.5, 0.5, 0]))

    phi = (basis_ket(shape, 0, G) + basis_ket(shape, 1, E)) / math.sqrt(2)
    np.testing.assert_allclose(partial_trace_photon(ket_to_dm(phi), shape), np.diag([0.5, 0.5, 0]), atol=1e-15)


def _random_dm(rng, dim):
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = x @ x.conj().T
    return rho / np.trace(rho)


def test_partial_trace_preserves_trace_and_hermiticity(rng):
    shape = SpaceShape(3, 7)
    for _ in range(20):
        red = partial_trace_photon(_random_dm(rng, shape.dim), shape)
        assert abs(np.trace(red) - 1) < 1e-12
        assert np.array_equal(red, red.conj().T)


def test_product_ket_rejects_overflow():
    shape = SpaceShape(2, 3)
    with pytest.raises(ShapeError):
        product_ket(shape, [1, 0, 0, 0])
    psi = product_ket(shape, [0.6, 0.8], level=E)
    assert psi[shape.index(1, E)] == pytest.approx(0.8)
