import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from optophonon.couplings import SystemParams
from optophonon.fockspace import E, EP, G, SpaceShape, basis_ket
from optophonon.leakage import (
    analytic_three_level,
    block_solution,
    carrier_fidelity,
    carrier_ode_step,
    drive_hamiltonian,
    fidelity_F1_analytic,
    fidelity_F2_analytic,
    fock2_schedule,
    leakage_factors,
    protocol_fidelity_numeric,
    red_ode_step,
    run_schedule_closed,
    two_level_block,
)
from optophonon.propagators import carrier_propagator

OM = 1.0
ETA = 0.1


def ket3(cutoff, n, level):
    return basis_ket(SpaceShape(3, cutoff), n, level)


def test_printed_carrier_block():
    shape = SpaceShape(3, 3)
    h = drive_hamiltonian(shape, OM, ETA, -10.0, 0, 0.0, "lamb-dicke")
    for m in range(3):
        g, e, ep = shape.index(m, G), shape.index(m, E), shape.index(m, EP)
        block = h[np.ix_([g, e, ep], [g, e, ep])]
        expected = np.array([[0, OM, 0], [OM, 0, math.sqrt(2) * OM], [0, math.sqrt(2) * OM, -10.0]])
        np.testing.assert_allclose(block, expected, atol=1e-15)


def test_printed_red_block():
    shape = SpaceShape(3, 3)
    d = -10.0
    h = drive_hamiltonian(shape, OM, ETA, d, 1, 0.0, "lamb-dicke")
    idx = [shape.index(m, lvl) for m, lvl in [(0, G), (1, G), (0, E), (2, G), (1, E), (0, EP)]]
    x = ETA * OM
    expected = np.array(
        [
            [0, 0, 0, 0, 0, 0],
            [0, 0, -x, 0, 0, 0],
            [0, -x, 0, 0, 0, 0],
            [0, 0, 0, 0, -math.sqrt(2) * x, 0],
            [0, 0, 0, -math.sqrt(2) * x, 0, -math.sqrt(2) * x],
            [0, 0, 0, 0, -math.sqrt(2) * x, d],
        ]
    )
    np.testing.assert_allclose(h[np.ix_(idx, idx)], expected, atol=1e-15)
    # next block continues the sqrt(m+1) pattern: (2,e) <-> (1,e') carries -2 eta Omega
    assert h[shape.index(2, E), shape.index(1, EP)] == pytest.approx(-2 * x)


def test_drive_phase_enters_raising_entries():
    shape = SpaceShape(3, 3)
    h = drive_hamiltonian(shape, OM, ETA, -10.0, 0, 0.4, "lamb-dicke")
    assert h[shape.index(0, E), shape.index(0, G)] == pytest.approx(OM * np.exp(-0.4j))
    assert np.allclose(h, h.conj().T)


def test_lamb_dicke_rejects_second_sidebands():
    with pytest.raises(ValueError):
        drive_hamiltonian(SpaceShape(3, 4), OM, ETA, -10.0, 2, 0.0, "lamb-dicke")


def test_carrier_ode_examples():
    psi = ket3(4, 0, G)
    np.testing.assert_array_equal(carrier_ode_step(psi, 0.0, -10.0, 0.0, 3.0), psi)

    t = math.pi / (2 * OM)
    out = carrier_ode_step(psi, OM, 1e6 * OM, 0.0, t, eta=ETA, couplings="exact", method="expm")
    shape = SpaceShape(3, 4)
    assert abs(out[shape.index(0, EP)]) ** 2 <= 1e-11
    two = carrier_propagator(SystemParams.from_ratios(ETA, 10.0), t, 0.0, 4)
    np.testing.assert_allclose(out[: 2 * 4], two[:, 0], atol=1e-5)

    out = carrier_ode_step(psi, OM, 10 * OM, 0.0, t)
    f_ce = leakage_factors(OM, ETA, 10 * OM).f_ce
    assert abs(out[shape.index(0, E)]) ** 2 == pytest.approx(f_ce ** 2, abs=0.002)


def test_red_ode_examples():
    cut = 5
    shape = SpaceShape(3, cut)
    psi = ket3(cut, 0, G)
    np.testing.assert_allclose(red_ode_step(psi, OM, ETA, -10.0, 0.3, 17.0), psi, atol=1e-12)

    out = red_ode_step(ket3(cut, 0, E), OM, ETA, 1e6, 0.0, math.pi / (2 * ETA * OM), method="expm")
    assert abs(out[shape.index(1, G)]) == pytest.approx(1.0, abs=1e-6)

    t = math.pi / (2 * math.sqrt(2) * ETA * OM)
    out = red_ode_step(ket3(cut, 1, E), OM, ETA, 10.0, 0.0, t)
    f_rg = leakage_factors(OM, ETA, 10.0).f_rg
    assert abs(out[shape.index(2, G)]) == pytest.approx(f_rg, abs=0.002)


def test_red_ode_reduces_to_two_level_block():
    cut, eta = 4, 1e-3
    shape = SpaceShape(3, cut)
    t = 700.0
    s0, x0 = 0.6, 0.8j
    psi = s0 * ket3(cut, 1, G) + x0 * ket3(cut, 0, E)
    out = red_ode_step(psi, OM, eta, -10.0, 0.0, t, method="expm")
    s, x = two_level_block(-eta * OM, 0.0, t, (s0, x0))
    assert out[shape.index(1, G)] == pytest.approx(s, abs=1e-12)
    assert out[shape.index(0, E)] == pytest.approx(x, abs=1e-12)


def test_norm_conservation_over_protocol():
    params = SystemParams.from_ratios(ETA, 10.0)
    psi = run_schedule_closed(fock2_schedule(params), delta=-10.0, method="rk")
    assert abs(np.linalg.norm(psi) - 1) <= 1e-9


def test_analytic_examples():
    assert analytic_three_level(0.1, 0.1, 10.0, 0.0) == pytest.approx((1, 0, 0))
    A = -0.3
    for t in (0.5, 2.0):
        _, c_e, c_ep = analytic_three_level(A, 0.0, 10.0, t)
        assert c_e == pytest.approx(-1j * (A / abs(A)) * math.sin(abs(A) * t), abs=1e-14)
        assert c_ep == 0
    a = -math.sqrt(2) * 0.1 * OM
    t = math.pi / (2 * math.sqrt(2) * 0.1 * OM)
    c_g, _, _ = analytic_three_level(a, a, 10 * OM, t, "excited")
    f_rg = leakage_factors(OM, 0.1, 10 * OM).f_rg
    assert abs(c_g) == pytest.approx(f_rg, abs=1e-4)
    assert f_rg == pytest.approx(0.9998, abs=1e-4)


def test_analytic_warns_outside_regime():
    with pytest.warns(RuntimeWarning):
        analytic_three_level(1.0, 1.0, 2.0, 0.1)


def _block_exact(A, B, delta, t, initial):
    h = np.array([[0, A, 0], [A, 0, B], [0, B, delta]], dtype=complex)
    start = np.array([1, 0, 0] if initial == "ground" else [0, 1, 0], dtype=complex)
    return expm(-1j * h * t) @ start


@given(
    st.floats(0.01, 1.0),
    st.sampled_from([1.0, math.sqrt(2)]),
    st.floats(10.0, 60.0),
    st.booleans(),
    st.floats(0.0, 1.0),
)
def test_analytic_matches_block_ode(a, b_over_a, ratio, flip, frac):
    """Closed forms against the exact 3x3 block for the carrier and red patterns.

    The ground-state solution is accurate to second order in B^2/(A delta);
    the excited-state solution omits the Stark detuning B^2/delta of the
    G-E pair, so its error is first order in that parameter.
    """
    A, B = -a, -a * b_over_a
    delta = ratio * max(abs(A), abs(B)) * (-1 if flip else 1)
    small = B ** 2 / (abs(A) * abs(delta))
    for initial in ("ground", "excited"):
        omega_r = block_solution(A, B, delta, initial).Omega_R
        t = frac * math.pi / omega_r
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            approx = np.array(analytic_three_level(A, B, delta, t, initial))
        err = np.max(np.abs(np.abs(approx) - np.abs(_block_exact(A, B, delta, t, initial))))
        if initial == "ground":
            assert err <= 1.5 * small ** 2 + 1e-12
            if ratio >= 40:
                assert err <= 0.002
        else:
            assert err <= small


def test_two_level_block_examples():
    assert two_level_block(0.3, 0.2, 0.0, (0.6, 0.8)) == pytest.approx((0.6, 0.8))
    A = -0.4
    s, x = two_level_block(A, 0.0, math.pi / (2 * abs(A)), (1, 0))
    assert s == pytest.approx(0, abs=1e-15)
    assert x == pytest.approx(-1j * A / abs(A))


def test_two_level_block_matches_expm():
    A, B, t = -0.2, 1.3, 2.7
    u = expm(-1j * np.array([[0, A], [A, B]]) * t)
    got = two_level_block(A, B, t, (0.6, 0.8j))
    np.testing.assert_allclose(got, u @ np.array([0.6, 0.8j]), atol=1e-14)


def test_leakage_factor_examples():
    lf = leakage_factors(OM, ETA, 1e8 * OM)
    assert (lf.f_ce, lf.f_rg, lf.f_cg) == pytest.approx((1, 1, 1), abs=1e-12)
    f_ce = leakage_factors(OM, ETA, 10 * OM).f_ce
    assert f_ce == pytest.approx(0.985 * math.sin(math.pi / 2 * 0.995), rel=1e-14)
    assert f_ce == pytest.approx(0.98497, abs=1e-5)
    assert leakage_factors(OM, 0.1, 40 * OM).f_rg == pytest.approx(0.99999, abs=1e-5)
    with pytest.raises(ZeroDivisionError):
        leakage_factors(OM, ETA, 0.0)


def test_fidelity_formula_examples():
    assert fidelity_F1_analytic(OM, ETA, 1e9) == pytest.approx(1.0, abs=1e-12)
    assert fidelity_F2_analytic(OM, ETA, 1e9) == pytest.approx(1.0, abs=1e-12)
    assert carrier_fidelity(OM, 1e9) == pytest.approx(1.0, abs=1e-12)
    assert fidelity_F1_analytic(OM, ETA, 10.0) == pytest.approx(0.941, abs=5e-4)
    assert fidelity_F1_analytic(OM, ETA, 40.0) == pytest.approx(0.9963, abs=5e-4)


@given(st.floats(3.0, 1e4), st.floats(0.01, 0.3))
def test_factors_even_in_delta_and_bounded(x, eta):
    a, b = leakage_factors(OM, eta, x), leakage_factors(OM, eta, -x)
    assert a == b
    for f in (a.f_ce, a.f_rg, a.f_cg):
        assert 0 <= f <= 1


def test_protocol_numeric_examples():
    assert protocol_fidelity_numeric("fock2", OM, ETA, 1e6) == pytest.approx(1.0, abs=1e-6)
    assert protocol_fidelity_numeric("superposition02", OM, ETA, 1e6) == pytest.approx(1.0, abs=1e-6)
    f1 = protocol_fidelity_numeric("fock2", OM, ETA, -10.0)
    assert f1 == pytest.approx(fidelity_F1_analytic(OM, ETA, -10.0), abs=0.01)
    assert protocol_fidelity_numeric("fock2", OM, ETA, 10.0) == pytest.approx(f1, abs=1e-12)
    rk = protocol_fidelity_numeric("fock2", OM, ETA, -10.0, method="rk")
    assert rk == pytest.approx(f1, abs=1e-8)
    with pytest.raises(ValueError):
        protocol_fidelity_numeric("fock3", OM, ETA, 10.0)
