import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fbpme import estimates as E
from fbpme.littlewood_paley import build_partition
from fbpme.norms import FBNormParams, TrajectoryRecord, fb_norm
from fbpme.pressure import PressureSpec
from fbpme.solver import ModelParams
from fbpme.spectral import GridSpec, SpectralField, hermitian_defect

RIESZ = ModelParams(2.0, PressureSpec.riesz(0.5))


def plateau_mode(grid, j):
    k = math.ceil(4 / 3 * 2.0**j / grid.dxi)
    return k, E.single_mode(grid, [k], 1.0)


def test_generator_is_real_localized_and_reproducible(grid1, part1):
    a = E.random_block_bump(grid1, 0, np.random.default_rng(7))
    b = E.random_block_bump(grid1, 0, np.random.default_rng(7))
    np.testing.assert_array_equal(a.coeffs, b.coeffs)
    assert hermitian_defect(grid1, a.coeffs) < 1e-15
    outside = (grid1.xi_norm < 0.75) | (grid1.xi_norm > 8 / 3)
    assert np.all(a.coeffs[outside] == 0)
    assert np.max(np.abs(a.coeffs)) == pytest.approx(1.0)


def test_generator_is_grid_independent():
    coarse, fine = GridSpec(1, 64, 16.0), GridSpec(1, 128, 16.0)
    a = E.random_block_bump(coarse, -1, np.random.default_rng(3))
    b = E.random_block_bump(fine, -1, np.random.default_rng(3))
    ka = {int(k): c for k, c in zip(coarse.k[0], a.coeffs) if c != 0}
    kb = {int(k): c for k, c in zip(fine.k[0], b.coeffs) if c != 0}
    assert ka.keys() == kb.keys()
    for k in ka:
        assert ka[k] == pytest.approx(kb[k], rel=1e-14)


def test_block_too_large_for_grid():
    with pytest.raises(ValueError):
        E.random_block_bump(GridSpec(1, 16, 1.0), 6, np.random.default_rng(0))


def test_apriori_pure_decay_bounded_by_data(grid1, part1):
    u0 = E.random_block_bump(grid1, 0, np.random.default_rng(2))
    times = np.linspace(0, 1, 65)
    f = np.zeros((65,) + grid1.shape, dtype=complex)
    res = E.verify_apriori(u0, f, times, math.inf, RIESZ.norm_params(), 2.0, part1)
    assert res.lhs <= res.rhs * (1 + 1e-14)
    assert res.ratio == pytest.approx(1.0, rel=1e-14)  # sup in time is attained at t = 0


def test_apriori_constant_mode_forcing_closed_form(grid1, part1):
    j = part1.j_min + 1
    k, f0 = plateau_mode(grid1, j)
    lam = (k * grid1.dxi) ** 2
    T = 2.0
    times = np.linspace(0, T, 4001)
    f = np.broadcast_to(f0.coeffs, (len(times),) + grid1.shape).copy()
    bp = RIESZ.norm_params()
    res = E.verify_apriori(SpectralField.zeros(grid1), f, times, 1.0, bp, 2.0, part1)
    block = fb_norm(f0, FBNormParams(0.0), part1)
    lhs = 2.0 ** (j * (bp.beta + 2.0)) * block * (T / lam - (1 - math.exp(-lam * T)) / lam**2)
    rhs = 2.0 ** (j * bp.beta) * block * T
    assert res.lhs == pytest.approx(lhs, rel=1e-6)
    assert res.rhs == pytest.approx(rhs, rel=1e-12)


def test_apriori_rejects_bad_r(grid1, part1):
    with pytest.raises(ValueError):
        E.verify_apriori(SpectralField.zeros(grid1), np.zeros((2,) + grid1.shape), [0, 1], 0.5, RIESZ.norm_params(), 2.0, part1)


def test_interpolation_exponent():
    assert E.interpolation_exponent(0.5, 1.0, math.inf) == pytest.approx(2.0)
    assert E.interpolation_exponent(1 / 3, 1.0, 2.0) == pytest.approx(1.2)
    assert math.isinf(E.interpolation_exponent(0.0, math.inf, 1.0))


@pytest.mark.parametrize("theta", [0.0, 1.0])
def test_interpolation_endpoints_are_identities(part1, theta):
    rec = E.random_two_block_record(part1, np.random.default_rng(0))
    ratio = E.verify_interpolation(rec, theta, 1.0, math.inf, FBNormParams(0.3), 2.0)
    assert ratio == pytest.approx(1.0, rel=1e-12)


@given(st.integers(0, 2**31 - 1), st.sampled_from([(0.5, 1.0, math.inf), (1 / 3, 1.0, 2.0), (0.75, 2.0, math.inf), (0.2, 4.0, 1.5)]))
def test_interpolation_holds_on_random_records(seed, triple):
    P = build_partition(GridSpec(1, 128, 16.0))
    rec = E.random_two_block_record(P, np.random.default_rng(seed))
    assert E.verify_interpolation(rec, *triple, FBNormParams(-0.2), 1.5) <= 1 + 1e-8


def test_interpolation_brute_force_single_block():
    """One active block: the inequality is Holder in time for 2^{j(b + theta a)} f(t)."""
    t = np.linspace(0, 1, 2001)
    f = np.exp(-3 * t) + 0.2
    rec = TrajectoryRecord(t, (0, 1, 2), 2.0, np.stack([0 * f, f, 0 * f], axis=1))
    theta, r1, r2, a, b = 0.5, 1.0, math.inf, 2.0, 0.0
    r = 2.0
    lhs = 2 ** (b + theta * a) * np.sqrt(np.trapezoid(f**2, t))
    rhs = (2**b * np.trapezoid(f, t)) ** 0.5 * (2 ** (b + a) * f.max()) ** 0.5
    assert E.verify_interpolation(rec, theta, r1, r2, FBNormParams(b), a) == pytest.approx(lhs / rhs, rel=1e-12)
    with pytest.raises(ValueError):
        E.verify_interpolation(rec, 1.5, r1, r2, FBNormParams(b), a)


def test_bilinear_zero_inputs(grid1, part1):
    z = SpectralField.zeros(grid1)
    u = E.random_block_bump(grid1, 0, np.random.default_rng(0))
    res = E.verify_bilinear(z, u, 1.0, 2.0, 2.0, 0.5, 0.5, RIESZ, part1)
    assert res.lhs == 0 and res.rhs == 0


@pytest.mark.parametrize(
    "kwargs",
    [dict(epsilon=0.0), dict(beta=0.0), dict(gamma=1.0, gamma1=2.0, gamma2=3.0)],
)
def test_bilinear_constraint_errors(grid1, part1, kwargs):
    u = E.random_block_bump(grid1, 0, np.random.default_rng(0))
    args = dict(gamma=1.0, gamma1=2.0, gamma2=2.0, beta=0.5, epsilon=0.5)
    args.update(kwargs)
    with pytest.raises(ValueError):
        E.verify_bilinear(u, u, args["gamma"], args["gamma1"], args["gamma2"], args["beta"], args["epsilon"], RIESZ, part1)


def test_bilinear_epsilon_must_exceed_minus_sigma(grid1, part1):
    mp = ModelParams(2.0, PressureSpec.riesz(0.75))  # sigma = -1/2
    u = E.random_block_bump(grid1, 0, np.random.default_rng(0))
    with pytest.raises(ValueError):
        E.verify_bilinear(u, u, 1.0, 2.0, 2.0, 0.5, 0.4, mp, part1)
    assert E.verify_bilinear(u, u, 1.0, 2.0, 2.0, 0.5, 0.6, mp, part1).ratio > 0


@given(st.integers(0, 2**31 - 1), st.floats(0.01, 100.0))
def test_bilinear_scale_invariance(seed, c):
    g = GridSpec(1, 128, 16.0)
    P = build_partition(g)
    rng = np.random.default_rng(seed)
    u, v = E.random_block_bump(g, -1, rng), E.random_block_bump(g, 0, rng)
    a = E.verify_bilinear(u, v, 1.0, 2.0, 2.0, 0.5, 0.5, RIESZ, P).ratio
    b = E.verify_bilinear(u * c, v, 1.0, 2.0, 2.0, 0.5, 0.5, RIESZ, P).ratio
    assert b == pytest.approx(a, rel=1e-12)
    assert 0 < a < math.inf


def test_bilinear_direct_summation_oracle():
    """Two single modes: the product has two modes, summed here by hand."""
    g = GridSpec(1, 256, 16.0)
    P = build_partition(g)
    k1, k2 = 7, 10
    u, v = E.single_mode(g, [k1]), E.single_mode(g, [k2])
    res = E.verify_bilinear(u, v, 1.0, 2.0, 2.0, 0.5, 0.5, RIESZ, P)
    # u * d_x Lambda^-1 v = cos(a x) * (-sin(b x)) = -(sin((a+b)x) + sin((b-a)x)) / 2
    c = g.L / 2  # each exponential carries coefficient (2L)/2 * 1/2
    w = np.zeros(g.shape, dtype=complex)
    for kk in (k1 + k2, k2 - k1):
        w[kk] += 1j * c
        w[-kk] += -1j * c
    lhs = fb_norm(SpectralField(g, w), FBNormParams(0.5), P)
    assert res.lhs == pytest.approx(lhs, rel=1e-10)


def test_fit_global_constant():
    with pytest.raises(ValueError):
        E.fit_global_constant([])
    assert E.fit_global_constant([2.0]) == 3.0
    with pytest.raises(ValueError):
        E.fit_global_constant([1.0, math.inf])


@given(st.lists(st.floats(0.0, 100.0), min_size=1, max_size=20), st.floats(0.0, 200.0))
def test_fit_global_constant_is_monotone(ratios, extra):
    assert E.fit_global_constant(ratios + [extra]) >= E.fit_global_constant(ratios)


def test_batches_are_finite_positive_and_seeded(grid1, part1):
    a = E.apriori_batch(grid1, part1, RIESZ, 10, seed=4)
    b = E.bilinear_batch(grid1, part1, RIESZ, 10, seed=4)
    assert a == E.apriori_batch(grid1, part1, RIESZ, 10, seed=4)
    assert all(0 <= x < math.inf for x in a)
    assert all(0 < x < math.inf for x in b)


def test_bilinear_blocks_fit_in_dealiased_band(grid1, part1):
    for j in E.bilinear_blocks(grid1, part1):
        assert 2 * (8 / 3) * 2.0**j <= grid1.dxi * grid1.N / 3
