import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multifreq.constraints import ZetaMap, certify_complete
from multifreq.errors import EmptyMask
from multifreq.fem import CoefficientSet, Illumination, solve_helmholtz, standard_illuminations
from multifreq.imaging_mw import (InternalDataMw, combine_contrast, log_eps_residual,
                                  mw_data_from_values, reconstruct_contrast, reconstruct_epsilon,
                                  synthesize_mw)
from multifreq.mesh import generate_disk, generate_rectangle, interior_region

from oracles import disk_radial_solution

EPS_BUMP = {"type": "bump", "center": [0.5, 0.5], "radius": 0.25, "amplitude": 0.5, "base": 1.0}


def _data(m, c, w):
    return synthesize_mw(m, [solve_helmholtz(m, c, w, p) for p in standard_illuminations()], c)


@pytest.fixture(scope="module")
def square32():
    m = generate_rectangle(32, 32)
    return m, interior_region(m, 0.1)


@pytest.fixture(scope="module")
def bump_case(square32):
    m, reg = square32
    c = CoefficientSet.build(m, eps=EPS_BUMP)
    data = [_data(m, c, w) for w in (1.0, 2.0)]
    return m, reg, c, data


# -- synthesis ------------------------------------------------------------------


def test_static_gram(square32):
    m, _ = square32
    d = _data(m, CoefficientSet.build(m), 0.0)
    basis = np.column_stack([np.ones(m.n_vertices), m.vertices])
    assert np.allclose(d.e, basis[:, :, None] * basis[:, None, :], atol=1e-12)
    assert np.allclose(d.E[:, 1, 1], 1.0, atol=1e-10)
    assert np.allclose(d.E[:, 0, :], 0.0, atol=1e-10)


def test_rank_one_identity(bump_case):
    _, _, _, data = bump_case
    for d in data:
        assert np.allclose(d.e[:, 0, 1] ** 2, d.e[:, 0, 0] * d.e[:, 1, 1], rtol=0, atol=1e-10)


def test_bessel_energy():
    m = generate_disk(5)
    w = 2.0
    d = _data(m, CoefficientSet.build(m), w)
    exact = disk_radial_solution(w, np.hypot(*m.vertices.T)) ** 2
    assert np.abs(d.e[:, 0, 0].real - exact).max() / exact.max() < 0.02


@given(w=st.floats(0.0, 4.0))
@settings(max_examples=8, deadline=None)
def test_gram_positivity(w):
    m = generate_rectangle(12, 12)
    d = _data(m, CoefficientSet.build(m, eps=EPS_BUMP), w)
    assert np.trace(d.e, axis1=1, axis2=2).real.min() >= 0
    assert np.trace(d.E, axis1=1, axis2=2).real.min() >= 0


def test_rejects_tensor_a_and_loss(square32):
    m, _ = square32
    for c in (CoefficientSet.build(m, a=[[2.0, 0.0], [0.0, 1.0]]), CoefficientSet.build(m, sigma=1.0)):
        sols = [solve_helmholtz(m, c, 1.0, p) for p in standard_illuminations()]
        with pytest.raises(ValueError):
            synthesize_mw(m, sols, c)


def test_data_shape_validation(square32):
    m, _ = square32
    with pytest.raises(ValueError):
        InternalDataMw(m, 1.0, np.zeros((m.n_vertices, 2, 2)), np.zeros((m.n_vertices, 3, 3)))


# -- contrast -----------------------------------------------------------------------


def test_contrast_unit_coefficients():
    m = generate_disk(5)
    c = CoefficientSet.build(m)
    res = reconstruct_contrast(_data(m, c, 2.0), interior_region(m, 0.1))
    assert np.abs(res.values[res.mask] - 1).max() < 0.05


def test_contrast_bump(bump_case):
    m, reg, c, data = bump_case
    eps = c.nodal("eps", m)
    res = combine_contrast([reconstruct_contrast(d, reg) for d in data])
    mk = res.mask
    assert np.abs(res.values[mk] * eps[mk] - 1).max() < 0.05


@given(c=st.floats(1e-3, 1e3))
@settings(max_examples=15, deadline=None)
def test_contrast_scaling_invariance(bump_case, c):
    _, reg, _, data = bump_case
    base = reconstruct_contrast(data[1], reg)
    scaled = reconstruct_contrast(data[1].scaled(c), reg)
    assert np.array_equal(base.mask, scaled.mask)
    mk = base.mask
    assert np.allclose(scaled.values[mk], base.values[mk], rtol=1e-10, atol=0)


def _plane_wave_data(n, w=2.0):
    m = generate_rectangle(n, n)
    x, y = m.vertices.T
    s = np.sqrt(0.5)
    u = np.column_stack([np.cos(w * x), np.cos(w * y), np.sin(w * s * (x + y))])
    zero = 0 * x
    g = np.stack([np.column_stack([-w * np.sin(w * x), zero]),
                  np.column_stack([zero, -w * np.sin(w * y)]),
                  np.column_stack([w * s * np.cos(w * s * (x + y))] * 2)], axis=2)
    ones = np.ones(m.n_vertices)
    return m, mw_data_from_values(m, w, u, g, ones, ones)


def test_contrast_from_analytic_fields():
    errs = []
    for n in (16, 32):
        m, d = _plane_wave_data(n)
        res = reconstruct_contrast(d, interior_region(m, 0.1))
        errs.append(np.abs(res.values[res.mask] - 1).max())
    assert errs[1] < 0.05
    assert errs[0] / errs[1] > 2.0


def test_empty_mask(square32):
    m, reg = square32
    d = _data(m, CoefficientSet.build(m), 0.0)
    flat = InternalDataMw(m, 0.0, np.zeros_like(d.e), d.E)
    with pytest.raises(EmptyMask):
        reconstruct_contrast(flat, reg)


def test_masks_cover_region_when_cross_complete(bump_case):
    m, reg, c, _ = bump_case
    freqs = (1.0, 2.0, 3.0)
    sols = {w: [solve_helmholtz(m, c, w, p) for p in standard_illuminations()] for w in freqs}
    rep = certify_complete(ZetaMap("zeta_cross"), sols, reg, m)
    assert rep.complete
    union = combine_contrast([reconstruct_contrast(synthesize_mw(m, s, c), reg)
                              for s in sols.values()])
    assert np.array_equal(union.masked_vertices, np.sort(reg.vertices))


# -- log epsilon ------------------------------------------------------------------------


def test_log_eps_constant(square32):
    m, reg = square32
    c = CoefficientSet.build(m)
    data = [_data(m, c, w) for w in (1.0, 2.0)]
    con = combine_contrast([reconstruct_contrast(d, reg) for d in data])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # the literal exponent disagrees here by design
        res = reconstruct_epsilon(data, con, Illumination.from_function(lambda x, y: 0 * x))
    assert np.abs(res.log_epsilon).max() < 1e-2
    assert res.exponent_mode == "omega_squared"


def test_epsilon_bump_and_positivity(bump_case):
    m, reg, c, data = bump_case
    con = combine_contrast([reconstruct_contrast(d, reg) for d in data])
    ev = c.evaluators["eps"]
    log_truth = Illumination.from_function(lambda x, y: np.log(ev(np.column_stack([x, y]))))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = reconstruct_epsilon(data, con, log_truth)
    truth = c.nodal("eps", m)[res.parent_index]
    assert np.all(res.epsilon > 0) and np.all(res.other_mode_epsilon > 0)
    assert np.abs(res.epsilon - truth).max() / truth.max() < 0.05


def test_literal_exponent_residual(square32):
    m, reg = square32
    c = CoefficientSet.build(m)
    d = _data(m, c, 2.0)
    con = reconstruct_contrast(d, reg)
    zero = Illumination.from_function(lambda x, y: 0 * x)
    good = log_eps_residual([d], con, zero)
    bad = log_eps_residual([d], con, zero, "omega_literal")
    assert bad >= 10 * good


def test_mode_divergence_warns(square32):
    m, reg = square32
    c = CoefficientSet.build(m)
    d = _data(m, c, 2.0)
    con = reconstruct_contrast(d, reg)
    with pytest.warns(UserWarning, match="modes differ"):
        res = reconstruct_epsilon([d], con, Illumination.from_function(lambda x, y: 0 * x))
    assert res.mode_divergence > 0.10


def test_unknown_mode(square32):
    m, reg = square32
    d = _data(m, CoefficientSet.build(m), 1.0)
    with pytest.raises(ValueError):
        reconstruct_epsilon([d], reconstruct_contrast(d, reg), Illumination.one(), "omega_cubed")
