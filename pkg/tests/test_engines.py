import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meshfree.approximation import (
    IDENTITY,
    LAPLACIAN,
    MonomialBasis,
    RBFConfig,
    WLSConfig,
    local_coordinates,
    partial,
    rbffd_batch,
    rbffd_weights,
    second_partial,
    second_partials,
    wls_batch,
    wls_weights,
)
from meshfree.domain import Disc2D, SpacingFunction, discretize
from meshfree.exceptions import ConfigError, DegenerateStencil
from meshfree.stencil import Stencil, find_stencils, stencil_size

CROSS = np.array([[0.0, 0.0], [0.1, 0.0], [-0.1, 0.0], [0.0, 0.1], [0.0, -0.1]])
ALL = np.arange(5)


def _stencil(n):
    return Stencil(0, np.arange(n), 1.0)


@pytest.mark.parametrize("engine", ["wls", "rbffd"])
def test_1d_three_point_second_derivative(engine):
    h = 0.1
    x = np.array([[0.0], [-h], [h]])
    op = second_partial(0, 0)
    if engine == "wls":
        w = wls_weights(_stencil(3), x, op, WLSConfig(m=2))
    else:
        w = rbffd_weights(_stencil(3), x, op, RBFConfig(m=2, k=3))
    np.testing.assert_allclose(w, np.array([-2.0, 1.0, 1.0]) / h**2, rtol=1e-10)


@pytest.mark.parametrize("engine", ["wls", "rbffd"])
def test_five_point_laplacian(engine):
    # 5 nodes cannot span all 6 quadratics: only reachable in degenerate mode
    if engine == "wls":
        w = wls_weights(_stencil(5), CROSS, LAPLACIAN, WLSConfig(m=2, allow_degenerate=True))
    else:
        w = rbffd_weights(_stencil(5), CROSS, LAPLACIAN, RBFConfig(m=2, k=3, allow_degenerate=True))
    np.testing.assert_allclose(w, np.array([-4.0, 1, 1, 1, 1]) / 0.01, rtol=1e-10)


def test_identity_rbffd_is_center_indicator():
    pts = np.random.default_rng(0).random((12, 2))
    w = rbffd_weights(_stencil(12), pts, IDENTITY, RBFConfig(m=2))
    expected = np.zeros(12)
    expected[0] = 1.0
    np.testing.assert_allclose(w, expected, atol=1e-10)


def test_identity_wls_interpolates_on_unisolvent_stencil():
    # with n == basis size the fit interpolates; for n > s WLS smooths instead
    pts = np.random.default_rng(1).random((6, 2))
    w = wls_weights(_stencil(6), pts, IDENTITY, WLSConfig(m=2, weight="gaussian"))
    np.testing.assert_allclose(w, np.eye(6)[0], atol=1e-10)


@pytest.mark.parametrize("engine", ["wls", "rbffd"])
def test_mirror_symmetric_stencil(engine):
    rng = np.random.default_rng(2)
    half = rng.uniform(0.1, 1.0, size=(6, 2))
    pts = np.vstack([[0.0, 0.0], half, half * [1, -1]])
    ids = np.arange(len(pts))
    if engine == "wls":
        w = wls_batch(pts, ids[None], [LAPLACIAN], WLSConfig(m=2, weight="gaussian"))[0, :, 0]
    else:
        w = rbffd_batch(pts, ids[None], [LAPLACIAN], RBFConfig(m=2))[0, :, 0]
    np.testing.assert_allclose(w[1:7], w[7:], rtol=1e-10)


def _random_batch(seed, d, m, B=4):
    # quasi-uniform: jittered lattice at a random scale, kNN stencils of random nodes
    rng = np.random.default_rng(seed)
    side = 8 if d == 3 else 14
    grid = np.stack(np.meshgrid(*[np.arange(side)] * d, indexing="ij"), -1).reshape(-1, d)
    pts = (grid + rng.uniform(-0.3, 0.3, grid.shape)) * rng.uniform(0.01, 10)
    sts = find_stencils(pts, stencil_size(m, d))
    inner = np.flatnonzero(np.all((grid > 2) & (grid < side - 3), axis=1))
    return pts, sts.indices[rng.choice(inner, B, replace=False)]


OPS = {2: [IDENTITY, LAPLACIAN, partial(0), partial(1)] + second_partials(2),
       3: [IDENTITY, LAPLACIAN, partial(2)] + second_partials(3)}


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), d=st.sampled_from([2, 3]), m=st.sampled_from([2, 4]),
       engine=st.sampled_from(["wls", "rbffd"]))
def test_monomials_reproduced(seed, d, m, engine):
    pts, idx = _random_batch(seed, d, m)
    ops = OPS[d]
    if engine == "wls":
        w = wls_batch(pts, idx, ops, WLSConfig(m=m, weight="gaussian"))
    else:
        w = rbffd_batch(pts, idx, ops, RBFConfig(m=m))
    X, radius = local_coordinates(pts, idx)
    basis = MonomialBasis(m, d)
    P = basis.evaluate(X)  # (B, n, s), in scaled coordinates
    for j, op in enumerate(ops):
        wj = w[:, :, j] * radius[:, None] ** op.order
        got = np.einsum("bn,bns->bs", wj, P)
        want = basis.apply_operator(op)
        scale = np.abs(wj).sum(axis=1).max()
        np.testing.assert_allclose(got, np.broadcast_to(want, got.shape), atol=1e-8 * scale)


@pytest.mark.parametrize("engine", ["wls", "rbffd"])
def test_translation_and_scaling_covariance(engine):
    pts, idx = _random_batch(7, 2, 4, B=3)
    ops = [LAPLACIAN, partial(0), second_partial(0, 1)]
    run = (lambda p: wls_batch(p, idx, ops, WLSConfig(m=4, weight="gaussian"))) if engine == "wls" else \
          (lambda p: rbffd_batch(p, idx, ops, RBFConfig(m=4)))
    w0 = run(pts)
    np.testing.assert_allclose(run(pts + [3.5, -120.0]), w0, rtol=1e-8, atol=1e-8 * np.abs(w0).max())
    c = 0.01
    ws = run(pts * c)
    for j, op in enumerate(ops):
        np.testing.assert_allclose(ws[:, :, j] * c**op.order, w0[:, :, j], rtol=1e-9,
                                   atol=1e-12 * np.abs(w0[:, :, j]).max())


def test_collinear_stencil_is_degenerate():
    pts = np.column_stack([np.linspace(0, 1, 12), np.zeros(12)])
    with pytest.raises(DegenerateStencil) as ei:
        wls_batch(pts, np.arange(12)[None], [LAPLACIAN], WLSConfig(m=2), node_ids=np.array([42]))
    assert ei.value.node == 42
    with pytest.raises(DegenerateStencil):
        rbffd_batch(pts, np.arange(12)[None], [LAPLACIAN], RBFConfig(m=2))


def test_stencil_smaller_than_basis_is_a_config_error():
    pts = np.random.default_rng(3).random((5, 2))
    with pytest.raises(ConfigError):
        wls_batch(pts, np.arange(5)[None], [LAPLACIAN], WLSConfig(m=2))
    with pytest.raises(ConfigError):
        rbffd_batch(pts, np.arange(5)[None], [LAPLACIAN], RBFConfig(m=2))


def test_invalid_configs():
    with pytest.raises(ConfigError):
        WLSConfig(weight="cubic")
    with pytest.raises(ConfigError):
        WLSConfig(weight="gaussian", sigma=0.0)
    with pytest.raises(ConfigError):
        RBFConfig(k=0)


@pytest.mark.parametrize("weight", ["uniform", "gaussian"])
def test_qr_and_svd_agree(weight):
    pts, idx = _random_batch(11, 3, 2, B=5)
    ops = [LAPLACIAN, partial(1)]
    a = wls_batch(pts, idx, ops, WLSConfig(m=2, weight=weight, solver="svd"))
    b = wls_batch(pts, idx, ops, WLSConfig(m=2, weight=weight, solver="qr"))
    np.testing.assert_allclose(a, b, rtol=1e-8, atol=1e-10 * np.abs(a).max())


def test_batch_equals_single_stencil_calls():
    pts, idx = _random_batch(13, 2, 2, B=6)
    batch = rbffd_batch(pts, idx, [LAPLACIAN], RBFConfig(m=2))[:, :, 0]
    for b in range(6):
        one = rbffd_weights(Stencil(int(idx[b, 0]), idx[b], 1.0), pts, LAPLACIAN, RBFConfig(m=2))
        np.testing.assert_allclose(one, batch[b], rtol=1e-12)


@pytest.mark.parametrize("engine", ["wls", "rbffd"])
@pytest.mark.parametrize("m", [2, 4])
def test_laplacian_consistency_order(engine, m):
    # pointwise consistency error of a second derivative scales like h^(m-1)
    errs, hs = [], [0.08, 0.04, 0.02, 0.01]
    for h in hs:
        nodes = discretize(Disc2D(), SpacingFunction.constant(h, 2), seed=1)
        X = nodes.positions
        sts = find_stencils(X, stencil_size(m, 2))
        inner = np.flatnonzero(np.linalg.norm(X, axis=1) < 0.5)
        if engine == "wls":
            w = wls_batch(X, sts.indices[inner], [LAPLACIAN], WLSConfig(m=m, weight="gaussian"))[:, :, 0]
        else:
            w = rbffd_batch(X, sts.indices[inner], [LAPLACIAN], RBFConfig(m=m))[:, :, 0]
        u = np.exp(X[:, 0] + 0.5 * X[:, 1])
        errs.append(np.abs((w * u[sts.indices[inner]]).sum(axis=1) - 1.25 * u[inner]).max())
    order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert order >= m - 1 - 0.5, (errs, order)
