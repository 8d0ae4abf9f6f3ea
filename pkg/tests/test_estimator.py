import numpy as np
import pytest
from sklearn.base import clone

from meshfree import MeshlessDifferentiator
from meshfree.domain import Disc2D, SpacingFunction, discretize


@pytest.fixture(scope="module")
def X():
    return discretize(Disc2D(), SpacingFunction.constant(0.06, 2), seed=0).positions


def test_params_and_clone():
    est = MeshlessDifferentiator(operators=("lap", "dx"), engine="rbffd", order=4)
    params = est.get_params()
    assert params["order"] == 4 and params["operators"] == ("lap", "dx")
    c = clone(est)
    assert c.get_params() == params and not hasattr(c, "shapes_")


@pytest.mark.parametrize("engine", ["wls", "rbffd", "hybrid"])
def test_transform_reproduces_quadratic_derivatives(X, engine):
    est = MeshlessDifferentiator(operators=("lap", "dx", "dxy"), engine=engine, order=2,
                                 rbf_center=(0.0, 0.0), rbf_radius=0.5).fit(X)
    u = 2 * X[:, 0] ** 2 + X[:, 0] * X[:, 1] - X[:, 1]
    out = est.transform(u)
    assert out.shape == (len(X), 3)
    np.testing.assert_allclose(out[:, 0], 4.0, atol=1e-7)
    np.testing.assert_allclose(out[:, 1], 4 * X[:, 0] + X[:, 1], atol=1e-8)
    np.testing.assert_allclose(out[:, 2], 1.0, atol=1e-7)
    if engine == "hybrid":
        assert 0 < est.n_rbffd_ < len(X)


def test_operator_matrix_matches_transform(X):
    est = MeshlessDifferentiator(order=2).fit(X)
    u = np.sin(X[:, 0]) + X[:, 1] ** 3
    D = est.operator_matrix("lap")
    np.testing.assert_allclose(D @ u, est.transform(u)[:, 0], rtol=1e-12, atol=1e-12)
    assert D.shape == (len(X), len(X))


def test_multiple_fields(X):
    est = MeshlessDifferentiator(operators=("dy",)).fit(X)
    U = np.column_stack([X[:, 1], 3 * X[:, 1]])
    np.testing.assert_allclose(est.transform(U), np.tile([1.0, 3.0], (len(X), 1)), atol=1e-9)


def test_input_validation(X):
    with pytest.raises(ValueError):
        MeshlessDifferentiator().fit(np.zeros((10, 4)))
    with pytest.raises(ValueError):
        MeshlessDifferentiator(engine="fem").fit(X)
    est = MeshlessDifferentiator().fit(X)
    with pytest.raises(ValueError):
        est.transform(np.zeros(len(X) + 1))
