import numpy as np
import pytest

from meshfree.problems import BoussinesqProblem, PoissonProblem, navier_residual_fd


def test_poisson_solution_values():
    pb = PoissonProblem()
    assert pb.u(np.array([[0.5, 0.5]]))[0] == 1.0
    assert pb.f_lap(np.array([[0.5, 0.5]]))[0] == pytest.approx(-4000.0)
    assert pb.u(np.array([[0.0, 0.0]]))[0] < 1e-200


def test_poisson_source_matches_finite_differences():
    pb = PoissonProblem()
    x = np.random.default_rng(0).uniform(0.4, 0.6, size=(100, 2))
    h = 1e-4
    lap = sum((pb.u(x + e) - 2 * pb.u(x) + pb.u(x - e)) / h**2 for e in np.eye(2) * h)
    f = pb.f_lap(x)
    assert np.max(np.abs(lap - f) / np.max(np.abs(f))) < 1e-5


def test_lame_parameters():
    pb = BoussinesqProblem()
    assert pb.mu == pytest.approx(1 / 2.66)
    assert pb.lam == pytest.approx(0.33 / (1.33 * 0.34))


def test_boussinesq_symmetry():
    pb = BoussinesqProblem()
    x = np.array([[-0.3, -0.5, -0.7]])
    swapped = x[:, [1, 0, 2]]
    u, v = pb.displacement(x)[0], pb.displacement(swapped)[0]
    assert u[0] == pytest.approx(v[1]) and u[1] == pytest.approx(v[0]) and u[2] == pytest.approx(v[2])
    assert pb.magnitude(x)[0] == pytest.approx(np.linalg.norm(u))


def _far_points(n=20):
    rng = np.random.default_rng(3)
    x = rng.uniform(-1.0, -0.2, size=(4 * n, 3))
    return x[np.linalg.norm(x, axis=1) >= 0.3][:n]


def test_classical_boussinesq_satisfies_navier():
    pb = BoussinesqProblem()
    x = _far_points()
    res = [np.abs(navier_residual_fd(pb.displacement, pb.lam, pb.mu, x, h)).max() for h in (0.04, 0.02, 0.01)]
    assert res[0] > res[1] > res[2]
    assert res[2] < 1e-3


def test_printed_form_does_not():
    pb = BoussinesqProblem(form="printed")
    x = _far_points()
    res = [np.abs(navier_residual_fd(pb.displacement, pb.lam, pb.mu, x, h)).max() for h in (0.02, 0.01)]
    assert min(res) > 1.0
