import numpy as np
import pytest

from conftest import polys
from nambuhj.brackets import VnjStructure
from nambuhj.errors import InvalidInputError
from nambuhj.exprlang import ScalarField
from nambuhj.fields import HamiltonianSystem, ham_vf
from nambuhj.flows import integrate
from nambuhj.hj import (
    Cloud,
    QuasiLinearPde,
    Section,
    assemble_hj_pde,
    estimate_cloud_residual,
    hj_residual,
    lift_trajectory,
    project_vf,
    relatedness_residual,
    solve_characteristics,
    theorem_sign,
)


@pytest.fixture
def worked():
    return HamiltonianSystem(VnjStructure.nambu_poisson(3), ("x1", "x3"))


def test_projection_reads_only_the_value(worked):
    a = Section.parse("x1 + x2", 3)
    b = Section.parse("0.3 + 5*(x1 - 0.1) - 2*(x2 - 0.2)", 3)
    xN = np.array([0.1, 0.2])
    assert a.lift(xN)[-1] == pytest.approx(b.lift(xN)[-1])
    assert project_vf(worked, a, xN) == pytest.approx(project_vf(worked, b, xN))
    assert project_vf(worked, a, xN).tolist() == [0.0, -1.0]


def test_hand_computed_residuals(worked):
    xN = np.array([0.4, -0.3])
    sol = Section.parse("x1^2", 3)
    assert relatedness_residual(worked, sol, xN).tolist() == [0.0, 0.0, 0.0]
    assert hj_residual(worked, sol, xN).value == 0.0
    bad = Section.parse("x2", 3)
    r = relatedness_residual(worked, bad, xN)
    assert r[:2].tolist() == [0.0, 0.0] and abs(r[2]) == 1.0
    assert abs(hj_residual(worked, bad, xN).value) == 1.0


def test_constant_hamiltonians_give_zero(rng):
    sys = HamiltonianSystem(VnjStructure.canonical(4), ("1", "2", "-3"))
    sec = Section.parse("x1*x2 + x3^3", 4)
    for _ in range(5):
        xN = rng.uniform(-1, 1, 3)
        assert hj_residual(sys, sec, xN).value == 0.0


def test_theorem_sign_is_fixed():
    assert theorem_sign() in (-1.0, 1.0)
    assert theorem_sign() == theorem_sign()


@pytest.mark.parametrize("n", [3, 4])
def test_theorem_equivalence(rng, n):
    s = theorem_sign()
    for _ in range(40):
        S = VnjStructure(n, polys(rng, n, 1, degree=1)[0], polys(rng, n, 1, degree=2)[0])
        sys = HamiltonianSystem(S, tuple(polys(rng, n, n - 1)))
        sec = Section(n, ScalarField.parse(polys(rng, n - 1, 1)[0], n - 1))
        xN = rng.uniform(-1, 1, n - 1)
        r = hj_residual(sys, sec, xN)
        rel = relatedness_residual(sys, sec, xN)
        assert np.all(rel[:-1] == 0.0)
        assert abs(r.value - s * rel[-1]) < 1e-10 * r.scale


@pytest.mark.parametrize("n", [3, 4])
def test_assembled_pde_matches_residual(rng, n):
    sys = HamiltonianSystem(VnjStructure.canonical(n), tuple(polys(rng, n, n - 1)))
    pde = assemble_hj_pde(sys)
    for _ in range(100):
        xN = rng.uniform(-1, 1, n - 1)
        u = float(rng.uniform(-1, 1))
        g = rng.uniform(-2, 2, n - 1)
        # a linear section through (xN, u) with gradient g
        text = " + ".join([repr(u)] + [f"({float(g[k])!r})*(x{k + 1} - ({float(xN[k])!r}))" for k in range(n - 1)])
        r = hj_residual(sys, Section.parse(text, n), xN)
        assert abs(pde.residual(xN, u, g) - r.value) <= 1e-10 * r.scale


def test_worked_pde_coefficients(worked):
    A, B = assemble_hj_pde(worked)([0.2, 0.5], 0.3)
    assert A.tolist() == [0.0, -1.0] and B == 0.0


def test_flow_lifting(worked):
    sec = Section.parse("x1^2", 3)
    xN0 = np.array([0.5, 0.2])
    base = integrate(lambda y: project_vf(worked, sec, y), xN0, 0.0, 0.5, 1e-3)
    full = integrate(lambda y: ham_vf(worked, y), sec.lift(xN0), 0.0, 0.5, 1e-3)
    assert np.max(np.abs(lift_trajectory(sec, base) - full.states)) < 1e-8


def test_pde_from_expressions():
    pde = QuasiLinearPde.from_expressions(["1", "c*u"], "u^2", {"c": 2.0})
    A, B = pde([0.0, 0.0], 3.0)
    assert A.tolist() == [1.0, 6.0] and B == 9.0
    with pytest.raises(InvalidInputError):
        QuasiLinearPde.from_expressions(["1"], "0", {"u": 1.0})


def transport_cloud(sp, count=21, c=0.5):
    pde = QuasiLinearPde.from_expressions(["1", "c"], "0", {"c": c})
    seeds = [([0.0, 0.3 + i * sp], np.sin(0.3 + i * sp)) for i in range(count)]
    h = 0.6 * sp / np.hypot(1.0, c)
    return pde, solve_characteristics(pde, seeds, 10 * h, h)


def test_transport_closed_form():
    pde = QuasiLinearPde.from_expressions(["1", "0.5"], "0")
    seeds = [([0.0, y], np.sin(y)) for y in np.linspace(-1, 1, 11)]
    cloud = solve_characteristics(pde, seeds, 1.0, 0.01)
    exact = np.sin(cloud.points[:, 1] - 0.5 * cloud.points[:, 0])
    assert np.max(np.abs(cloud.u - exact)) < 1e-8
    assert set(cloud.flags.values()) == {"ok"}
    assert cloud.s.min() == -1.0 and cloud.s.max() == 1.0


def test_exponential_source():
    pde = QuasiLinearPde.from_expressions(["1", "0"], "u")
    seeds = [([0.0, y], 1.0) for y in np.linspace(-1, 1, 5)]
    cloud = solve_characteristics(pde, seeds, 1.0, 0.01)
    exact = np.exp(cloud.points[:, 0])
    assert np.max(np.abs(cloud.u - exact) / exact) < 1e-8


def test_degenerate_characteristics_are_flagged():
    pde = QuasiLinearPde.from_expressions(["0", "0"], "1")
    cloud = solve_characteristics(pde, [([0.0, 0.0], 1.0)], 1.0, 0.1)
    assert cloud.flags == {0: "degenerate"}
    assert len(cloud) == 1


def test_cloud_csv_header():
    pde, cloud = transport_cloud(1e-2, count=3)
    lines = cloud.to_csv().splitlines()
    assert lines[0] == "x1,x2,u,seed_id,s"
    assert len(lines) == len(cloud) + 1


def test_transport_cloud_residual():
    pde, cloud = transport_cloud(1e-5)
    stats = estimate_cloud_residual(cloud, pde)
    assert stats.max < 1e-6 and stats.excluded == 0


def test_quadratic_fit_is_more_accurate():
    pde, cloud = transport_cloud(1e-2)
    lin = estimate_cloud_residual(cloud, pde)
    quad = estimate_cloud_residual(cloud, pde, degree=2)
    assert quad.max < 1e-10 < lin.max


def test_exact_linear_data(rng):
    pts = rng.uniform(-1, 1, (200, 3))
    g = np.array([0.5, -1.0, 2.0])
    pde = QuasiLinearPde.from_expressions(["1", "2", "3"], "4.5")
    cloud = Cloud(pts, pts @ g, np.zeros(200, dtype=int), np.zeros(200))
    assert estimate_cloud_residual(cloud, pde).max < 1e-10


def test_fault_injection():
    pde, cloud = transport_cloud(1e-3)
    clean = estimate_cloud_residual(cloud, pde)
    cloud.u[100] += 0.1
    dirty = estimate_cloud_residual(cloud, pde)
    assert dirty.max > 100 * clean.max
    # an anchored fit flags the stencils that contain the bad point
    from scipy.spatial import cKDTree
    _, near = cKDTree(cloud.points).query(cloud.points[100], k=7)
    assert np.nanargmax(dirty.residuals) in set(near.tolist())


def test_too_few_points():
    pde, cloud = transport_cloud(1e-2, count=1)
    small = type(cloud)(cloud.points[:5], cloud.u[:5], cloud.seed_id[:5], cloud.s[:5])
    with pytest.raises(InvalidInputError):
        estimate_cloud_residual(small, pde)
