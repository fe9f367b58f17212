import numpy as np
import pytest

from conftest import polys
from nambuhj.brackets import (
    VnjStructure,
    all_permutations,
    box_bracket,
    cofactor_det,
    det_generic,
    fundamental_identity_residual,
    lambda_bracket,
    leibniz_residual,
    nj_bracket,
    permutation_sign,
    skew_residual,
)
from nambuhj.errors import InvalidInputError
from nambuhj.exprlang import ScalarField
from nambuhj.jets import seed_jets


def test_structure_requires_n_at_least_3():
    with pytest.raises(InvalidInputError):
        VnjStructure.canonical(2)
    assert VnjStructure.nambu_poisson(3).box_vanishes
    assert not VnjStructure.canonical(4).box_vanishes


def test_coordinate_brackets():
    x = [0.2, -0.4, 0.9]
    np3 = VnjStructure.nambu_poisson(3)
    nj3 = VnjStructure.canonical(3)
    assert nj_bracket(np3, ["x1", "x2", "x3"], x) == 1.0
    assert nj_bracket(np3, ["x2", "x1", "x3"], x) == -1.0
    # the Box part contributes x3 * Box(dx1, dx2)
    assert nj_bracket(nj3, ["x1", "x2", "x3"], x) == pytest.approx(1.0 + 0.9)
    assert nj_bracket(nj3, ["1", "x1", "x2"], x) == pytest.approx(1.0)
    assert box_bracket(nj3, ["x1", "x2"], x) == 1.0
    assert box_bracket(nj3, ["x1", "x3"], x) == 0.0


def test_lambda_bracket_is_scaled_jacobian():
    S = VnjStructure(3, ScalarField.parse("2 + x1", 3), ScalarField.constant(0.0, 3))
    x = [1.0, 2.0, 3.0]
    # Jacobian of (x1*x2, x3, x2) at x has determinant -x2*... checked by hand: rows (x2,x1,0),(0,0,1),(0,1,0)
    assert lambda_bracket(S, ["x1*x2", "x3", "x2"], x) == pytest.approx(3.0 * -2.0)


def test_jet_mode_returns_exact_derivatives():
    S = VnjStructure.nambu_poisson(3)
    b = nj_bracket(S, ["x1^2", "x2", "x3"], [1.5, 0.0, 0.0], jet=True)
    assert b.value == pytest.approx(3.0)
    assert np.allclose(b.grad, [2.0, 0.0, 0.0])


def test_permutation_sign():
    assert permutation_sign((0, 1, 2)) == 1
    assert permutation_sign((1, 0, 2)) == -1
    assert permutation_sign((1, 2, 0)) == 1
    with pytest.raises(InvalidInputError):
        permutation_sign((0, 0, 1))


def test_determinant_matches_cofactor_oracle(rng):
    for m in range(1, 6):
        for _ in range(40):
            a = rng.uniform(-2, 2, (m, m)).tolist()
            ref = cofactor_det(a)
            assert abs(det_generic(a) - ref) <= 1e-12 * max(1.0, abs(ref))
            assert det_generic(a) == pytest.approx(np.linalg.det(a), abs=1e-12)


def test_singular_and_jet_determinants():
    assert det_generic([[1.0, 2.0], [2.0, 4.0]]) == 0.0
    x, y = seed_jets([0.0, 2.0])
    # zero leading pivot forces the cofactor path; derivatives must stay exact
    d = det_generic([[x, y], [y, x]])
    assert d.value == -4.0
    assert np.allclose(d.grad, [0.0, -4.0])


@pytest.mark.parametrize("n", [3, 4])
@pytest.mark.parametrize("kind", ["canonical", "np"])
def test_axioms_on_flat_structures(rng, n, kind):
    S = VnjStructure.canonical(n) if kind == "canonical" else VnjStructure.nambu_poisson(n, "1 + x1^2")
    perms = all_permutations(n)
    for _ in range(25):
        x = rng.uniform(-1, 1, n)
        fs = polys(rng, n, n + 1)
        perm = perms[int(rng.integers(len(perms)))]
        assert skew_residual(S, fs[:n], x, perm).relative < 1e-8
        assert leibniz_residual(S, fs[0], fs[1], fs[2:], x).relative < 1e-8
        hs = polys(rng, n, n - 1)
        assert fundamental_identity_residual(S, hs, fs[:n], x).relative < 1e-8


def test_leibniz_needs_the_unit_correction(rng):
    S = VnjStructure.canonical(3)
    x = np.array([0.3, 0.5, -0.2])
    f, g = "x1 + 2", "x2*x3 + 1"
    rest = ["x1", "x2"]
    full = leibniz_residual(S, f, g, rest, x)
    assert full.relative < 1e-12
    # without the f g {1, rest} term the plain Leibniz rule fails
    one = nj_bracket(S, ["1", *rest], x)
    fv, gv = 2.3, 0.5 * -0.2 + 1
    assert abs(fv * gv * one) > 1e-3


def test_fundamental_identity_detects_a_bad_box(rng):
    S = VnjStructure(3, ScalarField.constant(1.0, 3), ScalarField.parse("1 + x1", 3))
    worst = 0.0
    for _ in range(10):
        worst = max(worst, fundamental_identity_residual(S, polys(rng, 3, 2), polys(rng, 3, 3),
                                                         rng.uniform(-1, 1, 3)).relative)
    assert worst > 1e-3


def test_input_validation():
    S = VnjStructure.canonical(3)
    with pytest.raises(InvalidInputError):
        nj_bracket(S, ["x1", "x2"], [0, 0, 0])
    with pytest.raises(InvalidInputError):
        nj_bracket(S, ["x1", "x2", "x3"], [0, 0])
