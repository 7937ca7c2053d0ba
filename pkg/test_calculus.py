"""
Tests for DA functions, shifts, eigenfunctions, bases and the convolution product.
"""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import vid

TOL = 1e-9


def _random_da(lattice, seed=0, depth=8):
    from calculus import DAFunction, monomial_basis

    rng = np.random.default_rng(seed)
    coefficients = 0.5 * (rng.normal(size=depth + 1) + 1j * rng.normal(size=depth + 1))
    basis = monomial_basis(lattice, depth)
    return DAFunction(lattice, sum(c * b.scalar_values for c, b in zip(coefficients, basis)))


def test_discrete_integral(square2):
    """Trapezoid integrals along short paths."""
    from calculus import DAFunction, discrete_integral

    origin, one = square2.origin_id, vid(square2, 1)
    ones = DAFunction.constant(square2, 1.0)
    z = DAFunction.coordinate(square2)
    assert discrete_integral(ones, [origin, one])[0, 0] == pytest.approx(1)
    assert discrete_integral(z, [origin, one])[0, 0] == pytest.approx(0.5)
    loop = [origin, one, vid(square2, 1 + 1j), vid(square2, 1j), origin]
    assert abs(discrete_integral(z, loop)[0, 0]) < 1e-15
    assert np.all(discrete_integral(z, [origin]) == 0)


def test_discrete_integral_invalid_path(square2):
    from calculus import DAFunction, discrete_integral
    from errors import InvalidPath

    z = DAFunction.coordinate(square2)
    with pytest.raises(InvalidPath):
        discrete_integral(z, [square2.origin_id, vid(square2, 1 + 1j)])


def test_cr_residual(square2):
    """z and constants are DA; conj(z) has residual 2 on every face."""
    from calculus import DAFunction, cr_residual

    assert cr_residual(DAFunction.coordinate(square2)) < 1e-15
    assert cr_residual(DAFunction.constant(square2, 3 - 2j)) == 0
    conj = DAFunction.from_callable(square2, lambda z: z.conjugate())
    assert cr_residual(conj) == pytest.approx(2)


def test_forward_shift_examples(square2):
    """Z+1 = z, (Z+z)(1) = 0, (Z+z)(i) = -(1+i)/2."""
    from calculus import DAFunction, forward_shift

    z = DAFunction.coordinate(square2)
    assert forward_shift(DAFunction.constant(square2, 1.0)).max_difference(z) < 1e-12
    shifted = forward_shift(z)
    assert abs(shifted.scalar(vid(square2, 1))) < 1e-15
    assert shifted.scalar(vid(square2, 1j)) == pytest.approx(-(1 + 1j) / 2)
    assert shifted.scalar(square2.origin_id) == 0


def test_shift_rejects_non_analytic(square2):
    from calculus import DAFunction, backward_shift, forward_shift
    from errors import NotAnalytic

    conj = DAFunction.from_callable(square2, lambda z: z.conjugate())
    with pytest.raises(NotAnalytic):
        forward_shift(conj)
    with pytest.raises(NotAnalytic):
        backward_shift(conj)


def test_backward_shift_examples(square2):
    """Z- c = 0 and Z- z = 1."""
    from calculus import DAFunction, backward_shift

    assert backward_shift(DAFunction.constant(square2, 2 + 1j)).scale() == 0
    h = backward_shift(DAFunction.coordinate(square2))
    assert h.max_difference(DAFunction.constant(square2, 1.0)) < 1e-12


def test_backward_shift_unresolved_column(square2):
    """Only the column without right neighbours depends on the boundary convention."""
    from calculus import backward_shift

    h = backward_shift(_random_da(square2))
    right_column = {v for v, z in square2.vertices if abs(z.real - 2) < 1e-9}
    assert h.unresolved == right_column


def test_backward_shift_inconsistent_cycle():
    """A unit square cycle without its face lets both rows seed the vertical edge differently."""
    from calculus import DAFunction, backward_shift
    from errors import ConsistencyError
    from lattice import Lattice

    cycle = Lattice.build(
        vertices=[(0, 0), (1, 1), (2, 1j), (3, 1 + 1j)],
        edges=[(0, 1), (0, 2), (1, 3), (2, 3)],
        faces=[],
        origin_id=0,
    )
    f = DAFunction(cycle, np.array([0, 1, 5, 2], dtype=complex))
    with pytest.raises(ConsistencyError, match="edge relation"):
        backward_shift(f)


def test_shift_identities(square3):
    """Z- Z+ f = f on resolved vertices and Z+ Z- f = f - f(0) everywhere."""
    from calculus import DAFunction, backward_shift, edge_relation_residual, forward_shift

    for seed in range(5):
        f = _random_da(square3, seed)
        scale = max(1.0, f.scale())
        assert backward_shift(forward_shift(f)).max_difference(f, resolved_only=True) <= TOL * scale
        h = backward_shift(f)
        f0 = DAFunction.constant(square3, f.at(square3.origin_id))
        assert forward_shift(h).max_difference(f - f0) <= TOL * scale
        assert edge_relation_residual(h, f) <= TOL * scale


def test_exp_basis(square2):
    """e_t(0) = 1, e_t(1) = 1+t, e_t(i) = (2+t(1+i))/(2+t(1-i))."""
    from calculus import eigen_edge_residual, exp_basis

    t = 0.3 + 0.2j
    e = exp_basis(square2, t)
    assert e.scalar(square2.origin_id) == 1
    assert e.scalar(vid(square2, 1)) == pytest.approx(1 + t)
    assert e.scalar(vid(square2, 1j)) == pytest.approx((2 + t * (1 + 1j)) / (2 + t * (1 - 1j)))
    assert eigen_edge_residual(e, t) < 1e-12


def test_exp_basis_forbidden(square2):
    from calculus import exp_basis
    from errors import ForbiddenParameter

    with pytest.raises(ForbiddenParameter):
        exp_basis(square2, -1)
    with pytest.raises(ForbiddenParameter):
        exp_basis(square2, -1 + 1j + 1e-12)


def test_eigenrelation(square3):
    """Z- e_0.3 = 0.3 e_0.3 on resolved vertices."""
    from calculus import backward_shift, exp_basis

    e = exp_basis(square3, 0.3)
    assert backward_shift(e).max_difference(0.3 * e, resolved_only=True) <= TOL * e.scale()


@settings(max_examples=20, deadline=None)
@given(
    r=st.floats(min_value=0.0, max_value=0.8),
    theta=st.floats(min_value=0.0, max_value=2 * np.pi),
)
def test_eigenrelation_random_t(rhombic3, r, theta):
    """The eigenrelation holds for t anywhere in the disk of radius 0.8."""
    from calculus import backward_shift, cr_residual, exp_basis

    t = r * np.exp(1j * theta)
    e = exp_basis(rhombic3, t)
    assert cr_residual(e) <= TOL * e.scale()
    assert backward_shift(e).max_difference(t * e, resolved_only=True) <= TOL * e.scale()


def test_monomial_basis(square2):
    """z^(1) = z, z^(2)(1) = 0, z^(2)(i) = -(1+i)/2, z^(n)(0) = 0."""
    from calculus import DAFunction, cr_residual, monomial_basis

    basis = monomial_basis(square2, 6)
    assert len(basis) == 7
    assert basis[1].max_difference(DAFunction.coordinate(square2)) <= 1e-12
    assert abs(basis[2].scalar(vid(square2, 1))) <= 1e-12
    assert abs(basis[2].scalar(vid(square2, 1j)) + (1 + 1j) / 2) <= 1e-12
    for n, b in enumerate(basis):
        assert cr_residual(b) <= TOL * max(1.0, b.scale())
        if n:
            assert b.scalar(square2.origin_id) == 0


def test_taylor_cross_oracle(patch3):
    """Series coefficients of e_t agree with the Z+ recursion up to n = 12."""
    from calculus import exp_taylor_coefficients, monomial_basis

    coefficients = exp_taylor_coefficients(patch3, 12)
    for n, b in enumerate(monomial_basis(patch3, 12)):
        assert np.max(np.abs(coefficients[n] - b.scalar_values)) <= TOL * max(1.0, np.max(np.abs(coefficients[n])))


def test_linear_independence(square4):
    from calculus import monomial_basis

    stacked = np.stack([b.scalar_values for b in monomial_basis(square4, 8)])
    assert np.linalg.matrix_rank(stacked) == 9


def test_partial_sums_converge(square4):
    """sum_{n <= 200} 0.5^n z^(n) matches e_0.5."""
    from calculus import exp_basis, monomial_basis

    partial = sum(0.5 ** n * b.scalar_values for n, b in enumerate(monomial_basis(square4, 200)))
    exact = exp_basis(square4, 0.5).scalar_values
    assert np.max(np.abs(partial - exact)) <= 1e-8 * max(1.0, np.max(np.abs(exact)))


def test_duffin_basis(square2):
    """rho_1 = z, rho_2(1) = 1 and the Duffin basis spans the same space as z^(n)."""
    from calculus import DAFunction, cr_residual, duffin_basis, monomial_basis

    rho = duffin_basis(square2, 3)
    assert rho[1].max_difference(DAFunction.coordinate(square2)) <= 1e-12
    assert rho[2].scalar(vid(square2, 1)) == pytest.approx(1)
    for r in rho:
        assert cr_residual(r) <= TOL * max(1.0, r.scale())
    stacked = np.stack([b.scalar_values for b in rho + monomial_basis(square2, 3)])
    assert np.linalg.matrix_rank(stacked) == 4


def test_path_independence(square3):
    """Integrals and e_t agree across distinct paths with equal endpoints."""
    from calculus import discrete_integral, eigen_value_along
    from lattice import distinct_paths

    f = _random_da(square3, seed=3)
    t = 0.4 - 0.3j
    for v, path in square3.origin_paths.items():
        if path.length < 2:
            continue
        paths = distinct_paths(square3, square3.origin_id, v, 3)
        integrals = [discrete_integral(f, p)[0, 0] for p in paths]
        products = [eigen_value_along(square3, t, p) for p in paths]
        assert max(abs(x - integrals[0]) for x in integrals) <= TOL * max(1.0, f.scale())
        assert max(abs(x - products[0]) for x in products) <= TOL * max(1.0, abs(products[0]))


def test_primitive_is_analytic(square3):
    from calculus import cr_residual, primitive

    F = primitive(_random_da(square3, seed=5))
    assert cr_residual(F) <= TOL * max(1.0, F.scale())
    assert F.scalar(square3.origin_id) == 0


def test_convolve_poly():
    """z^(1) (.) z^(2) = z^(3), (1+z)(.)(1-z) = 1 - z^(2), p (.) 1 = p."""
    from calculus import DAPolynomial, convolve_poly

    z1 = DAPolynomial.from_scalars([0, 1])
    z2 = DAPolynomial.from_scalars([0, 0, 1])
    assert np.allclose(convolve_poly(z1, z2).scalar_coefficients, [0, 0, 0, 1])
    product = convolve_poly(DAPolynomial.from_scalars([1, 1]), DAPolynomial.from_scalars([1, -1]))
    assert np.allclose(product.scalar_coefficients, [1, 0, -1])
    p = DAPolynomial.from_scalars([2, 0.5j, -1])
    assert convolve_poly(p, DAPolynomial.identity()) == p


def test_convolve_poly_shapes():
    from calculus import DAPolynomial, convolve_poly
    from errors import ShapeError

    p = DAPolynomial(np.ones((2, 2, 3)))
    q = DAPolynomial(np.ones((2, 2, 2)))
    with pytest.raises(ShapeError):
        convolve_poly(p, q)
    assert convolve_poly(q, p).shape == (2, 3)


def test_polynomial_trims_leading_zeros():
    from calculus import DAPolynomial

    assert DAPolynomial.from_scalars([1, 2, 0, 0]).degree == 1
    assert DAPolynomial.from_scalars([0, 0]).degree == 0


def test_apply_poly(square2):
    """1 (.) f = f, z (.) 1 = z and (1 - 0.3z) (.) e_0.3 = 1."""
    from calculus import DAFunction, DAPolynomial, apply_poly, exp_basis

    f = _random_da(square2, seed=1)
    assert apply_poly(DAPolynomial.identity(), f).max_difference(f) == 0
    one = DAFunction.constant(square2, 1.0)
    z = apply_poly(DAPolynomial.from_scalars([0, 1]), one)
    assert z.max_difference(DAFunction.coordinate(square2)) <= 1e-12
    result = apply_poly(DAPolynomial.from_scalars([1, -0.3]), exp_basis(square2, 0.3))
    assert result.max_difference(one) <= TOL


def test_apply_poly_ring(square3):
    """z^(m) (.) z^(n) = z^(m+n) pointwise."""
    from calculus import DAPolynomial, apply_poly, monomial_basis

    basis = monomial_basis(square3, 10)
    for m in range(6):
        p = DAPolynomial.from_scalars([0] * m + [1])
        for n in range(11 - m):
            assert apply_poly(p, basis[n]).max_difference(basis[m + n]) <= TOL * max(1.0, basis[m + n].scale())


def test_apply_poly_right_and_evaluate(square2):
    """Right-sided application and evaluate_poly agree with direct sums."""
    from calculus import DAFunction, DAPolynomial, apply_poly_right, evaluate_poly, monomial_basis

    coefficients = np.array([[[1, 2]], [[0.5j, 0]], [[0, -1]]], dtype=complex)
    p = DAPolynomial(coefficients)
    basis = monomial_basis(square2, 2)
    direct = sum(b.scalar_values[:, None, None] * c for b, c in zip(basis, coefficients))
    assert evaluate_poly(p, square2).max_difference(DAFunction(square2, direct)) <= 1e-12

    one = DAFunction.constant(square2, 1.0)
    assert apply_poly_right(one, p).max_difference(DAFunction(square2, direct)) <= TOL


def test_markov_from_function(square3):
    """Taylor data of e_0.3 are powers of 0.3."""
    from calculus import exp_basis, markov_from_function

    markov = markov_from_function(exp_basis(square3, 0.3), 3)
    assert np.allclose([m[0, 0] for m in markov], [1, 0.3, 0.09, 0.027], atol=TOL)


def test_function_arithmetic_shapes(square2):
    from calculus import DAFunction
    from errors import ShapeError

    scalar = DAFunction.constant(square2, 1.0)
    matrix = DAFunction.constant(square2, np.eye(2))
    with pytest.raises(ShapeError):
        scalar + matrix
    assert matrix.left(np.ones((3, 2))).shape == (3, 2)
    with pytest.raises(ShapeError):
        DAFunction(square2, np.zeros(3))


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
