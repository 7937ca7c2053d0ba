"""
Tests for the kernel, the quotient certificate, Gram matrices and the shift rank.
"""
import numpy as np
import pytest

from conftest import vid

TOL = 1e-9


def _random_rational(lattice, seed):
    from rational import RationalDA
    from realization import Realization

    rng = np.random.default_rng(seed)

    def matrix(rows, cols, norm):
        M = rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))
        return norm * M / np.linalg.norm(M, 2)

    r = Realization(matrix(2, 2, 0.3), matrix(2, 2, 0.3), matrix(2, 2, 0.3), np.eye(2) + matrix(2, 2, 0.1))
    return RationalDA.from_realization(r, lattice)


def test_rational_da_algebra(square2):
    """plus, times and inverse act on the realization and keep values consistent."""
    from calculus import DAFunction, exp_basis
    from rational import RationalDA
    from realization import Realization

    e = RationalDA.from_realization(Realization.scalar(0.3, 1, 0.3, 1), square2)
    assert e.values.max_difference(exp_basis(square2, 0.3)) <= TOL
    assert e.shape == (1, 1) and e.state_dim == 1

    doubled = e.plus(e)
    assert doubled.values.max_difference(2 * e.values) <= TOL
    assert doubled.tau(0.5)[0, 0] == pytest.approx(2 / 0.85)

    one = e.times(e.inverse())
    assert one.values.max_difference(DAFunction.constant(square2, 1.0)) <= TOL


def test_rational_da_rejects_forbidden(square2):
    from errors import ForbiddenSpectrum
    from rational import RationalDA
    from realization import Realization

    with pytest.raises(ForbiddenSpectrum):
        RationalDA.from_realization(Realization.scalar(-1, 1, 1, 0), square2)


def test_kernel_at_origin(square3):
    """K_0 is identically 1 and K_w(0) = 1 for every w."""
    from calculus import DAFunction
    from rational import kernel

    K0 = kernel(square3, square3.origin_id, 3.0)
    assert K0.values.max_difference(DAFunction.constant(square3, 1.0)) <= 1e-12
    for w in (vid(square3, 1), vid(square3, -1 + 2j), vid(square3, 3 - 3j)):
        assert kernel(square3, w, 2.0).values.scalar(square3.origin_id) == pytest.approx(1)


def test_kernel_one(square2):
    """On the square lattice K_1(1) = 1.5 for M = 2."""
    from rational import kernel

    K1 = kernel(square2, vid(square2, 1), 2.0)
    assert K1.values.scalar(vid(square2, 1)) == pytest.approx(1.5, abs=1e-10)


def test_kernel_state_dimension(square3):
    """The kernel realization has one state per step of the origin path."""
    from rational import kernel

    w = vid(square3, 2 - 1j)
    assert kernel(square3, w, 2.0).state_dim == square3.origin_paths[w].length


def test_kernel_matches_series(square4):
    """Realization values agree with the series truncated at N = 200."""
    from rational import kernel, kernel_series

    for w in (vid(square4, 1j), vid(square4, 2 - 1j), vid(square4, -3 + 1j)):
        exact = kernel(square4, w, 2.0).values
        assert kernel_series(square4, w, 2.0, 200).max_difference(exact) <= 1e-8 * max(1.0, exact.scale())


def test_kernel_errors(square2):
    from errors import InvalidParameter
    from rational import kernel

    with pytest.raises(InvalidParameter, match="M"):
        kernel(square2, square2.origin_id, 1.0)
    with pytest.raises(InvalidParameter, match="not in the lattice"):
        kernel(square2, 10 ** 6, 2.0)


def test_gram_matrix_psd(square3):
    """Gram matrices of the kernel over random vertex subsets are Hermitian PSD."""
    from rational import gram_matrix, gram_psd_check

    rng = np.random.default_rng(0)
    ids = list(square3.ids)
    for _ in range(3):
        ws = [int(w) for w in rng.choice(ids, size=5, replace=False)]
        check = gram_psd_check(gram_matrix(square3, ws, 2.0))
        assert check.ok, check
        assert check.min_eigenvalue >= -1e-8 * check.norm


def test_gram_psd_check_failures():
    from rational import gram_psd_check

    assert not gram_psd_check(np.array([[1, 2], [2, 1]])).ok
    assert not gram_psd_check(np.array([[1, 1], [0, 1]])).ok
    assert gram_psd_check(np.eye(3)).ok
    assert gram_psd_check(np.zeros((0, 0))).ok


def test_quotient_certificate_exponential(square2):
    """e_0.3 gives p = 1 - 0.3z and q = 1."""
    from rational import RationalDA, certificate_residual, quotient_certificate
    from realization import Realization

    f = RationalDA.from_realization(Realization.scalar(0.3, 1, 0.3, 1), square2)
    p, q = quotient_certificate(f)
    assert np.allclose(p.scalar_coefficients, [1, -0.3])
    assert np.allclose(q.scalar_coefficients, [1] + [0] * q.degree)
    assert certificate_residual(f, p, q) <= TOL


def test_quotient_certificate_polynomial(square2):
    """A DA polynomial certifies itself with p = 1."""
    from calculus import DAPolynomial
    from rational import RationalDA, quotient_certificate

    poly = DAPolynomial.from_scalars([1, 2j, -0.5])
    p, q = quotient_certificate(RationalDA.from_polynomial(poly, square2))
    assert p.degree == 0
    assert np.allclose(q.scalar_coefficients, poly.scalar_coefficients)


def test_quotient_certificate_kernel(square2):
    """A one-step kernel with a pole factor needs p of degree 1 and q of degree <= 1."""
    from rational import certificate_residual, kernel, quotient_certificate

    K = kernel(square2, vid(square2, 1j), 2.0)
    p, q = quotient_certificate(K)
    assert p.degree == 1
    assert q.degree <= 1
    assert certificate_residual(K, p, q) <= TOL


def test_quotient_certificate_random(square3):
    """Certificate residual is small for random 2x2 rational functions."""
    from rational import certificate_residual, quotient_certificate

    for seed in range(5):
        f = _random_rational(square3, seed)
        p, q = quotient_certificate(f)
        assert p.degree == f.state_dim
        assert certificate_residual(f, p, q) <= 1e-8 * max(1.0, f.values.scale())


def test_shift_rank_examples(square4):
    """rank(e_0.3) = 1, rank(constant) = 1, rank(z^(2)) = 3."""
    from calculus import DAFunction, exp_basis, monomial_basis
    from rational import shift_rank

    assert shift_rank(exp_basis(square4, 0.3), 5) == 1
    assert shift_rank(DAFunction.constant(square4, 2.0), 5) == 1
    assert shift_rank(monomial_basis(square4, 2)[2], 5) == 3
    assert shift_rank(DAFunction.constant(square4, 0.0), 2) == 0


def test_shift_rank_bound(square4):
    """shift_rank(f, l + 3) <= l + 1 for a realization of state dimension l."""
    from rational import shift_rank

    for seed in range(3):
        f = _random_rational(square4, seed)
        assert shift_rank(f.values, f.state_dim + 3) <= f.state_dim + 1


def test_shift_rank_errors(square2):
    from calculus import DAFunction
    from errors import NotAnalytic
    from rational import shift_rank

    with pytest.raises(ValueError):
        shift_rank(DAFunction.constant(square2, 1.0), -1)
    with pytest.raises(NotAnalytic):
        shift_rank(DAFunction.from_callable(square2, lambda z: abs(z) ** 2), 1)


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
