"""
Rational module.
Rational DA functions bound to a lattice: the reproducing kernel K_w, the
polynomial quotient certificate, the shift-invariance rank and Gram matrices.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import linalg

import config
import realization as rz
from calculus import (
    DAFunction,
    DAPolynomial,
    apply_poly,
    backward_shift,
    check_analytic,
    evaluate_poly,
    monomial_basis,
)
from errors import ForbiddenSpectrum, InvalidParameter
from lattice import Lattice, direction_data
from realization import RationalScalarFunction, Realization

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RationalDA:
    """An admissible realization together with its values on a patch."""

    realization: Realization
    lattice: Lattice
    values: DAFunction

    @classmethod
    def from_realization(cls, r: Realization, lattice: Lattice) -> 'RationalDA':
        """
        Raises:
            ForbiddenSpectrum: if the realization is not admissible on the lattice
        """
        return cls(r, lattice, rz.evaluate(r, lattice))

    @classmethod
    def from_polynomial(cls, p: DAPolynomial, lattice: Lattice) -> 'RationalDA':
        return cls.from_realization(rz.from_polynomial(p), lattice)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.realization.shape

    @property
    def state_dim(self) -> int:
        return self.realization.state_dim

    def plus(self, other: 'RationalDA') -> 'RationalDA':
        return RationalDA.from_realization(rz.add(self.realization, other.realization), self.lattice)

    def times(self, other: 'RationalDA') -> 'RationalDA':
        """The convolution product self (.) other."""
        return RationalDA.from_realization(rz.product(self.realization, other.realization), self.lattice)

    def inverse(self) -> 'RationalDA':
        return RationalDA.from_realization(rz.inverse(self.realization, self.lattice), self.lattice)

    def tau(self, t: complex) -> np.ndarray:
        return rz.tau_eval(self.realization, t)


# -- kernel ---------------------------------------------------------------------

def kernel_factor(d: complex, M: float, lattice: Lattice) -> Realization:
    """
    Degree-1 realization of (2 + (t/M)(1 + conj d)) / (2 + (t/M)(1 - conj d)).
    """
    dc = complex(d).conjugate()
    fraction = RationalScalarFunction([2, (1 + dc) / M], [2, (1 - dc) / M])
    return rz.tau_inverse(fraction, lattice)


def kernel(lattice: Lattice, w: int, M: float) -> RationalDA:
    """
    The reproducing kernel K_w(z) = sum_n z^(n) conj(w^(n)) / M^n.

    Built as the (.)-product of one degree-1 factor per step of the origin path
    to w, so tau K_w(t) = conj(e_{conj(t)/M}(w)).

    Args:
        lattice: Lattice patch
        w: Vertex id of the kernel's centre
        M: Scale, must exceed 1

    Returns:
        RationalDA whose state dimension is the path length to w
    """
    if not M > 1:
        raise InvalidParameter(f"kernel scale M must be > 1, got {M}")
    if w not in lattice.index:
        raise InvalidParameter(f"vertex {w} is not in the lattice")
    r = Realization.constant([[1.0]])
    for d in lattice.origin_steps[w]:
        r = rz.product(r, kernel_factor(d, M, lattice))
    logger.info(f"Kernel K_{w} realized with state dimension {r.state_dim}")
    return RationalDA.from_realization(r, lattice)


def kernel_series(lattice: Lattice, w: int, M: float, N: int) -> DAFunction:
    """Truncated series sum_{n <= N} z^(n) conj(w^(n)) / M^n."""
    basis = monomial_basis(lattice, N)
    total = np.zeros(len(lattice.ids), dtype=complex)
    for n, b in enumerate(basis):
        total += b.scalar_values * np.conj(b.scalar(w)) / M ** n
    return DAFunction(lattice, total)


def gram_matrix(lattice: Lattice, ws: Sequence[int], M: float) -> np.ndarray:
    """G[i, j] = K_{w_j}(w_i)."""
    G = np.zeros((len(ws), len(ws)), dtype=complex)
    for j, wj in enumerate(ws):
        values = kernel(lattice, wj, M).values
        for i, wi in enumerate(ws):
            G[i, j] = values.scalar(wi)
    return G


@dataclass(frozen=True)
class GramCheck:
    hermitian_residual: float
    min_eigenvalue: float
    norm: float
    ok: bool


def gram_psd_check(G: np.ndarray, tol: float = 1e-8) -> GramCheck:
    """Hermitian and positive semidefinite within tol * ||G||."""
    G = np.asarray(G, dtype=complex)
    norm = float(np.linalg.norm(G, 2)) if G.size else 0.0
    hermitian_residual = float(np.max(np.abs(G - G.conj().T))) if G.size else 0.0
    eigenvalues = linalg.eigvalsh((G + G.conj().T) / 2) if G.size else np.zeros(0)
    min_eigenvalue = float(eigenvalues.min()) if eigenvalues.size else 0.0
    ok = hermitian_residual <= tol * max(norm, 1.0) and min_eigenvalue >= -tol * norm
    return GramCheck(hermitian_residual, min_eigenvalue, norm, ok)


# -- quotient certificate --------------------------------------------------------

def quotient_certificate(f: RationalDA) -> Tuple[DAPolynomial, DAPolynomial]:
    """
    DA polynomials p (scalar) and q with p (.) f = q.

    p is the tau preimage of det(I - tA) and q that of det(I - tA) tau f,
    read off the Leverrier-Faddeev coefficients:
    q_0 = p_0 D and q_j = p_j D + C adj_{j-1} B.
    """
    r = f.realization
    det_coefficients, adjugate = rz.leverrier(r.A)
    l = r.state_dim
    q = np.zeros((l + 1,) + r.shape, dtype=complex)
    for j in range(l + 1):
        q[j] = det_coefficients[j] * r.D
        if j >= 1:
            q[j] += r.C @ adjugate[j - 1] @ r.B

    if l > 0:
        dirs = direction_data(f.lattice)
        for root in P.polyroots(det_coefficients):
            if dirs.distance_to_poles(root) <= config.COORD_TOL:
                raise ForbiddenSpectrum(f"det(I - tA) has the root {root} in P")
    return DAPolynomial.from_scalars(det_coefficients), DAPolynomial(q)


def certificate_residual(f: RationalDA, p: DAPolynomial, q: DAPolynomial) -> float:
    """max over the patch of |(p I) (.) f - q|."""
    m = f.shape[0]
    p_matrix = DAPolynomial(p.scalar_coefficients[:, None, None] * np.eye(m))
    lhs = apply_poly(p_matrix, f.values)
    return lhs.max_difference(evaluate_poly(q, f.lattice))


# -- shift invariance ------------------------------------------------------------

def shift_rank(f: DAFunction, K: int, tol: Optional[float] = None) -> int:
    """
    Numerical rank of the values of f, Z- f, ..., Z-^K f.

    Columns run over matrix entries of the vertices resolved in Z-^K f; the
    rank is read off a QR factorization with column pivoting.
    """
    if K < 0:
        raise ValueError(f"K must be nonnegative, got {K}")
    check_analytic(f)
    chain: List[DAFunction] = [f]
    for _ in range(K):
        chain.append(backward_shift(chain[-1]))
    mask = chain[-1].resolved_mask
    if not mask.any():
        logger.warning("No vertex is resolved after the backward shifts; the patch is too small")
        return 0
    rows = np.stack([g.values[mask].ravel() for g in chain])
    if not np.any(rows):
        return 0
    R = linalg.qr(rows.T, mode='r', pivoting=True)[0]
    diagonal = np.abs(np.diag(R))
    rel = config.RANK_TOL if tol is None else tol
    return int(np.sum(diagonal > rel * diagonal[0]))
