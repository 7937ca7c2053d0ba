"""
Realization module.
State-space calculus for rational DA functions f = D + C(I - zA)^(-.) (.) (zB):
spectrum exclusion, the (.)-resolvent, evaluation on a patch, sum, product and
inverse of realizations, the tau transform and its inverse, and realizations
from Markov parameters.
"""
import json
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import linalg

import config
import series
from calculus import DAFunction, DAPolynomial, forward_shift, monomial_basis
from errors import (
    ForbiddenSpectrum,
    IoError,
    NotRealizable,
    ParseError,
    PoleError,
    RankError,
    ShapeError,
    SingularD,
)
from lattice import DirectionData, Lattice, Path, check_path, direction_data

logger = logging.getLogger(__name__)


def _matrix(value, rows: Optional[int] = None, cols: Optional[int] = None) -> np.ndarray:
    """Coerce to a 2-D complex array; empty input takes the shape (rows, cols)."""
    m = np.asarray(value, dtype=complex)
    if m.size == 0 and rows is not None and cols is not None:
        return np.zeros((rows, cols), dtype=complex)
    if m.ndim == 0:
        return m.reshape(1, 1)
    if m.ndim == 1:
        return m.reshape(-1, 1)
    return m


@dataclass(frozen=True, eq=False)
class Realization:
    """
    Quadruple (A, B, C, D) with A l x l, B l x n, C m x l and D m x n.

    A state dimension of 0 is allowed; such a realization is the constant D.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        D = _matrix(self.D)
        m, n = D.shape
        A = _matrix(self.A, 0, 0)
        l = A.shape[0]
        B = _matrix(self.B, l, n)
        C = _matrix(self.C, m, l)
        if A.shape != (l, l):
            raise ShapeError(f"A must be square, got {A.shape}")
        if B.shape != (l, n):
            raise ShapeError(f"B must be {l}x{n}, got {B.shape}")
        if C.shape != (m, l):
            raise ShapeError(f"C must be {m}x{l}, got {C.shape}")
        for name, value in (('A', A), ('B', B), ('C', C), ('D', D)):
            value = value.copy()
            value.flags.writeable = False
            object.__setattr__(self, name, value)

    @classmethod
    def constant(cls, D) -> 'Realization':
        D = _matrix(D)
        m, n = D.shape
        return cls(np.zeros((0, 0)), np.zeros((0, n)), np.zeros((m, 0)), D)

    @classmethod
    def scalar(cls, a: complex, b: complex, c: complex, d: complex) -> 'Realization':
        return cls([[a]], [[b]], [[c]], [[d]])

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.D.shape

    def is_admissible(self, lattice: Lattice) -> bool:
        return check_spectrum(self.A, direction_data(lattice))


# -- JSON ----------------------------------------------------------------------

def encode_matrix(matrix: np.ndarray) -> List:
    return [[[float(x.real), float(x.imag)] for x in row] for row in matrix]


def _decode(data, rows: int, cols: int, name: str) -> np.ndarray:
    try:
        array = np.asarray(data, dtype=float)
        if array.size == 0:
            return np.zeros((rows, cols), dtype=complex)
        if array.shape != (rows, cols, 2):
            raise ParseError(f"{name} must be a {rows}x{cols} matrix of [re, im] pairs")
    except (TypeError, ValueError) as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError(f"{name} is not a numeric matrix: {e}") from e
    return array[..., 0] + 1j * array[..., 1]


def to_dict(r: Realization) -> Dict:
    m, n = r.shape
    return {
        'shape': [m, n],
        'state_dim': r.state_dim,
        'A': encode_matrix(r.A),
        'B': encode_matrix(r.B),
        'C': encode_matrix(r.C),
        'D': encode_matrix(r.D),
    }


def from_dict(data) -> Realization:
    if not isinstance(data, dict):
        raise ParseError("realization JSON must be an object")
    try:
        m, n = (int(x) for x in data['shape'])
        l = int(data['state_dim'])
        return Realization(
            _decode(data['A'], l, l, 'A'),
            _decode(data['B'], l, n, 'B'),
            _decode(data['C'], m, l, 'C'),
            _decode(data['D'], m, n, 'D'),
        )
    except KeyError as e:
        raise ParseError(f"realization JSON is missing {e}") from e
    except (TypeError, ValueError) as e:
        if isinstance(e, (ParseError, ShapeError)):
            raise
        raise ParseError(f"malformed realization JSON: {e}") from e


def save(r: Realization, path: str) -> None:
    try:
        with open(path, 'w') as f:
            json.dump(to_dict(r), f, indent=2)
    except OSError as e:
        raise IoError(f"cannot write realization file {path}: {e}") from e


def load(path: str) -> Realization:
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except OSError as e:
        raise IoError(f"cannot read realization file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"{path} is not valid JSON: {e}") from e
    return from_dict(data)


# -- spectrum and resolvent ------------------------------------------------------

def _smallest_singular_value(M: np.ndarray) -> float:
    return float(linalg.svdvals(M).min()) if M.size else np.inf


def _as_directions(where: Union[Lattice, DirectionData]) -> DirectionData:
    return where if isinstance(where, DirectionData) else direction_data(where)


def check_spectrum(A, where: Union[Lattice, DirectionData], tol: Optional[float] = None) -> bool:
    """
    True iff no eigenvalue of A lies within tol of S.

    For every edge direction d the distance is measured as
    sigma_min(2I + (1+d)A) / |1+d|, which bounds |lambda + 2/(1+d)| from below
    for every eigenvalue lambda of A.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeError(f"A must be square, got {A.shape}")
    if A.shape[0] == 0:
        return True
    tol = config.COORD_TOL if tol is None else tol
    identity = np.eye(A.shape[0])
    for d in _as_directions(where).directions:
        if abs(1 + d) <= config.COORD_TOL:
            continue
        M = 2 * identity + (1 + d) * A
        if _smallest_singular_value(M) / abs(1 + d) <= tol:
            return False
    return True


def _require_spectrum(A: np.ndarray, lattice: Lattice) -> None:
    if not check_spectrum(A, lattice):
        raise ForbiddenSpectrum("the state matrix has an eigenvalue in the forbidden set S")


class _Factors:
    """Per-direction resolvent factors (2I + (1+d)A)(2I + (1-d)A)^-1."""

    def __init__(self, A: np.ndarray):
        self.A = A
        self.identity = np.eye(A.shape[0], dtype=complex)
        self._cache: Dict[Tuple[float, float], np.ndarray] = {}

    def __call__(self, d: complex) -> np.ndarray:
        key = (round(d.real, 9), round(d.imag, 9))
        if key not in self._cache:
            two = 2 * self.identity
            self._cache[key] = linalg.solve(two + (1 - d) * self.A, two + (1 + d) * self.A)
        return self._cache[key]

    def along(self, lattice: Lattice, vertices: Sequence[int]) -> np.ndarray:
        value = self.identity.copy()
        for u, v in zip(vertices[:-1], vertices[1:]):
            value = value @ self(lattice.step(u, v))
        return value


def resolvent(A, lattice: Lattice, z: int) -> np.ndarray:
    """
    (I - zA)^(-.) at vertex z: the product of the resolvent factors along
    find_path(0, z).

    Raises:
        ForbiddenSpectrum: if A has an eigenvalue in S
    """
    A = np.asarray(A, dtype=complex)
    _require_spectrum(A, lattice)
    return _Factors(A).along(lattice, lattice.origin_paths[z].vertices)


def resolvent_along(A, lattice: Lattice, path: Union[Path, Sequence[int]]) -> np.ndarray:
    """The resolvent product along an arbitrary path from the origin."""
    if not isinstance(path, Path):
        path = Path(tuple(path))
    check_path(lattice, path)
    A = np.asarray(A, dtype=complex)
    _require_spectrum(A, lattice)
    return _Factors(A).along(lattice, path.vertices)


def resolvent_function(A, lattice: Lattice) -> DAFunction:
    """The resolvent at every vertex, as an l x l DAFunction."""
    A = np.asarray(A, dtype=complex)
    _require_spectrum(A, lattice)
    factors = _Factors(A)
    values = np.stack([factors.along(lattice, lattice.origin_paths[v].vertices) for v in lattice.ids])
    return DAFunction(lattice, values)


def resolvent_series(A, lattice: Lattice, N: int) -> DAFunction:
    """Truncated series sum_{n <= N} z^(n) A^n."""
    A = np.asarray(A, dtype=complex)
    basis = monomial_basis(lattice, N)
    values = np.zeros((len(lattice.ids),) + A.shape, dtype=complex)
    power = np.eye(A.shape[0], dtype=complex)
    for b in basis:
        values += b.scalar_values[:, None, None] * power
        power = power @ A
    return DAFunction(lattice, values)


def spectral_radius_estimate(A, k: int = 64) -> float:
    """Power-iteration estimate ||A^k||^(1/k) of the spectral radius."""
    A = np.asarray(A, dtype=complex)
    if A.size == 0:
        return 0.0
    norm = np.linalg.norm(np.linalg.matrix_power(A, k), 2)
    return float(norm ** (1.0 / k))


# -- evaluation and algebra -----------------------------------------------------

def evaluate(r: Realization, lattice: Lattice) -> DAFunction:
    """
    f(z) = D + Z+(C (I - zA)^(-.) B)(z).

    Raises:
        ForbiddenSpectrum: if A has an eigenvalue in S
    """
    m, n = r.shape
    if r.state_dim == 0:
        inner = DAFunction.constant(lattice, np.zeros((m, n)))
    else:
        res = resolvent_function(r.A, lattice)
        inner = DAFunction(lattice, np.einsum('ij,vjk,kl->vil', r.C, res.values, r.B))
    shifted = forward_shift(inner)
    return DAFunction(lattice, shifted.values + r.D)


def add(r1: Realization, r2: Realization) -> Realization:
    """Realization of f1 + f2: block-diagonal A, stacked B, concatenated C."""
    if r1.shape != r2.shape:
        raise ShapeError(f"cannot add realizations of shapes {r1.shape} and {r2.shape}")
    return Realization(
        linalg.block_diag(r1.A, r2.A),
        np.vstack([r1.B, r2.B]),
        np.hstack([r1.C, r2.C]),
        r1.D + r2.D,
    )


def product(r1: Realization, r2: Realization) -> Realization:
    """Realization of f1 (.) f2, whose tau image is tau(f1) tau(f2)."""
    if r1.shape[1] != r2.shape[0]:
        raise ShapeError(f"cannot multiply realizations of shapes {r1.shape} and {r2.shape}")
    l1, l2 = r1.state_dim, r2.state_dim
    A = np.block([
        [r2.A, np.zeros((l2, l1), dtype=complex)],
        [r1.B @ r2.C, r1.A],
    ])
    B = np.vstack([r2.B, r1.B @ r2.D])
    C = np.hstack([r1.D @ r2.C, r1.C])
    return Realization(A, B, C, r1.D @ r2.D)


def inverse(r: Realization, lattice: Optional[Lattice] = None) -> Realization:
    """
    Realization of the (.)-inverse of f.

    Args:
        r: Realization with square, invertible D
        lattice: When given, the state matrix A - B D^-1 C is checked against S

    Raises:
        ShapeError: if D is not square
        SingularD: if D is not invertible
        ForbiddenSpectrum: if A - B D^-1 C has an eigenvalue in S
    """
    m, n = r.shape
    if m != n:
        raise ShapeError(f"only square realizations have an inverse, got {r.shape}")
    sigma = _smallest_singular_value(r.D)
    if sigma <= config.COORD_TOL * max(1.0, float(np.linalg.norm(r.D, 2))):
        raise SingularD(f"D is singular (smallest singular value {sigma:.1e})")
    D_inv = linalg.inv(r.D)
    A_cross = r.A - r.B @ D_inv @ r.C
    if lattice is None:
        logger.warning("inverse called without a lattice; A - B D^-1 C is not checked against S")
    else:
        _require_spectrum(A_cross, lattice)
    return Realization(A_cross, r.B @ D_inv, -D_inv @ r.C, D_inv)


def from_polynomial(p: DAPolynomial) -> Realization:
    """
    Nilpotent shift-register realization of sum z^(k) A_k.

    tau of the result is the matrix polynomial sum A_k t^k.
    """
    m, n = p.shape
    N = p.degree
    if N == 0:
        return Realization.constant(p.coefficients[0])
    A = np.zeros((N * n, N * n), dtype=complex)
    for k in range(1, N):
        A[k * n:(k + 1) * n, (k - 1) * n:k * n] = np.eye(n)
    B = np.zeros((N * n, n), dtype=complex)
    B[:n] = np.eye(n)
    C = np.hstack(list(p.coefficients[1:]))
    return Realization(A, B, C, p.coefficients[0])


def backward_shift_realization(r: Realization) -> Realization:
    """Realization of Z- f: (A, AB, C, CB)."""
    return Realization(r.A, r.A @ r.B, r.C, r.C @ r.B)


def forward_shift_realization(r: Realization) -> Realization:
    """Realization of Z+ f = z (.) f."""
    m = r.shape[0]
    z = np.zeros((2, m, m), dtype=complex)
    z[1] = np.eye(m)
    return product(from_polynomial(DAPolynomial(z)), r)


# -- tau -------------------------------------------------------------------------

def tau_eval(r: Realization, t: complex) -> np.ndarray:
    """
    tau f(t) = D + t C (I - tA)^-1 B.

    Raises:
        PoleError: if I - tA is singular at t
    """
    t = complex(t)
    if r.state_dim == 0:
        return r.D.copy()
    M = np.eye(r.state_dim) - t * r.A
    if _smallest_singular_value(M) <= config.COORD_TOL:
        raise PoleError(f"t = {t} is a pole of the realization")
    return r.D + t * r.C @ linalg.solve(M, r.B)


def tau_markov(r: Realization, K: int) -> List[np.ndarray]:
    """Markov parameters [D, CB, CAB, ..., C A^(K-1) B]."""
    if K < 0:
        raise ValueError(f"K must be nonnegative, got {K}")
    out = [r.D.copy()]
    x = r.B
    for _ in range(K):
        out.append(r.C @ x)
        x = r.A @ x
    return out


@dataclass(frozen=True, eq=False)
class RationalScalarFunction:
    """num(t) / den(t) with ascending coefficients, normalized to den(0) = 1 when possible."""

    numerator: np.ndarray
    denominator: np.ndarray

    def __post_init__(self):
        num = series.trim(np.atleast_1d(np.asarray(self.numerator, dtype=complex)))
        den = series.trim(np.atleast_1d(np.asarray(self.denominator, dtype=complex)))
        if not np.any(den):
            raise ValueError("denominator is the zero polynomial")
        if den[0] != 0:
            num, den = num / den[0], den / den[0]
        object.__setattr__(self, 'numerator', num)
        object.__setattr__(self, 'denominator', den)

    def __call__(self, t: complex) -> complex:
        return series.evaluate(self.numerator, t) / series.evaluate(self.denominator, t)

    def taylor(self, K: int) -> np.ndarray:
        return series.divide(self.numerator, self.denominator, K)

    def reduced(self, tol: Optional[float] = None) -> 'RationalScalarFunction':
        """Cancel roots that numerator and denominator share to within tol (relative)."""
        tol = config.COORD_TOL if tol is None else tol
        num, den = self.numerator, self.denominator
        while len(num) > 1 and len(den) > 1:
            common = None
            for r in P.polyroots(den):
                if np.any(np.abs(P.polyroots(num) - r) <= tol * max(1.0, abs(r))):
                    common = r
                    break
            if common is None:
                break
            num = P.polydiv(num, [-common, 1])[0]
            den = P.polydiv(den, [-common, 1])[0]
        return RationalScalarFunction(num, den)


def tau_inverse(fn: Union[RationalScalarFunction, Realization], lattice: Lattice) -> Realization:
    """
    The rational DA function whose tau image is fn.

    Scalar fractions get a controllable companion realization (plus a nilpotent
    block for the polynomial part); realizations are checked and returned.

    Raises:
        NotRealizable: if the denominator vanishes at 0, has a root near P, or
            the realization does not reproduce fn at the sample points
    """
    if isinstance(fn, Realization):
        _require_spectrum(fn.A, lattice)
        return fn

    original = fn
    fn = fn.reduced()
    num, den = fn.numerator, fn.denominator
    if abs(den[0]) <= config.ABS_TOL:
        raise NotRealizable("denominator vanishes at t = 0, which lies in P")
    dirs = direction_data(lattice)
    for root in (P.polyroots(den) if len(den) > 1 else []):
        if dirs.distance_to_poles(root) <= config.COORD_TOL:
            raise NotRealizable(f"denominator root {root} lies in P")

    n0 = num[0]
    rest = np.zeros(max(len(num), len(den)), dtype=complex)
    rest[:len(num)] += num
    rest[:len(den)] -= n0 * den
    p = rest[1:] if len(rest) > 1 else np.zeros(1, dtype=complex)
    r = len(den) - 1
    if len(p) >= len(den):
        q, rem = P.polydiv(p, den)
    else:
        q, rem = np.zeros(1, dtype=complex), p

    if r > 0:
        A = np.zeros((r, r), dtype=complex)
        A[0, :] = -den[1:]
        A[1:, :-1] += np.eye(r - 1)
        B = np.zeros((r, 1), dtype=complex)
        B[0, 0] = 1
        C = series.truncate(rem, r - 1).reshape(1, r)
        main = Realization(A, B, C, [[n0]])
    else:
        main = Realization.constant([[n0]])

    if np.any(q):
        poly = DAPolynomial.from_scalars(np.concatenate([[0], q]))
        main = add(main, from_polynomial(poly))
    _require_spectrum(main.A, lattice)
    _check_reproduces(main, original)
    logger.info(f"Realized rational function of degree {r} with state dimension {main.state_dim}")
    return main


def _sample_points(fn: RationalScalarFunction, count: int = 20) -> np.ndarray:
    """Points on a circle of radius half the smallest nonzero root modulus of den, at most 0.5."""
    roots = P.polyroots(fn.denominator) if len(fn.denominator) > 1 else np.zeros(0)
    moduli = np.abs(roots)
    moduli = moduli[moduli > config.COORD_TOL]
    radius = 0.5 * min([1.0] + list(moduli))
    angles = 2 * np.pi * np.arange(count) / count + 0.3
    return radius * np.exp(1j * angles)


def _check_reproduces(r: Realization, fn: RationalScalarFunction) -> None:
    points = _sample_points(fn)
    expected = np.array([fn(t) for t in points])
    actual = np.array([tau_eval(r, t)[0, 0] for t in points])
    error = float(np.max(np.abs(actual - expected)))
    limit = config.tolerance(max(1.0, float(np.max(np.abs(expected)))), config.REL_TOL)
    if error > limit:
        raise NotRealizable(f"realization does not reproduce num/den (error {error:.3e} at {len(points)} points)")


def leverrier(A) -> Tuple[np.ndarray, np.ndarray]:
    """
    Coefficients of det(I - tA) and adj(I - tA) by the Leverrier-Faddeev recursion.

    Returns:
        (p, M) with det(I - tA) = sum p[j] t^j (length l+1) and
        adj(I - tA) = sum M[j] t^j (shape (l+1, l, l), M[l] = 0)
    """
    A = np.asarray(A, dtype=complex)
    l = A.shape[0]
    identity = np.eye(l, dtype=complex)
    c = np.zeros(l + 1, dtype=complex)
    c[l] = 1
    M = np.zeros((l + 1, l, l), dtype=complex)
    previous = np.zeros((l, l), dtype=complex)
    for k in range(1, l + 1):
        current = A @ previous + c[l - k + 1] * identity
        c[l - k] = -np.trace(A @ current) / k
        M[k - 1] = current
        previous = current
    p = c[::-1].copy()
    return p, M


def minimal_realization(markov: Sequence, tol: Optional[float] = None) -> Realization:
    """
    Ho-Kalman realization from Markov parameters [D, CB, CAB, ...].

    The block Hankel matrix of the data is factored by an SVD truncated at
    the numerical rank; the state dimension equals that rank.

    Raises:
        RankError: if fewer than two Markov parameters follow D, or the
            realization does not reproduce the data
    """
    tol = config.RANK_TOL if tol is None else tol
    blocks = [_matrix(h) for h in markov]
    if not blocks:
        raise RankError("no Markov parameters given")
    D = blocks[0]
    m, n = D.shape
    data = blocks[1:]
    scale = max([float(np.max(np.abs(h))) for h in data] + [0.0])
    if scale <= config.ABS_TOL:
        return Realization.constant(D)

    # H0 and the shifted H1 together use data[0 .. rows + cols - 1]
    L = len(data)
    rows = L // 2
    cols = L - rows
    if rows < 1:
        raise RankError(f"{L} Markov parameter is not enough for a realization")
    H0 = np.block([[data[i + j] for j in range(cols)] for i in range(rows)])
    H1 = np.block([[data[i + j + 1] for j in range(cols)] for i in range(rows)])

    U, s, Vh = linalg.svd(H0)
    rank = int(np.sum(s > tol * s[0]))

    root = np.sqrt(s[:rank])
    observability = U[:, :rank] * root
    controllability = root[:, None] * Vh[:rank]
    A = (U[:, :rank].conj().T @ H1 @ Vh[:rank].conj().T) / np.outer(root, root)
    B = controllability[:, :n]
    C = observability[:m]
    result = Realization(A, B, C, D)

    reproduced = tau_markov(result, L)
    error = max(float(np.max(np.abs(a - b))) for a, b in zip(reproduced[1:], data))
    if error > max(tol, config.REL_TOL) * max(1.0, scale) * 10:
        raise RankError(f"Markov parameters are not reproduced (error {error:.3e})")
    logger.info(f"Ho-Kalman realization with state dimension {rank}")
    return result
