"""
Calculus module.
DA functions on a lattice patch: discrete integral, Cauchy-Riemann residual,
forward and backward shifts, the eigenfunctions e_t, the bases z^(n) and rho_n,
and DA polynomials with their convolution product.
"""
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

import config
import series
from errors import ConsistencyError, ForbiddenParameter, NotAnalytic, ShapeError
from lattice import Lattice, Path, check_path, direction_data

logger = logging.getLogger(__name__)

Scalar = Union[int, float, complex]


def _as_matrix(value) -> np.ndarray:
    m = np.asarray(value, dtype=complex)
    if m.ndim == 0:
        return m.reshape(1, 1)
    if m.ndim == 1:
        return m.reshape(-1, 1)
    return m


@dataclass(frozen=True, eq=False)
class DAFunction:
    """
    Matrix-valued function on the vertices of a lattice.

    values has shape (V, m, n) with rows in the lattice's sorted id order.
    unresolved lists vertex ids whose values depend on the boundary convention
    of the backward shift (empty for everything else).
    """

    lattice: Lattice
    values: np.ndarray
    unresolved: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.ndim == 1:
            values = values.reshape(-1, 1, 1)
        if values.ndim != 3 or values.shape[0] != len(self.lattice.ids):
            raise ShapeError(
                f"values of shape {values.shape} do not fit a lattice with {len(self.lattice.ids)} vertices"
            )
        values.flags.writeable = False
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'unresolved', frozenset(self.unresolved))

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_callable(cls, lattice: Lattice, fn: Callable[[complex], object]) -> 'DAFunction':
        """Sample fn(z) at every vertex coordinate."""
        return cls(lattice, np.stack([_as_matrix(fn(complex(z))) for z in lattice.coords]))

    @classmethod
    def constant(cls, lattice: Lattice, value=1.0) -> 'DAFunction':
        matrix = _as_matrix(value)
        return cls(lattice, np.broadcast_to(matrix, (len(lattice.ids),) + matrix.shape))

    @classmethod
    def coordinate(cls, lattice: Lattice) -> 'DAFunction':
        """The function z."""
        return cls(lattice, lattice.coords.reshape(-1, 1, 1))

    # -- access ------------------------------------------------------------

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape[1], self.values.shape[2]

    def at(self, vid: int) -> np.ndarray:
        return self.values[self.lattice.index[vid]]

    def scalar(self, vid: int) -> complex:
        return complex(self.at(vid)[0, 0])

    @property
    def scalar_values(self) -> np.ndarray:
        """Values of a 1x1 function as a (V,) array."""
        if self.shape != (1, 1):
            raise ShapeError(f"function of shape {self.shape} is not scalar")
        return self.values[:, 0, 0]

    @property
    def resolved_mask(self) -> np.ndarray:
        mask = np.ones(len(self.lattice.ids), dtype=bool)
        for v in self.unresolved:
            mask[self.lattice.index[v]] = False
        return mask

    def scale(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def max_difference(self, other: 'DAFunction', resolved_only: bool = False) -> float:
        """max |self - other| over the vertices (optionally only resolved ones)."""
        diff = np.abs(self.values - other.values)
        if resolved_only:
            diff = diff[self.resolved_mask & other.resolved_mask]
        return float(np.max(diff)) if diff.size else 0.0

    # -- arithmetic --------------------------------------------------------

    def _combine(self, other: 'DAFunction', values: np.ndarray) -> 'DAFunction':
        return DAFunction(self.lattice, values, self.unresolved | other.unresolved)

    def _check_same(self, other: 'DAFunction') -> None:
        if other.lattice is not self.lattice and other.lattice != self.lattice:
            raise ShapeError("functions live on different lattices")
        if other.shape != self.shape:
            raise ShapeError(f"shapes {self.shape} and {other.shape} differ")

    def __add__(self, other: 'DAFunction') -> 'DAFunction':
        self._check_same(other)
        return self._combine(other, self.values + other.values)

    def __sub__(self, other: 'DAFunction') -> 'DAFunction':
        self._check_same(other)
        return self._combine(other, self.values - other.values)

    def __neg__(self) -> 'DAFunction':
        return DAFunction(self.lattice, -self.values, self.unresolved)

    def __mul__(self, c: Scalar) -> 'DAFunction':
        return DAFunction(self.lattice, self.values * complex(c), self.unresolved)

    __rmul__ = __mul__

    def left(self, matrix) -> 'DAFunction':
        """Pointwise M @ f(z)."""
        matrix = _as_matrix(matrix)
        if matrix.shape[1] != self.shape[0]:
            raise ShapeError(f"cannot multiply {matrix.shape} by a {self.shape} function")
        return DAFunction(self.lattice, np.einsum('ij,vjk->vik', matrix, self.values), self.unresolved)

    def right(self, matrix) -> 'DAFunction':
        """Pointwise f(z) @ M."""
        matrix = _as_matrix(matrix)
        if self.shape[1] != matrix.shape[0]:
            raise ShapeError(f"cannot multiply a {self.shape} function by {matrix.shape}")
        return DAFunction(self.lattice, np.einsum('vij,jk->vik', self.values, matrix), self.unresolved)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DAFunction):
            return NotImplemented
        return (
            self.lattice == other.lattice
            and np.array_equal(self.values, other.values)
            and self.unresolved == other.unresolved
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class DAPolynomial:
    """
    sum_n z^(n) A_n with matrix coefficients, stored as an (N+1, m, n) array.

    Trailing zero coefficients are dropped so the leading one is nonzero
    unless the polynomial is constant.
    """

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=complex)
        if c.ndim == 1:
            c = c.reshape(-1, 1, 1)
        if c.ndim != 3 or c.shape[0] == 0:
            raise ShapeError(f"coefficients of shape {c.shape} are not a list of matrices")
        n = c.shape[0]
        while n > 1 and not np.any(c[n - 1]):
            n -= 1
        c = c[:n].copy()
        c.flags.writeable = False
        object.__setattr__(self, 'coefficients', c)

    @classmethod
    def from_scalars(cls, coefficients: Sequence[Scalar]) -> 'DAPolynomial':
        return cls(np.asarray(coefficients, dtype=complex).reshape(-1, 1, 1))

    @classmethod
    def identity(cls, size: int = 1) -> 'DAPolynomial':
        return cls(np.eye(size, dtype=complex)[None])

    @property
    def degree(self) -> int:
        return self.coefficients.shape[0] - 1

    @property
    def shape(self) -> Tuple[int, int]:
        return self.coefficients.shape[1], self.coefficients.shape[2]

    @property
    def scalar_coefficients(self) -> np.ndarray:
        if self.shape != (1, 1):
            raise ShapeError(f"polynomial of shape {self.shape} is not scalar")
        return self.coefficients[:, 0, 0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, DAPolynomial):
            return NotImplemented
        return np.array_equal(self.coefficients, other.coefficients)

    __hash__ = None


# -- integral and analyticity -------------------------------------------------

def discrete_integral(f: DAFunction, path: Union[Path, Sequence[int]]) -> np.ndarray:
    """
    Trapezoid sum of f along a path: sum (f(z_{k-1}) + f(z_k))/2 * (z_k - z_{k-1}).

    Raises:
        InvalidPath: if a step of the path is not a lattice edge
    """
    if not isinstance(path, Path):
        path = Path(tuple(path))
    lattice = f.lattice
    check_path(lattice, path)
    total = np.zeros(f.shape, dtype=complex)
    for u, v in zip(path.vertices[:-1], path.vertices[1:]):
        total += (f.at(u) + f.at(v)) / 2 * lattice.step(u, v)
    return total


def _face_residuals(f: DAFunction) -> Tuple[np.ndarray, np.ndarray]:
    """Per-face Cauchy-Riemann residuals and value scales."""
    faces = f.lattice.face_array
    if len(faces) == 0:
        return np.zeros(0), np.zeros(0)
    z = f.lattice.coords[faces]
    vals = f.values[faces]
    q1 = (vals[:, 0] - vals[:, 2]) / (z[:, 0] - z[:, 2])[:, None, None]
    q2 = (vals[:, 1] - vals[:, 3]) / (z[:, 1] - z[:, 3])[:, None, None]
    residuals = np.abs(q1 - q2).reshape(len(faces), -1).max(axis=1)
    scales = np.abs(vals).reshape(len(faces), -1).max(axis=1)
    return residuals, scales


def cr_residual(f: DAFunction) -> float:
    """Largest discrete Cauchy-Riemann residual over all faces."""
    residuals, _ = _face_residuals(f)
    return float(residuals.max()) if residuals.size else 0.0


def check_analytic(f: DAFunction, tol: Optional[float] = None) -> None:
    """Raise NotAnalytic when some face residual exceeds tol * scale (+ absolute floor)."""
    residuals, scales = _face_residuals(f)
    if not residuals.size:
        return
    rel = config.REL_TOL if tol is None else tol
    limits = np.maximum(rel * scales, config.ABS_TOL)
    bad = np.nonzero(residuals > limits)[0]
    if bad.size:
        k = int(bad[0])
        raise NotAnalytic(
            f"function is not discrete analytic: residual {residuals[k]:.3e} on face {f.lattice.faces[k]}"
        )


def primitive(f: DAFunction, base: Optional[int] = None) -> DAFunction:
    """
    F(z) = integral of f from base (default: the origin) to z.

    Integrals follow the fixed origin paths, so F is well defined for any f
    and DA when f is.
    """
    lattice = f.lattice
    values = np.einsum('ij,jmn->imn', lattice.origin_integral_weights, f.values)
    if base is not None and base != lattice.origin_id:
        values = values - values[lattice.index[base]]
    return DAFunction(lattice, values, _path_unresolved(f))


def edge_relation_residual(h: DAFunction, g: DAFunction) -> float:
    """
    max over edges (u, v) of |h(v)(1+u-v) - h(u)(1+v-u) - 2(g(u)-g(v))|.

    Zero exactly when the forward shift of h equals g - g(0).
    """
    edges = h.lattice.edge_array
    if len(edges) == 0:
        return 0.0
    u, v = edges[:, 0], edges[:, 1]
    d = (h.lattice.coords[v] - h.lattice.coords[u])[:, None, None]
    lhs = h.values[v] * (1 - d) - h.values[u] * (1 + d)
    rhs = 2 * (g.values[u] - g.values[v])
    return float(np.abs(lhs - rhs).max())


def eigen_edge_residual(e: DAFunction, t: complex) -> float:
    """max over edges (u, v) of |e(u)(2+t(1+v-u)) - e(v)(2+t(1+u-v))|."""
    edges = e.lattice.edge_array
    if len(edges) == 0:
        return 0.0
    u, v = edges[:, 0], edges[:, 1]
    d = (e.lattice.coords[v] - e.lattice.coords[u])[:, None, None]
    return float(np.abs(e.values[u] * (2 + t * (1 + d)) - e.values[v] * (2 + t * (1 - d))).max())


# -- shifts -------------------------------------------------------------------

def _path_unresolved(f: DAFunction) -> frozenset:
    """Vertices whose origin path touches an unresolved value of f."""
    if not f.unresolved:
        return frozenset()
    lattice = f.lattice
    if lattice.origin_id in f.unresolved:
        return frozenset(lattice.ids)
    return frozenset(
        v for v, path in lattice.origin_paths.items()
        if any(u in f.unresolved for u in path.vertices)
    )


def forward_shift(f: DAFunction, tol: Optional[float] = None) -> DAFunction:
    """
    (Z+ f)(z) = (f(0) - f(z))/2 + integral of f from 0 to z.

    Raises:
        NotAnalytic: if f fails the Cauchy-Riemann check
    """
    check_analytic(f, tol)
    lattice = f.lattice
    origin_value = f.values[lattice.origin_index]
    integral = np.einsum('ij,jmn->imn', lattice.origin_integral_weights, f.values)
    return DAFunction(lattice, (origin_value - f.values) / 2 + integral, _path_unresolved(f))


def backward_shift(f: DAFunction, tol: Optional[float] = None) -> DAFunction:
    """
    Z- f: the DA function h with Z+ h = f - f(0).

    h is seeded on every vertex u with a right neighbour by h(u) = g(u+1) - g(u),
    where g = f - f(0), then propagated along non-horizontal edges with
    h(v) = [2(g(u) - g(v)) + h(u)(1+v-u)] / (1+u-v). Vertices out of reach of
    the seeds are boundary chains of the patch; each chain starts from the
    value of its left neighbour and is marked unresolved.

    Raises:
        NotAnalytic: if f fails the Cauchy-Riemann check
        ConsistencyError: if the edge relation fails on some edge afterwards
    """
    check_analytic(f, tol)
    lattice = f.lattice
    index = lattice.index
    g = f.values - f.values[lattice.origin_index]
    h = np.zeros_like(g)
    known = np.zeros(len(lattice.ids), dtype=bool)

    f_bad = set(f.unresolved)
    if lattice.origin_id in f_bad:
        f_bad = set(lattice.ids)
    resolved = set()

    def non_horizontal(u: int, v: int) -> bool:
        return not lattice.is_horizontal(u, v)

    def propagate(sources: Iterable[int]) -> None:
        queue = deque(sources)
        while queue:
            u = queue.popleft()
            iu = index[u]
            for v in lattice.neighbors[u]:
                iv = index[v]
                if known[iv] or not non_horizontal(u, v):
                    continue
                d = lattice.step(u, v)
                h[iv] = (2 * (g[iu] - g[iv]) + h[iu] * (1 + d)) / (1 - d)
                known[iv] = True
                queue.append(v)

    seeds = []
    for u, w in lattice.right_neighbors.items():
        h[index[u]] = g[index[w]] - g[index[u]]
        known[index[u]] = True
        seeds.append(u)
        if u not in f_bad and w not in f_bad:
            resolved.add(u)
    propagate(sorted(seeds))

    chains = 0
    for u in lattice.ids:
        if known[index[u]]:
            continue
        left = lattice.vertex_at(lattice.coordinate(u) - 1)
        if left is not None and lattice.has_edge(left, u) and known[index[left]]:
            h[index[u]] = h[index[left]]
        known[index[u]] = True
        chains += 1
        propagate([u])
    if chains:
        logger.debug(f"Backward shift seeded {chains} boundary chains")

    # resolved values spread along the same edges used for propagation
    changed = True
    while changed:
        changed = False
        for u, v in lattice.edges:
            for a, b in ((u, v), (v, u)):
                if a in resolved and b not in resolved and b not in f_bad and a not in f_bad \
                        and non_horizontal(a, b):
                    resolved.add(b)
                    changed = True

    result = DAFunction(lattice, h, frozenset(lattice.ids) - resolved)
    residual = edge_relation_residual(result, DAFunction(lattice, g))
    rel = config.REL_TOL if tol is None else tol
    limit = config.tolerance(max(np.abs(g).max(initial=0.0), np.abs(h).max(initial=0.0)), rel)
    if residual > limit:
        raise ConsistencyError(f"edge relation violated after propagation (residual {residual:.3e})")
    return result


# -- eigenfunctions and bases --------------------------------------------------

def _edge_factor(t: complex, d: complex) -> complex:
    return (2 + t * (1 + d)) / (2 + t * (1 - d))


def eigen_value_along(lattice: Lattice, t: complex, path: Union[Path, Sequence[int]]) -> complex:
    """e_t at the end of an arbitrary path from the origin."""
    if not isinstance(path, Path):
        path = Path(tuple(path))
    check_path(lattice, path)
    value = 1 + 0j
    for u, v in zip(path.vertices[:-1], path.vertices[1:]):
        value *= _edge_factor(t, lattice.step(u, v))
    return value


def check_parameter(lattice: Lattice, t: complex) -> None:
    """Raise ForbiddenParameter if t is within COORD_TOL of S."""
    distance = direction_data(lattice).distance_to_forbidden(t)
    if distance <= config.COORD_TOL:
        raise ForbiddenParameter(f"t = {t} lies on the forbidden set (distance {distance:.1e})")


def exp_basis(lattice: Lattice, t: complex) -> DAFunction:
    """
    The eigenfunction e_t of the backward shift, normalized by e_t(0) = 1.

    Args:
        lattice: Lattice patch
        t: Eigenvalue, away from the forbidden set S

    Returns:
        DAFunction with e_t(z) = prod (2 + t(1+d_k)) / (2 + t(1-d_k)) over the
        steps d_k of the origin path to z
    """
    t = complex(t)
    check_parameter(lattice, t)
    values = np.array(
        [np.prod(_edge_factor(t, lattice.origin_steps[v])) if len(lattice.origin_steps[v]) else 1.0
         for v in lattice.ids],
        dtype=complex,
    )
    return DAFunction(lattice, values)


def monomial_basis(lattice: Lattice, N: int) -> List[DAFunction]:
    """z^(0), ..., z^(N) with z^(0) = 1 and z^(n) = Z+ z^(n-1)."""
    if N < 0:
        raise ValueError(f"basis depth must be nonnegative, got {N}")
    basis = [DAFunction.constant(lattice, 1.0)]
    for _ in range(N):
        basis.append(forward_shift(basis[-1]))
    return basis


def duffin_basis(lattice: Lattice, N: int) -> List[DAFunction]:
    """rho_0 = 1, rho_n = n * integral of rho_{n-1} from 0."""
    if N < 0:
        raise ValueError(f"basis depth must be nonnegative, got {N}")
    basis = [DAFunction.constant(lattice, 1.0)]
    for n in range(1, N + 1):
        basis.append(n * primitive(basis[-1]))
    return basis


def exp_taylor_coefficients(lattice: Lattice, N: int) -> np.ndarray:
    """
    Taylor coefficients in t of e_t at every vertex, shape (N+1, V).

    Computed by truncated series products of the edge factors along the
    origin paths; row n is an independent evaluation of z^(n).
    """
    columns = [series.path_product(lattice.origin_steps[v], N) for v in lattice.ids]
    return np.stack(columns, axis=1)


# -- polynomials --------------------------------------------------------------

def convolve_poly(p: DAPolynomial, q: DAPolynomial) -> DAPolynomial:
    """p (.) q with coefficients C_k = sum_i A_i B_{k-i}."""
    if p.shape[1] != q.shape[0]:
        raise ShapeError(f"cannot convolve polynomials of shapes {p.shape} and {q.shape}")
    out = np.zeros((p.degree + q.degree + 1, p.shape[0], q.shape[1]), dtype=complex)
    for i, a in enumerate(p.coefficients):
        for j, b in enumerate(q.coefficients):
            out[i + j] += a @ b
    return DAPolynomial(out)


def apply_poly(p: DAPolynomial, f: DAFunction, tol: Optional[float] = None) -> DAFunction:
    """(p (.) f)(z) = sum_n A_n (Z+^n f)(z)."""
    if p.shape[1] != f.shape[0]:
        raise ShapeError(f"cannot apply a {p.shape} polynomial to a {f.shape} function")
    check_analytic(f, tol)
    shifted = f
    total = f.left(p.coefficients[0])
    for a in p.coefficients[1:]:
        shifted = forward_shift(shifted, tol)
        total = total + shifted.left(a)
    return total


def apply_poly_right(g: DAFunction, p: DAPolynomial, tol: Optional[float] = None) -> DAFunction:
    """(g (.) p)(z) = sum_n (Z+^n g)(z) A_n."""
    if g.shape[1] != p.shape[0]:
        raise ShapeError(f"cannot apply a {p.shape} polynomial to a {g.shape} function")
    check_analytic(g, tol)
    shifted = g
    total = g.right(p.coefficients[0])
    for a in p.coefficients[1:]:
        shifted = forward_shift(shifted, tol)
        total = total + shifted.right(a)
    return total


def evaluate_poly(p: DAPolynomial, lattice: Lattice) -> DAFunction:
    """sum_n z^(n) A_n as a DAFunction."""
    basis = monomial_basis(lattice, p.degree)
    stacked = np.stack([b.scalar_values for b in basis])
    return DAFunction(lattice, np.einsum('nv,nij->vij', stacked, p.coefficients))


def markov_from_function(f: DAFunction, K: int, tol: Optional[float] = None) -> List[np.ndarray]:
    """[(Z-^k f)(0) for k = 0..K], the Taylor data of f's transfer function."""
    origin = f.lattice.origin_id
    out = [f.at(origin).copy()]
    h = f
    for k in range(1, K + 1):
        h = backward_shift(h, tol)
        if origin in h.unresolved:
            logger.warning(f"Z-^{k} f(0) depends on the patch boundary; use a larger patch")
        out.append(h.at(origin).copy())
    return out
