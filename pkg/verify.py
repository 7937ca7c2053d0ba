"""
Property verification suite.
Runs the analytic, algebraic and realization identities on one lattice and
collects measured residuals against thresholds in a deterministic report.
"""
import json
import logging
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Callable, List, Optional, Sequence

import numpy as np

import calculus as calc
import config
import rational
import realization as rz
from calculus import DAFunction, DAPolynomial
from errors import DalatError, NotRealizable
from lattice import Lattice, direction_data, distinct_paths, lattice_hash, load
from realization import RationalScalarFunction, Realization

logger = logging.getLogger(__name__)

# thresholds below are quoted at this relative tolerance and scale with it
BASE_TOL = 1e-9

GROUPS = (
    'analyticity',
    'shifts',
    'eigen',
    'paths',
    'basis',
    'ring',
    'realization',
    'tau',
    'kernel',
    'theorems',
)


@dataclass
class VerifyConfig:
    """Settings of one verification run."""

    lattice_path: str
    tolerance: float = config.REL_TOL
    depth: int = config.BASIS_DEPTH
    truncation: int = config.TRUNCATION
    seed: int = config.SEED
    groups: List[str] = field(default_factory=lambda: list(GROUPS))

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if self.depth < 1:
            raise ValueError(f"basis depth must be at least 1, got {self.depth}")
        unknown = [g for g in self.groups if g not in GROUPS]
        if unknown:
            raise ValueError(f"unknown property groups: {', '.join(unknown)}")


@dataclass
class PropertyResult:
    name: str
    group: str
    residual: Optional[float]
    threshold: float
    passed: bool
    detail: str = ""


@dataclass
class Report:
    lattice_hash: str
    seed: int
    tolerance: float
    results: List[PropertyResult]

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failed(self) -> List[str]:
        return [r.name for r in self.results if not r.passed]

    def to_json(self) -> str:
        data = {
            'lattice_hash': self.lattice_hash,
            'seed': self.seed,
            'tolerance': self.tolerance,
            'ok': self.ok,
            'properties': [asdict(r) for r in self.results],
        }
        return json.dumps(data, indent=2, sort_keys=True)

    def summary(self) -> str:
        lines = []
        for r in self.results:
            status = 'PASS' if r.passed else 'FAIL'
            residual = 'error' if r.residual is None else f"{r.residual:.3e}"
            lines.append(f"{status}  {r.group:<12} {r.name:<48} {residual:>10} <= {r.threshold:.1e}")
        passed = sum(1 for r in self.results if r.passed)
        lines.append(f"{passed}/{len(self.results)} properties passed")
        return "\n".join(lines)


def _relative(difference: float, scale: float) -> float:
    return difference / max(1.0, scale)


class VerifySuite:
    """
    Property checks on one lattice.

    Every check draws its random inputs from a single generator seeded by the
    config, so a fixed seed gives an identical report.
    """

    def __init__(self, cfg: VerifyConfig, lattice: Lattice):
        self.cfg = cfg
        self.lattice = lattice
        self.rng = np.random.default_rng(cfg.seed)
        self.results: List[PropertyResult] = []
        self._group = ''

    # -- bookkeeping --------------------------------------------------------

    def threshold(self, base: float) -> float:
        return base * self.cfg.tolerance / BASE_TOL

    def record(self, name: str, residual: float, base: float, detail: str = "") -> None:
        limit = self.threshold(base)
        residual = float(residual)
        self.results.append(PropertyResult(name, self._group, residual, limit, residual <= limit, detail))

    def check(self, name: str, base: float, compute: Callable[[], float]) -> None:
        try:
            self.record(name, compute(), base)
        except DalatError as e:
            logger.warning(f"Property '{name}' raised {type(e).__name__}: {e}")
            self.results.append(
                PropertyResult(name, self._group, None, self.threshold(base), False, f"{type(e).__name__}: {e}")
            )

    def run(self) -> Report:
        for group in self.cfg.groups:
            self._group = group
            logger.info(f"Running property group '{group}'")
            getattr(self, f"group_{group}")()
        return Report(lattice_hash(self.lattice), self.cfg.seed, self.cfg.tolerance, self.results)

    # -- random inputs ------------------------------------------------------

    def complex_normal(self, *shape) -> np.ndarray:
        return self.rng.normal(size=shape) + 1j * self.rng.normal(size=shape)

    def disk_point(self, radius: float) -> complex:
        r = radius * np.sqrt(self.rng.uniform())
        return complex(r * np.exp(2j * np.pi * self.rng.uniform()))

    @cached_property
    def basis(self) -> List[DAFunction]:
        return calc.monomial_basis(self.lattice, max(self.cfg.depth, 12))

    @cached_property
    def origin(self) -> int:
        return self.lattice.origin_id

    def random_da(self) -> DAFunction:
        depth = self.cfg.depth
        coefficients = 0.5 * self.complex_normal(depth + 1)
        values = sum(c * b.scalar_values for c, b in zip(coefficients, self.basis[:depth + 1]))
        return DAFunction(self.lattice, values)

    def random_matrix(self, size: int, radius: float) -> np.ndarray:
        X = self.complex_normal(size, size)
        return radius * X / np.linalg.norm(X, 2)

    def random_realization(self, l: int = 2) -> Realization:
        """Scalar realization with ||A|| <= 0.5 and a well-conditioned inverse."""
        A = self.random_matrix(l, 0.5)
        B = self.complex_normal(l, 1)
        C = self.complex_normal(1, l)
        B = 0.3 * B / np.linalg.norm(B)
        C = 0.3 * C / np.linalg.norm(C)
        return Realization(A, B, C, [[1.0 + 0.1 * self.disk_point(1.0)]])

    # -- groups -------------------------------------------------------------

    def group_analyticity(self) -> None:
        for n, b in enumerate(self.basis[:11]):
            self.check(f"cr z^({n})", 1e-9, lambda b=b: _relative(calc.cr_residual(b), b.scale()))
        for k in range(10):
            t = self.disk_point(0.8)
            self.check(f"cr e_t #{k}", 1e-9, lambda t=t: _relative(
                calc.cr_residual(calc.exp_basis(self.lattice, t)), 1.0))
        for k in range(5):
            r = self.random_realization()
            self.check(f"cr realization #{k}", 1e-9, lambda r=r: _relative(
                calc.cr_residual(rz.evaluate(r, self.lattice)), 1.0))
        f = self.random_da()
        self.check("primitive of a DA function is DA", 1e-9, lambda: _relative(
            calc.cr_residual(calc.primitive(f)), calc.primitive(f).scale()))

    def group_shifts(self) -> None:
        for k in range(20):
            f = self.random_da()
            self.check(f"left inverse #{k}", 1e-9, lambda f=f: _relative(
                calc.backward_shift(calc.forward_shift(f)).max_difference(f, resolved_only=True), f.scale()))
            self.check(f"right inverse #{k}", 1e-9, lambda f=f: _relative(
                calc.forward_shift(calc.backward_shift(f)).max_difference(
                    f - DAFunction.constant(self.lattice, f.at(self.origin))), f.scale()))

    def group_eigen(self) -> None:
        for k in range(10):
            t = self.disk_point(0.8)

            def residual(t=t):
                e = calc.exp_basis(self.lattice, t)
                return _relative(calc.backward_shift(e).max_difference(t * e, resolved_only=True), e.scale())

            self.check(f"eigenrelation #{k}", 1e-9, residual)
            self.check(f"eigen edge relation #{k}", 1e-9, lambda t=t: _relative(
                calc.eigen_edge_residual(calc.exp_basis(self.lattice, t), t),
                calc.exp_basis(self.lattice, t).scale()))

    def group_paths(self) -> None:
        targets = [v for v, p in self.lattice.origin_paths.items() if p.length >= 2]
        f = self.random_da()
        t = self.disk_point(0.8)
        A = self.random_matrix(2, 0.5)

        def spread(evaluate: Callable[[Sequence[int]], np.ndarray]) -> float:
            worst = 0.0
            for v in targets:
                values = [np.asarray(evaluate(p.vertices)) for p in distinct_paths(self.lattice, self.origin, v, 3)]
                scale = max(float(np.max(np.abs(x))) for x in values)
                worst = max(worst, _relative(max(float(np.max(np.abs(x - values[0]))) for x in values), scale))
            return worst

        self.check("integral path independence", 1e-9, lambda: spread(lambda p: calc.discrete_integral(f, p)))
        self.check("e_t path independence", 1e-9, lambda: spread(
            lambda p: calc.eigen_value_along(self.lattice, t, p)))
        self.check("resolvent path independence", 1e-9, lambda: spread(
            lambda p: rz.resolvent_along(A, self.lattice, p)))

    def group_basis(self) -> None:
        N = 12
        coefficients = calc.exp_taylor_coefficients(self.lattice, N)

        def oracle() -> float:
            return max(
                _relative(float(np.max(np.abs(coefficients[n] - self.basis[n].scalar_values))),
                          float(np.max(np.abs(coefficients[n]))))
                for n in range(N + 1)
            )

        self.check("Taylor coefficients of e_t equal z^(n)", 1e-9, oracle)
        self.check("z^(1) = z", 1e-12, lambda: self.basis[1].max_difference(DAFunction.coordinate(self.lattice)))
        i_vertex = self.lattice.vertex_at(1j)
        if i_vertex is not None and self.lattice.has_edge(self.origin, i_vertex):
            self.check("z^(2)(i) = -(1+i)/2", 1e-12, lambda: abs(self.basis[2].scalar(i_vertex) + (1 + 1j) / 2))

        depth = self.cfg.depth
        stacked = np.stack([b.scalar_values for b in self.basis[:depth + 1]])
        self.record("z^(0..N) linearly independent", abs(np.linalg.matrix_rank(stacked) - (depth + 1)), 0.0)

        def growth() -> float:
            t = 0.5
            partial = sum(t ** n * b.scalar_values for n, b in enumerate(self.truncated_basis))
            exact = calc.exp_basis(self.lattice, t).scalar_values
            return _relative(float(np.max(np.abs(partial - exact))), float(np.max(np.abs(exact))))

        self.check("partial sums of t^n z^(n) converge to e_t", 1e-8, growth)

    @cached_property
    def truncated_basis(self) -> List[DAFunction]:
        return calc.monomial_basis(self.lattice, self.cfg.truncation)

    def group_ring(self) -> None:
        def ring() -> float:
            worst = 0.0
            for m in range(11):
                p = DAPolynomial.from_scalars([0] * m + [1])
                for n in range(11 - m):
                    product = calc.apply_poly(p, self.basis[n])
                    worst = max(worst, _relative(product.max_difference(self.basis[m + n]), self.basis[m + n].scale()))
            return worst

        self.check("z^(m) (.) z^(n) = z^(m+n)", 1e-9, ring)
        duffin = calc.duffin_basis(self.lattice, 6)
        for N in range(1, 7):
            stacked = np.stack([b.scalar_values for b in duffin[:N + 1] + self.basis[:N + 1]])
            self.record(f"Duffin span rank N={N}", abs(np.linalg.matrix_rank(stacked) - (N + 1)), 0.0)

    def group_realization(self) -> None:
        r1, r2 = self.random_realization(), self.random_realization()
        samples = [self.disk_point(0.5) for _ in range(20)]

        def tau_gap(combined: Realization, combine: Callable) -> float:
            return max(
                float(np.max(np.abs(rz.tau_eval(combined, t) - combine(rz.tau_eval(r1, t), rz.tau_eval(r2, t)))))
                for t in samples
            )

        self.check("tau of sum", 1e-10, lambda: tau_gap(rz.add(r1, r2), lambda a, b: a + b))
        self.check("tau of product", 1e-10, lambda: tau_gap(rz.product(r1, r2), lambda a, b: a @ b))

        def pointwise_sum() -> float:
            f = rz.evaluate(rz.add(r1, r2), self.lattice)
            g = rz.evaluate(r1, self.lattice) + rz.evaluate(r2, self.lattice)
            return _relative(f.max_difference(g), g.scale())

        self.check("evaluate of sum is pointwise sum", 1e-9, pointwise_sum)

        def inverse() -> float:
            one = rz.evaluate(rz.product(r1, rz.inverse(r1, self.lattice)), self.lattice)
            return one.max_difference(DAFunction.constant(self.lattice, np.eye(1)))

        self.check("f (.) f^-1 = I", 1e-8, inverse)

        a = self.disk_point(0.9)
        self.check("scalar resolvent equals e_a", 1e-9, lambda: _relative(
            rz.resolvent_function([[a]], self.lattice).max_difference(
                calc.exp_basis(self.lattice, a).right([[1.0]])),
            calc.exp_basis(self.lattice, a).scale()))

        A = self.random_matrix(2, 0.5)

        def resolvent_identity() -> float:
            res = rz.resolvent_function(A, self.lattice)
            lhs = res - calc.forward_shift(res.right(A))
            return _relative(lhs.max_difference(DAFunction.constant(self.lattice, np.eye(2))), res.scale())

        self.check("(I - zA) (.) resolvent = I", 1e-9, resolvent_identity)

        def truncated_series() -> float:
            if rz.spectral_radius_estimate(A) > 0.5 + 1e-6:
                return 0.0
            res = rz.resolvent_function(A, self.lattice)
            return _relative(
                rz.resolvent_series(A, self.lattice, self.cfg.truncation).max_difference(res), res.scale())

        self.check("resolvent series for spectral radius <= 0.5", 1e-8, truncated_series)

        p = DAPolynomial.from_scalars(0.5 * self.complex_normal(3))

        def polynomial_factor() -> float:
            lhs = rz.evaluate(rz.product(rz.from_polynomial(p), r1), self.lattice)
            rhs = calc.apply_poly(p, rz.evaluate(r1, self.lattice))
            return _relative(lhs.max_difference(rhs), rhs.scale())

        self.check("product with a polynomial factor equals apply_poly", 1e-9, polynomial_factor)

    def group_tau(self) -> None:
        a, b = self.disk_point(0.5), self.disk_point(0.5)
        fraction = RationalScalarFunction(0.5 * self.complex_normal(3), np.convolve([1, -a], [1, -b]))

        def round_trip() -> float:
            r = rz.tau_inverse(fraction, self.lattice)
            markov = np.array([m[0, 0] for m in rz.tau_markov(r, 20)])
            expected = fraction.taylor(20)
            return _relative(float(np.max(np.abs(markov - expected))), float(np.max(np.abs(expected))))

        self.check("tau_markov o tau_inverse reproduces Taylor data", 1e-9, round_trip)

        def rejects() -> float:
            misses = 0
            for p in direction_data(self.lattice).poles:
                if p == 0:
                    continue
                try:
                    rz.tau_inverse(RationalScalarFunction([1], [1, -1 / p]), self.lattice)
                    misses += 1
                except NotRealizable:
                    pass
            return float(misses)

        self.record("tau_inverse rejects poles in P", rejects(), 0.0)

        r = self.random_realization()

        def cross_oracle() -> float:
            f = rz.evaluate(r, self.lattice)
            markov = rz.tau_markov(r, 3)
            worst = _relative(float(np.max(np.abs(f.at(self.origin) - markov[0]))), 1.0)
            h = f
            for k in range(1, 4):
                h = calc.backward_shift(h)
                if self.origin in h.unresolved:
                    break
                worst = max(worst, float(np.max(np.abs(h.at(self.origin) - markov[k]))))
            return worst

        self.check("Markov parameters match backward shifts at 0", 1e-9, cross_oracle)

        def ho_kalman() -> float:
            markov = rz.tau_markov(r, 12)
            minimal = rz.minimal_realization(markov)
            if minimal.state_dim > r.state_dim:
                return 1.0
            return max(float(np.max(np.abs(x - y))) for x, y in zip(rz.tau_markov(minimal, 12), markov))

        self.check("Ho-Kalman round trip", 1e-8, ho_kalman)

    def group_kernel(self) -> None:
        self.check("K_0 = 1", 1e-12, lambda: rational.kernel(self.lattice, self.origin, 2.0).values.max_difference(
            DAFunction.constant(self.lattice, 1.0)))
        one = self.lattice.right_neighbors.get(self.origin)
        if one is not None:
            self.check("K_1(1) = 1.5 at M = 2", 1e-10, lambda: abs(
                rational.kernel(self.lattice, one, 2.0).values.scalar(one) - 1.5))

        ids = list(self.lattice.ids)
        for w in self.rng.choice(ids, size=min(3, len(ids)), replace=False):
            w = int(w)

            def agreement(w=w) -> float:
                k = rational.kernel(self.lattice, w, 2.0).values
                s = rational.kernel_series(self.lattice, w, 2.0, self.cfg.truncation)
                return _relative(k.max_difference(s), s.scale())

            self.check(f"K_{w} realization matches series", 1e-8, agreement)

        for k in range(6):
            ws = sorted(int(w) for w in self.rng.choice(ids, size=min(4, len(ids)), replace=False))

            def gram(ws=ws) -> float:
                result = rational.gram_psd_check(rational.gram_matrix(self.lattice, ws, 2.0))
                return max(0.0, -result.min_eigenvalue / max(result.norm, 1e-300),
                           result.hermitian_residual / max(result.norm, 1.0))

            self.check(f"Gram matrix PSD #{k}", 1e-8, gram)

    def group_theorems(self) -> None:
        for k in range(5):
            r = self.random_realization()

            def certificate(r=r) -> float:
                f = rational.RationalDA.from_realization(r, self.lattice)
                p, q = rational.quotient_certificate(f)
                return _relative(rational.certificate_residual(f, p, q), f.values.scale())

            self.check(f"quotient certificate #{k}", 1e-8, certificate)

            def rank(r=r) -> float:
                f = rz.evaluate(r, self.lattice)
                return float(max(0, rational.shift_rank(f, r.state_dim + 3) - (r.state_dim + 1)))

            self.check(f"shift rank bound #{k}", 0.0, rank)

        self.check("shift rank of e_0.3", 0.0, lambda: float(
            abs(rational.shift_rank(calc.exp_basis(self.lattice, 0.3), 5) - 1)))
        self.check("shift rank of z^(2)", 0.0, lambda: float(abs(rational.shift_rank(self.basis[2], 5) - 3)))


def verify_suite(cfg: VerifyConfig, lattice: Optional[Lattice] = None) -> Report:
    """
    Run the enabled property groups.

    Args:
        cfg: Run settings
        lattice: Already loaded lattice (otherwise read from cfg.lattice_path)

    Returns:
        Report with one entry per property
    """
    if lattice is None:
        lattice = load(cfg.lattice_path)
    report = VerifySuite(cfg, lattice).run()
    logger.info(f"Verification finished: {len(report.results) - len(report.failed)}/{len(report.results)} passed")
    return report
