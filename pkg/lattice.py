"""
Lattice module.
Finite simply-connected patches of rhombic lattices: construction, validation,
paths, leashes, tracks and the derived direction sets.
"""
import hashlib
import json
import logging
import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

import config
from errors import (
    Disconnected,
    InvalidParameter,
    InvalidPath,
    IoError,
    NoLeash,
    ParseError,
    ValidationError,
)

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]
Face = Tuple[int, ...]


def _edge_key(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Path:
    """A vertex id sequence (z_0, ..., z_N) with consecutive vertices adjacent."""

    vertices: Tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    @property
    def start(self) -> int:
        return self.vertices[0]

    @property
    def end(self) -> int:
        return self.vertices[-1]

    def __iter__(self) -> Iterator[int]:
        return iter(self.vertices)

    def __len__(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True)
class Track:
    """A maximal strip of faces crossed through opposite sides."""

    faces: Tuple[int, ...]
    ties: Tuple[Edge, ...]
    rails: Tuple[Edge, ...]


@dataclass(frozen=True)
class DirectionData:
    """Edge directions E, forbidden parameters S and poles P of a lattice."""

    directions: Tuple[complex, ...]
    forbidden: Tuple[complex, ...]
    poles: Tuple[complex, ...]

    def distance_to_forbidden(self, t: complex) -> float:
        if not self.forbidden:
            return math.inf
        return min(abs(t - s) for s in self.forbidden)

    def distance_to_poles(self, t: complex) -> float:
        return min(abs(t - p) for p in self.poles)


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of validate(): one entry per lattice invariant."""

    checks: Tuple[CheckResult, ...]
    leashless: Tuple[int, ...] = ()

    @property
    def ok(self) -> bool:
        return all(check.ok for check in self.checks)

    @property
    def failed(self) -> List[str]:
        return [check.name for check in self.checks if not check.ok]

    def to_dict(self) -> Dict:
        return {
            'ok': self.ok,
            'checks': [{'name': c.name, 'ok': c.ok, 'detail': c.detail} for c in self.checks],
            'leashless': list(self.leashless),
        }


@dataclass(frozen=True)
class Lattice:
    """
    Finite patch of a rhombic tessellation.

    Vertices are (id, complex coordinate) pairs, edges unordered id pairs and
    faces counterclockwise 4-tuples of ids. The object is immutable; derived
    structures are computed lazily and cached.
    """

    vertices: Tuple[Tuple[int, complex], ...]
    edges: Tuple[Edge, ...]
    faces: Tuple[Face, ...]
    origin_id: int

    @classmethod
    def build(cls, vertices: Sequence[Tuple[int, complex]], edges: Sequence[Sequence[int]],
              faces: Sequence[Sequence[int]], origin_id: int) -> 'Lattice':
        """
        Create a lattice from plain sequences.

        Args:
            vertices: (id, coordinate) pairs
            edges: Unordered id pairs
            faces: Counterclockwise id 4-tuples
            origin_id: Id of the vertex at 0

        Returns:
            Lattice (not validated; call validate() for that)
        """
        return cls(
            vertices=tuple(sorted((int(v), complex(z)) for v, z in vertices)),
            edges=tuple((int(e[0]), int(e[1])) for e in edges),
            faces=tuple(tuple(int(v) for v in f) for f in faces),
            origin_id=int(origin_id),
        )

    # -- vertex lookup ---------------------------------------------------

    @cached_property
    def ids(self) -> Tuple[int, ...]:
        return tuple(v for v, _ in self.vertices)

    @cached_property
    def index(self) -> Dict[int, int]:
        """Position of each vertex id in the sorted id order."""
        return {v: i for i, v in enumerate(self.ids)}

    @cached_property
    def coords(self) -> np.ndarray:
        coords = np.array([z for _, z in self.vertices], dtype=complex)
        coords.flags.writeable = False
        return coords

    @property
    def origin_index(self) -> int:
        return self.index[self.origin_id]

    def coordinate(self, vid: int) -> complex:
        try:
            return complex(self.coords[self.index[vid]])
        except KeyError:
            raise InvalidParameter(f"vertex {vid} is not in the lattice") from None

    def vertex_at(self, z: complex, tol: Optional[float] = None) -> Optional[int]:
        """Id of the vertex at coordinate z, or None."""
        tol = config.COORD_TOL if tol is None else tol
        if len(self.coords) == 0:
            return None
        distances = np.abs(self.coords - z)
        i = int(np.argmin(distances))
        return self.ids[i] if distances[i] <= tol else None

    # -- adjacency -------------------------------------------------------

    @cached_property
    def edge_set(self) -> frozenset:
        return frozenset(_edge_key(u, v) for u, v in self.edges)

    @cached_property
    def neighbors(self) -> Dict[int, Tuple[int, ...]]:
        adjacency: Dict[int, set] = {v: set() for v in self.ids}
        for u, v in self.edges:
            if u in adjacency and v in adjacency and u != v:
                adjacency[u].add(v)
                adjacency[v].add(u)
        return {v: tuple(sorted(ns)) for v, ns in adjacency.items()}

    def has_edge(self, u: int, v: int) -> bool:
        return _edge_key(u, v) in self.edge_set

    def step(self, u: int, v: int) -> complex:
        return self.coordinate(v) - self.coordinate(u)

    def is_horizontal(self, u: int, v: int) -> bool:
        return abs(self.step(u, v).imag) <= config.COORD_TOL

    @cached_property
    def right_neighbors(self) -> Dict[int, int]:
        """Map u -> u+1 for every vertex whose right neighbour is in the patch."""
        result = {}
        for u in self.ids:
            for w in self.neighbors[u]:
                if abs(self.step(u, w) - 1) <= config.COORD_TOL:
                    result[u] = w
                    break
        return result

    # -- paths from the origin ------------------------------------------

    @cached_property
    def origin_paths(self) -> Dict[int, Path]:
        """find_path(origin, z) for every vertex z."""
        return {v: find_path(self, self.origin_id, v) for v in self.ids}

    @cached_property
    def origin_steps(self) -> Dict[int, np.ndarray]:
        """Step directions z_k - z_{k-1} along origin_paths."""
        steps = {}
        for v, path in self.origin_paths.items():
            zs = np.array([self.coordinate(u) for u in path.vertices], dtype=complex)
            steps[v] = np.diff(zs)
        return steps

    @cached_property
    def origin_integral_weights(self) -> np.ndarray:
        """
        Matrix W with (W f)(z) = integral of f from the origin to z.

        Row z holds the trapezoid weights of the edges of origin_paths[z].
        """
        n = len(self.ids)
        weights = np.zeros((n, n), dtype=complex)
        for v, path in self.origin_paths.items():
            row = self.index[v]
            for u, w in zip(path.vertices[:-1], path.vertices[1:]):
                half = self.step(u, w) / 2
                weights[row, self.index[u]] += half
                weights[row, self.index[w]] += half
        weights.flags.writeable = False
        return weights

    @cached_property
    def face_array(self) -> np.ndarray:
        """Faces as a (F, 4) array of vertex positions."""
        if not self.faces:
            return np.zeros((0, 4), dtype=int)
        return np.array([[self.index[v] for v in face] for face in self.faces], dtype=int)

    @cached_property
    def edge_array(self) -> np.ndarray:
        """Edges as an (E, 2) array of vertex positions."""
        if not self.edges:
            return np.zeros((0, 2), dtype=int)
        return np.array([[self.index[u], self.index[v]] for u, v in self.edges], dtype=int)


# -- construction ------------------------------------------------------------

def generate(kind: str, radius: int, alpha: Optional[float] = None) -> Lattice:
    """
    Generate a square or rhombic patch {m + n*w : |m|, |n| <= radius}.

    The rhombic patch is a stack of translated copies of one horizontal track,
    with w = exp(i*alpha); the square patch uses w = i exactly.

    Args:
        kind: 'square' or 'rhombic'
        radius: Patch radius (>= 1)
        alpha: Rhombus angle in radians, in (0, pi); defaults to pi/3 for 'rhombic'

    Returns:
        Lattice whose ids run row by row from the bottom-left corner
    """
    if isinstance(radius, bool) or int(radius) != radius or radius < 1:
        raise InvalidParameter(f"radius must be a positive integer, got {radius}")
    radius = int(radius)

    if kind == 'square':
        omega = 1j
    elif kind == 'rhombic':
        alpha = math.pi / 3 if alpha is None else float(alpha)
        if not (0.0 < alpha < math.pi) or math.sin(alpha) <= config.COORD_TOL:
            raise InvalidParameter(f"degenerate rhombus angle alpha={alpha}")
        omega = complex(math.cos(alpha), math.sin(alpha))
    else:
        raise InvalidParameter(f"unknown lattice kind '{kind}'")

    width = 2 * radius + 1

    def vid(m: int, n: int) -> int:
        return (n + radius) * width + (m + radius)

    span = range(-radius, radius + 1)
    vertices = [(vid(m, n), m + n * omega) for n in span for m in span]
    edges = []
    for n in span:
        for m in span:
            if m < radius:
                edges.append((vid(m, n), vid(m + 1, n)))
            if n < radius:
                edges.append((vid(m, n), vid(m, n + 1)))
    faces = [
        (vid(m, n), vid(m + 1, n), vid(m + 1, n + 1), vid(m, n + 1))
        for n in span[:-1] for m in span[:-1]
    ]
    lattice = Lattice.build(vertices, edges, faces, vid(0, 0))
    logger.info(f"Generated {kind} lattice: {len(vertices)} vertices, {len(edges)} edges, {len(faces)} faces")
    return lattice


def to_dict(lattice: Lattice) -> Dict:
    return {
        'vertices': [{'id': v, 're': z.real, 'im': z.imag} for v, z in lattice.vertices],
        'edges': [[u, v] for u, v in lattice.edges],
        'faces': [list(face) for face in lattice.faces],
        'origin_id': lattice.origin_id,
    }


def from_dict(data) -> Lattice:
    """
    Parse the lattice JSON schema.

    Raises:
        ParseError: if the structure or a field type is wrong
    """
    if not isinstance(data, dict):
        raise ParseError("lattice JSON must be an object")
    for key in ('vertices', 'edges', 'faces', 'origin_id'):
        if key not in data:
            raise ParseError(f"lattice JSON is missing '{key}'")
    try:
        vertices = []
        for item in data['vertices']:
            if not isinstance(item['id'], int):
                raise ParseError(f"vertex id must be an integer: {item['id']!r}")
            vertices.append((item['id'], complex(float(item['re']), float(item['im']))))
        edges = []
        for edge in data['edges']:
            if len(edge) != 2 or not all(isinstance(v, int) for v in edge):
                raise ParseError(f"edge must be a pair of integer ids: {edge!r}")
            edges.append((edge[0], edge[1]))
        faces = []
        for face in data['faces']:
            if not isinstance(face, list) or not all(isinstance(v, int) for v in face):
                raise ParseError(f"face must be a list of integer ids: {face!r}")
            faces.append(tuple(face))
        origin_id = data['origin_id']
        if not isinstance(origin_id, int):
            raise ParseError("origin_id must be an integer")
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError(f"malformed lattice JSON: {e}") from e

    ids = [v for v, _ in vertices]
    if len(set(ids)) != len(ids):
        raise ParseError("duplicate vertex ids")
    return Lattice.build(vertices, edges, faces, origin_id)


def save(lattice: Lattice, path: str) -> None:
    """Write the lattice JSON file."""
    try:
        with open(path, 'w') as f:
            json.dump(to_dict(lattice), f, indent=2)
    except OSError as e:
        raise IoError(f"cannot write lattice file {path}: {e}") from e
    logger.info(f"Lattice saved to {path}")


def load(path: str) -> Lattice:
    """
    Read and validate a lattice JSON file.

    Raises:
        IoError: if the file cannot be read
        ParseError: on a schema violation
        ValidationError: naming every failing invariant
    """
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except OSError as e:
        raise IoError(f"cannot read lattice file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"{path} is not valid JSON: {e}") from e

    lattice = from_dict(data)
    report = validate(lattice)
    if not report.ok:
        raise ValidationError(report.failed)
    return lattice


def lattice_hash(lattice: Lattice) -> str:
    """SHA-256 of the canonical lattice JSON."""
    payload = json.dumps(to_dict(lattice), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()


# -- validation --------------------------------------------------------------

def validate(lattice: Lattice) -> ValidationReport:
    """
    Check every lattice invariant; failures are reported, not raised.

    The leash check only asks for a leash of the origin: on a finite patch the
    vertices along the right boundary never have one, and they are listed in
    report.leashless instead.
    """
    tol = config.COORD_TOL
    ids = set(lattice.ids)
    checks = []

    bad_refs = [e for e in lattice.edges if e[0] not in ids or e[1] not in ids or e[0] == e[1]]
    bad_refs += [f for f in lattice.faces if any(v not in ids for v in f)]
    duplicate_edges = len(lattice.edge_set) != len(lattice.edges)
    checks.append(CheckResult(
        'references', not bad_refs and not duplicate_edges,
        f"bad references: {bad_refs[:5]}" if bad_refs else ("duplicate edges" if duplicate_edges else ""),
    ))

    long_edges = [
        (u, v) for u, v in lattice.edges
        if u in ids and v in ids and abs(abs(lattice.step(u, v)) - 1) > tol
    ]
    checks.append(CheckResult('unit edges', not long_edges, f"non-unit edges: {long_edges[:5]}" if long_edges else ""))

    bad_faces, clockwise = [], []
    for k, face in enumerate(lattice.faces):
        if len(face) != 4 or len(set(face)) != 4 or any(v not in ids for v in face):
            bad_faces.append(k)
            continue
        a, b, c, d = (lattice.coordinate(v) for v in face)
        sides = [(face[i], face[(i + 1) % 4]) for i in range(4)]
        rhombus = (
            abs(a - b + c - d) <= tol
            and all(abs(abs(lattice.step(u, v)) - 1) <= tol for u, v in sides)
            and all(lattice.has_edge(u, v) for u, v in sides)
            and abs(a - c) > tol and abs(b - d) > tol
        )
        if not rhombus:
            bad_faces.append(k)
            continue
        area = ((b - a).conjugate() * (d - a)).imag
        if area <= tol:
            clockwise.append(k)
    checks.append(CheckResult('unit-rhombus faces', not bad_faces, f"faces {bad_faces[:5]}" if bad_faces else ""))
    checks.append(CheckResult('counterclockwise faces', not clockwise, f"faces {clockwise[:5]}" if clockwise else ""))

    coords = lattice.coords
    duplicates = []
    if len(coords) > 1:
        order = np.lexsort((coords.imag, coords.real))
        for i, j in zip(order[:-1], order[1:]):
            if abs(coords[i] - coords[j]) <= tol:
                duplicates.append((lattice.ids[i], lattice.ids[j]))
    checks.append(CheckResult('distinct coordinates', not duplicates, f"{duplicates[:5]}" if duplicates else ""))

    origin_ok = lattice.origin_id in ids and abs(lattice.coordinate(lattice.origin_id)) <= tol
    checks.append(CheckResult('origin', origin_ok, "" if origin_ok else f"origin_id {lattice.origin_id} is not a vertex at 0"))

    reached = _reachable(lattice, lattice.ids[0]) if lattice.ids else set()
    connected = len(reached) == len(ids)
    checks.append(CheckResult('connected', connected, "" if connected else f"{len(ids) - len(reached)} unreachable vertices"))

    euler = len(ids) - len(lattice.edge_set) + len(lattice.faces)
    checks.append(CheckResult('simply connected', euler == 1, f"V - E + F = {euler}"))

    leashless = []
    origin_leash = False
    if connected and not long_edges:
        for v in lattice.ids:
            try:
                find_leash(lattice, v)
                if v == lattice.origin_id:
                    origin_leash = True
            except NoLeash:
                leashless.append(v)
    checks.append(CheckResult(
        'leashes', origin_leash,
        f"{len(leashless)} boundary vertices without an in-patch leash",
    ))

    report = ValidationReport(checks=tuple(checks), leashless=tuple(leashless))
    if not report.ok:
        logger.warning(f"Lattice validation failed: {', '.join(report.failed)}")
    return report


def direction_data(lattice: Lattice) -> DirectionData:
    """
    Edge directions E (both orientations), S = {-2/(1+d)} and P = {0} u 1/S.

    Values equal within COORD_TOL are merged; each set is sorted by argument.
    """
    tol = config.COORD_TOL
    directions = []
    for u, v in lattice.edges:
        d = lattice.step(u, v)
        for candidate in (d, -d):
            if all(abs(candidate - e) > tol for e in directions):
                directions.append(candidate)

    forbidden = []
    for d in directions:
        if abs(1 + d) <= tol:
            continue
        t = -2 / (1 + d)
        if all(abs(t - s) > tol for s in forbidden):
            forbidden.append(t)

    poles = [0j] + [1 / t for t in forbidden]

    def by_angle(values):
        return tuple(sorted(values, key=lambda w: (round(math.atan2(w.imag, w.real), 9), abs(w))))

    return DirectionData(by_angle(directions), by_angle(forbidden), by_angle(poles))


# -- paths -------------------------------------------------------------------

def _reachable(lattice: Lattice, start: int) -> set:
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for w in lattice.neighbors[u]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def _distances(lattice: Lattice, sources: Sequence[int], allowed=None) -> Dict[int, int]:
    """BFS distances from a set of sources, optionally restricted to allowed edges."""
    dist = {s: 0 for s in sources}
    queue = deque(sources)
    while queue:
        u = queue.popleft()
        for w in lattice.neighbors[u]:
            if w in dist or (allowed is not None and not allowed(u, w)):
                continue
            dist[w] = dist[u] + 1
            queue.append(w)
    return dist


def _descend(lattice: Lattice, start: int, dist: Dict[int, int], allowed=None) -> List[int]:
    """Walk from start down a distance field, always taking the smallest id."""
    walk = [start]
    u = start
    while dist[u] > 0:
        u = min(
            w for w in lattice.neighbors[u]
            if dist.get(w) == dist[u] - 1 and (allowed is None or allowed(u, w))
        )
        walk.append(u)
    return walk


def _check_vertex(lattice: Lattice, vid: int) -> None:
    if vid not in lattice.index:
        raise InvalidParameter(f"vertex {vid} is not in the lattice")


def find_path(lattice: Lattice, a: int, b: int) -> Path:
    """
    Shortest path from a to b; ties go to the smallest next vertex id.

    Raises:
        Disconnected: if b cannot be reached from a
    """
    _check_vertex(lattice, a)
    _check_vertex(lattice, b)
    dist = _distances(lattice, [b])
    if a not in dist:
        raise Disconnected(f"no path from {a} to {b}")
    return Path(tuple(_descend(lattice, a, dist)))


def find_leash(lattice: Lattice, z: int) -> Path:
    """
    Shortest leash of z: interior steps avoid +-1 and the final step is +1.

    Raises:
        NoLeash: if no leash of z exists inside the patch
    """
    _check_vertex(lattice, z)

    def not_horizontal_unit(u: int, w: int) -> bool:
        d = lattice.step(u, w)
        return abs(d - 1) > config.COORD_TOL and abs(d + 1) > config.COORD_TOL

    reach = _distances(lattice, [z], allowed=not_horizontal_unit)
    anchors = [u for u in reach if u in lattice.right_neighbors]
    if not anchors:
        raise NoLeash(f"vertex {z} has no leash inside the patch")
    nearest = min(reach[u] for u in anchors)
    targets = [u for u in anchors if reach[u] == nearest]

    # distance field towards the nearest anchors; the restricted graph is undirected
    dist = _distances(lattice, targets, allowed=not_horizontal_unit)
    walk = _descend(lattice, z, dist, allowed=not_horizontal_unit)
    walk.append(lattice.right_neighbors[walk[-1]])
    return Path(tuple(walk))


def distinct_paths(lattice: Lattice, a: int, b: int, count: int) -> List[Path]:
    """
    Up to `count` distinct paths from a to b: all shortest paths in id order
    first, then detours through the neighbours of a and of b.
    """
    _check_vertex(lattice, a)
    _check_vertex(lattice, b)
    dist = _distances(lattice, [b])
    if a not in dist:
        raise Disconnected(f"no path from {a} to {b}")

    paths: List[Tuple[int, ...]] = []

    def shortest(prefix: List[int]) -> None:
        if len(paths) >= count:
            return
        u = prefix[-1]
        if dist[u] == 0:
            paths.append(tuple(prefix))
            return
        for w in lattice.neighbors[u]:
            if dist.get(w) == dist[u] - 1:
                shortest(prefix + [w])

    shortest([a])

    candidates = []
    for c in lattice.neighbors[a]:
        candidates.append((a,) + find_path(lattice, c, b).vertices)
    for c in lattice.neighbors[b]:
        candidates.append(find_path(lattice, a, c).vertices + (b,))
    for c in lattice.neighbors[a]:
        candidates.append((a, c) + find_path(lattice, a, b).vertices)
    for candidate in candidates:
        if len(paths) >= count:
            break
        if candidate not in paths:
            paths.append(candidate)
    return [Path(p) for p in paths]


def check_path(lattice: Lattice, path: Path) -> None:
    """Raise InvalidPath unless every step of the path is a lattice edge."""
    for v in path.vertices:
        if v not in lattice.index:
            raise InvalidPath(f"vertex {v} is not in the lattice")
    for u, v in zip(path.vertices[:-1], path.vertices[1:]):
        if not lattice.has_edge(u, v):
            raise InvalidPath(f"({u}, {v}) is not an edge of the lattice")


# -- tracks ------------------------------------------------------------------


def tracks(lattice: Lattice) -> List[Track]:
    """
    Maximal track segments of the patch.

    A face is crossed from one side to the opposite side; every face lies on
    exactly two tracks, one per pair of opposite sides.
    """
    edge_faces: Dict[Edge, List[Tuple[int, int]]] = {}
    for k, face in enumerate(lattice.faces):
        for side in range(4):
            edge_faces.setdefault(_edge_key(face[side], face[(side + 1) % 4]), []).append((k, side))

    def side_edge(k: int, side: int) -> Edge:
        face = lattice.faces[k]
        return (face[side % 4], face[(side + 1) % 4])

    def across(k: int, side: int) -> Optional[Tuple[int, int]]:
        for other, other_side in edge_faces[_edge_key(*side_edge(k, side))]:
            if other != k:
                return other, other_side
        return None

    def walk(start: int, exit_side: int):
        """Cross faces from start through exit_side until the boundary or back to start."""
        crossed, ties = [], []
        k, side = start, exit_side
        while True:
            nxt = across(k, side)
            if nxt is None:
                return crossed, ties, False
            ties.append(side_edge(k, side))
            other, entry = nxt
            if other == start:
                return crossed, ties, True
            crossed.append((other, entry % 2))
            k, side = other, entry + 2

    visited = set()
    result = []
    for k in range(len(lattice.faces)):
        for cls in (0, 1):
            if (k, cls) in visited:
                continue
            forward, forward_ties, closed = walk(k, cls + 2)
            if closed:
                members, ties = [(k, cls)] + forward, forward_ties
            else:
                backward, backward_ties, _ = walk(k, cls)
                members = list(reversed(backward)) + [(k, cls)] + forward
                ties = list(reversed(backward_ties)) + forward_ties

            rails = []
            for face_index, face_class in members:
                visited.add((face_index, face_class))
                rails.append(side_edge(face_index, face_class + 1))
                rails.append(side_edge(face_index, face_class + 3))
            result.append(Track(
                faces=tuple(f for f, _ in members),
                ties=tuple(ties),
                rails=tuple(rails),
            ))
    logger.debug(f"Found {len(result)} tracks")
    return result
