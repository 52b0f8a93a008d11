"""Domain descriptions and their rasterization onto uniform lattices.

A lattice node is *interior* when it lies strictly inside the shape. The *ring*
is the set of non-interior nodes that an interior node reaches in one step of
the 5-point (2D) or 7-point (3D) stencil. Convex corners of rectilinear shapes
are therefore never ring nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np

from .errors import EmptyInterior, IncompatibleSpacing, InvalidDimension, InvalidShape

_LATTICE_RTOL = 1e-9


def _positive(name, value):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidShape(f"{name!r} must be a number, got {value!r}") from None
    if not math.isfinite(value) or value <= 0:
        raise InvalidShape(f"{name!r} must be a positive finite length, got {value!r}")
    return value


def _edges(vertices):
    v = np.asarray(vertices, dtype=float)
    return np.concatenate([v, np.roll(v, -1, axis=0)], axis=1)


def _classify_polygon(edges, px, py, atol=0.0):
    """Return (inside, on_boundary) for points against a rectilinear polygon.

    ``inside`` is the crossing-number parity of a ray cast towards +x using
    only vertical edges with a half-open y range. It is meaningful only for
    points off the boundary.
    """
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    crossings = np.zeros(px.shape, dtype=np.int64)
    on_bnd = np.zeros(px.shape, dtype=bool)
    for x1, y1, x2, y2 in edges:
        if y1 == y2:
            lo, hi = min(x1, x2), max(x1, x2)
            on_bnd |= (np.abs(py - y1) <= atol) & (px >= lo - atol) & (px <= hi + atol)
        else:
            lo, hi = min(y1, y2), max(y1, y2)
            on_bnd |= (np.abs(px - x1) <= atol) & (py >= lo - atol) & (py <= hi + atol)
            crossings += (x1 > px) & (py >= lo) & (py < hi)
    return (crossings % 2 == 1), on_bnd


@dataclass(frozen=True)
class RectilinearPolygon:
    """Simple polygon with axis-parallel edges, vertices listed in order."""

    vertices: tuple
    kind = "rectilinear_polygon"
    ndim = 2

    def __post_init__(self):
        try:
            verts = tuple((float(x), float(y)) for x, y in self.vertices)
        except (TypeError, ValueError):
            raise InvalidShape("'vertices' must be a list of [x, y] pairs") from None
        if len(verts) < 4:
            raise InvalidShape("'vertices' needs at least 4 points")
        if not all(math.isfinite(c) for v in verts for c in v):
            raise InvalidShape("'vertices' must be finite")
        object.__setattr__(self, "vertices", verts)
        edges = _edges(verts)
        for x1, y1, x2, y2 in edges:
            if (x1 != x2) == (y1 != y2):
                raise InvalidShape("'vertices': every edge must be axis-parallel with nonzero length")
        self._check_simple(edges)

    @staticmethod
    def _check_simple(edges):
        m = len(edges)
        boxes = [(min(e[0], e[2]), max(e[0], e[2]), min(e[1], e[3]), max(e[1], e[3])) for e in edges]
        for a in range(m):
            for b in range(a + 1, m):
                ax0, ax1, ay0, ay1 = boxes[a]
                bx0, bx1, by0, by1 = boxes[b]
                x0, x1 = max(ax0, bx0), min(ax1, bx1)
                y0, y1 = max(ay0, by0), min(ay1, by1)
                if x0 > x1 or y0 > y1:
                    continue
                adjacent = b == a + 1 or (a == 0 and b == m - 1)
                if adjacent and x0 == x1 and y0 == y1:
                    continue
                raise InvalidShape("'vertices': polygon is not simple (edges %d and %d intersect)" % (a, b))

    @property
    def edges(self):
        return _edges(self.vertices)

    def contains(self, points):
        """Strict inclusion test for an (m, 2) array of points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        scale = max(1.0, float(np.abs(self.vertices).max()))
        inside, on_bnd = _classify_polygon(self.edges, pts[:, 0], pts[:, 1], atol=1e-12 * scale)
        return inside & ~on_bnd

    def on_boundary(self, points, atol=1e-12):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return _classify_polygon(self.edges, pts[:, 0], pts[:, 1], atol=atol)[1]

    def measure(self):
        v = np.asarray(self.vertices)
        x, y = v[:, 0], v[:, 1]
        return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))

    def perimeter(self):
        e = self.edges
        return float(np.sum(np.abs(e[:, 2] - e[:, 0]) + np.abs(e[:, 3] - e[:, 1])))

    def polygon(self):
        return self


@dataclass(frozen=True)
class Rectangle:
    width: float
    height: float
    origin: tuple = (0.0, 0.0)
    kind = "rectangle"
    ndim = 2

    def __post_init__(self):
        object.__setattr__(self, "width", _positive("width", self.width))
        object.__setattr__(self, "height", _positive("height", self.height))
        object.__setattr__(self, "origin", tuple(float(c) for c in self.origin))

    def polygon(self):
        x0, y0 = self.origin
        w, h = self.width, self.height
        return RectilinearPolygon(((x0, y0), (x0 + w, y0), (x0 + w, y0 + h), (x0, y0 + h)))

    def contains(self, points):
        return self.polygon().contains(points)

    def measure(self):
        return self.width * self.height

    def perimeter(self):
        return 2.0 * (self.width + self.height)


@dataclass(frozen=True)
class LShape:
    """Square ``[0, outer]^2`` with the square ``[outer - notch, outer]^2`` removed."""

    outer: float
    notch: float
    kind = "lshape"
    ndim = 2

    def __post_init__(self):
        object.__setattr__(self, "outer", _positive("outer", self.outer))
        object.__setattr__(self, "notch", _positive("notch", self.notch))
        if not self.notch < self.outer:
            raise InvalidShape("'notch' must be strictly smaller than 'outer'")

    def polygon(self):
        a, b = self.outer, self.outer - self.notch
        return RectilinearPolygon(((0.0, 0.0), (a, 0.0), (a, b), (b, b), (b, a), (0.0, a)))

    def contains(self, points):
        return self.polygon().contains(points)

    def measure(self):
        return self.outer**2 - self.notch**2

    def perimeter(self):
        return 4.0 * self.outer


@dataclass(frozen=True)
class Disk:
    radius: float
    center: tuple = (0.0, 0.0)
    kind = "disk"
    ndim = 2

    def __post_init__(self):
        object.__setattr__(self, "radius", _positive("radius", self.radius))
        try:
            center = tuple(float(c) for c in self.center)
        except (TypeError, ValueError):
            raise InvalidShape("'center' must be a pair of numbers") from None
        if len(center) != 2:
            raise InvalidShape("'center' must have two coordinates")
        object.__setattr__(self, "center", center)

    def contains(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.sum((pts - np.asarray(self.center)) ** 2, axis=1) < self.radius**2

    def measure(self):
        return math.pi * self.radius**2

    def perimeter(self):
        return 2.0 * math.pi * self.radius


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in 3D, ``origin + [0, sides]``."""

    sides: tuple
    origin: tuple = (0.0, 0.0, 0.0)
    kind = "box"
    ndim = 3

    def __post_init__(self):
        sides = tuple(_positive("sides", s) for s in self.sides)
        if len(sides) != 3:
            raise InvalidShape("'sides' must have three entries")
        object.__setattr__(self, "sides", sides)
        object.__setattr__(self, "origin", tuple(float(c) for c in self.origin))

    def contains(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float)) - np.asarray(self.origin)
        return np.all((pts > 0) & (pts < np.asarray(self.sides)), axis=1)

    def measure(self):
        return float(np.prod(self.sides))

    def perimeter(self):
        a, b, c = self.sides
        return 2.0 * (a * b + b * c + a * c)


Shape = Union[Rectangle, LShape, RectilinearPolygon, Disk, Box]


def measure(shape: Shape) -> float:
    """Exact area (or volume) of a shape."""
    return shape.measure()


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n, via v_n = 2*pi/n * v_{n-2}."""
    if int(n) != n or n < 1:
        raise InvalidDimension(f"dimension must be a positive integer, got {n!r}")
    n = int(n)
    v = 2.0 if n % 2 else 1.0
    for k in range(2 if n % 2 == 0 else 3, n + 1, 2):
        v *= 2.0 * math.pi / k
    return v


@dataclass(frozen=True, eq=False)
class GridDomain:
    """A shape rasterized on a lattice with spacing ``h``.

    Node ``idx`` (flat, C order over ``dims``) sits at ``origin + h * multi_index``.
    Padded vectors are ordered interior nodes first, then ring nodes, each in
    increasing flat index.
    """

    shape: Shape
    h: float
    dims: tuple
    origin: tuple
    interior: np.ndarray
    ring: np.ndarray
    interior_map: np.ndarray
    ring_map: np.ndarray
    exact_boundary: bool
    _mask: np.ndarray = field(repr=False)

    @property
    def ndim(self):
        return len(self.dims)

    @property
    def n_int(self):
        return int(self.interior.size)

    @property
    def n_ring(self):
        return int(self.ring.size)

    @property
    def n_pad(self):
        return self.n_int + self.n_ring

    @property
    def padded_nodes(self):
        return np.concatenate([self.interior, self.ring])

    @cached_property
    def strides(self):
        return tuple(int(s) for s in np.cumprod((1,) + self.dims[::-1])[:-1][::-1])

    def coords(self, flat):
        multi = np.stack(np.unravel_index(np.asarray(flat), self.dims), axis=-1)
        return np.asarray(self.origin) + self.h * multi

    def padded_index(self, flat):
        """Position of lattice nodes in a padded vector, -1 when not padded."""
        flat = np.asarray(flat)
        out = np.full(flat.shape, -1, dtype=np.int64)
        im = self.interior_map[flat]
        rm = self.ring_map[flat]
        out[im >= 0] = im[im >= 0]
        out[rm >= 0] = self.n_int + rm[rm >= 0]
        return out

    def offsets(self):
        """Flat-index offsets of the 2n stencil neighbours."""
        return [sign * s for s in self.strides for sign in (-1, 1)]

    @cached_property
    def interior_ring_pairs(self):
        """(interior position, ring position) for every stencil adjacency."""
        rows, cols = [], []
        for off in self.offsets():
            nb = self.interior + off
            r = self.ring_map[nb]
            keep = r >= 0
            rows.append(np.nonzero(keep)[0])
            cols.append(r[keep])
        return np.concatenate(rows), np.concatenate(cols)

    @cached_property
    def interior_pairs(self):
        """Directed (i, j) interior-interior stencil adjacencies."""
        rows, cols = [], []
        for off in self.offsets():
            nb = self.interior + off
            j = self.interior_map[nb]
            keep = j >= 0
            rows.append(np.nonzero(keep)[0])
            cols.append(j[keep])
        return np.concatenate(rows), np.concatenate(cols)

    def ring_degree(self):
        """Number of interior stencil neighbours of each ring node."""
        _, rc = self.interior_ring_pairs
        return np.bincount(rc, minlength=self.n_ring)


def _lattice_ints(values, h):
    q = np.asarray(values, dtype=float) / h
    ints = np.rint(q)
    if np.any(np.abs(q - ints) > _LATTICE_RTOL * np.maximum(1.0, np.abs(q))):
        raise IncompatibleSpacing(f"coordinates {np.asarray(values).tolist()} are not integer multiples of h={h}")
    return ints.astype(np.int64)


def _finish(shape, h, dims, origin, interior_mask, exact_boundary):
    if not interior_mask.any():
        raise EmptyInterior(f"no interior nodes for {shape.kind} at h={h}")
    ring_mask = np.zeros_like(interior_mask)
    for axis in range(interior_mask.ndim):
        for sign in (-1, 1):
            ring_mask |= np.roll(interior_mask, sign, axis=axis)
    ring_mask &= ~interior_mask
    interior = np.flatnonzero(interior_mask)
    ring = np.flatnonzero(ring_mask)
    size = int(np.prod(dims))
    imap = np.full(size, -1, dtype=np.int64)
    imap[interior] = np.arange(interior.size)
    rmap = np.full(size, -1, dtype=np.int64)
    rmap[ring] = np.arange(ring.size)
    for arr in (interior, ring, imap, rmap, interior_mask):
        arr.setflags(write=False)
    return GridDomain(
        shape=shape,
        h=float(h),
        dims=tuple(int(d) for d in dims),
        origin=tuple(float(o) for o in origin),
        interior=interior,
        ring=ring,
        interior_map=imap,
        ring_map=rmap,
        exact_boundary=exact_boundary,
        _mask=interior_mask,
    )


def rasterize(shape: Shape, h: float) -> GridDomain:
    """Classify lattice nodes of spacing ``h`` against ``shape``.

    Rectilinear shapes need every vertex on the lattice (``IncompatibleSpacing``
    otherwise); their ring nodes then lie exactly on the boundary.
    """
    h = float(h)
    if not (math.isfinite(h) and h > 0):
        raise IncompatibleSpacing(f"h must be positive, got {h!r}")

    if isinstance(shape, Disk):
        m = int(math.floor(shape.radius / h)) + 2
        ax = np.arange(-m, m + 1)
        i, j = np.meshgrid(ax, ax, indexing="ij")
        mask = (i * h) ** 2 + (j * h) ** 2 < shape.radius**2
        origin = (shape.center[0] - m * h, shape.center[1] - m * h)
        return _finish(shape, h, mask.shape, origin, mask, exact_boundary=False)

    if isinstance(shape, Box):
        lo = _lattice_ints(shape.origin, h) - 1
        n = _lattice_ints(shape.sides, h)
        dims = tuple(n + 3)
        grids = np.meshgrid(*[np.arange(d) for d in dims], indexing="ij")
        mask = np.ones(dims, dtype=bool)
        for g, nk in zip(grids, n):
            mask &= (g > 1) & (g < nk + 1)
        return _finish(shape, h, dims, tuple(lo * h), mask, exact_boundary=True)

    poly = shape.polygon()
    ints = _lattice_ints(np.asarray(poly.vertices), h)
    lo = ints.min(axis=0) - 1
    hi = ints.max(axis=0) + 1
    dims = tuple(hi - lo + 1)
    i, j = np.meshgrid(np.arange(lo[0], hi[0] + 1), np.arange(lo[1], hi[1] + 1), indexing="ij")
    edges_int = _edges(ints)
    inside, on_bnd = _classify_polygon(edges_int, i, j)
    mask = inside & ~on_bnd
    dom = _finish(shape, h, dims, tuple(lo * h), mask, exact_boundary=True)
    ring_multi = np.stack(np.unravel_index(dom.ring, dims), axis=-1) + lo
    _, ring_on = _classify_polygon(edges_int, ring_multi[:, 0], ring_multi[:, 1])
    if not ring_on.all():
        raise AssertionError("ring node off the boundary of a lattice-aligned polygon")
    return dom


def shape_from_spec(spec: dict) -> Shape:
    """Build a shape from a JSON-style dict ``{"kind": ..., params...}``."""
    if not isinstance(spec, dict):
        raise InvalidShape("shape must be a JSON object with a 'kind' key")
    if "kind" not in spec:
        raise InvalidShape("shape is missing key 'kind'")
    kind = spec["kind"]
    required = {
        "rectangle": ("width", "height"),
        "lshape": ("outer", "notch"),
        "rectilinear_polygon": ("vertices",),
        "polygon": ("vertices",),
        "disk": ("radius",),
        "box": ("sides",),
    }
    if kind not in required:
        raise InvalidShape(f"shape key 'kind' has unknown value {kind!r}")
    for key in required[kind]:
        if key not in spec:
            raise InvalidShape(f"shape of kind {kind!r} is missing key {key!r}")
    allowed = set(required[kind]) | {"kind", "origin", "center"}
    extra = sorted(set(spec) - allowed)
    if extra:
        raise InvalidShape(f"shape has unexpected key {extra[0]!r}")
    if kind == "rectangle":
        return Rectangle(spec["width"], spec["height"], tuple(spec.get("origin", (0.0, 0.0))))
    if kind == "lshape":
        return LShape(spec["outer"], spec["notch"])
    if kind in ("rectilinear_polygon", "polygon"):
        return RectilinearPolygon(tuple(map(tuple, spec["vertices"])))
    if kind == "disk":
        return Disk(spec["radius"], tuple(spec.get("center", (0.0, 0.0))))
    return Box(tuple(spec["sides"]), tuple(spec.get("origin", (0.0, 0.0, 0.0))))


def shape_to_spec(shape: Shape) -> dict:
    if isinstance(shape, Rectangle):
        return {"kind": "rectangle", "width": shape.width, "height": shape.height, "origin": list(shape.origin)}
    if isinstance(shape, LShape):
        return {"kind": "lshape", "outer": shape.outer, "notch": shape.notch}
    if isinstance(shape, RectilinearPolygon):
        return {"kind": "rectilinear_polygon", "vertices": [list(v) for v in shape.vertices]}
    if isinstance(shape, Disk):
        return {"kind": "disk", "radius": shape.radius, "center": list(shape.center)}
    return {"kind": "box", "sides": list(shape.sides), "origin": list(shape.origin)}


def shape_center(shape: Shape) -> np.ndarray:
    if isinstance(shape, Disk):
        return np.asarray(shape.center)
    if isinstance(shape, Box):
        return np.asarray(shape.origin) + 0.5 * np.asarray(shape.sides)
    v = np.asarray(shape.polygon().vertices)
    return 0.5 * (v.min(axis=0) + v.max(axis=0))
