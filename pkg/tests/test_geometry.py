from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from krein_spectra.errors import EmptyInterior, IncompatibleSpacing, InvalidShape
from krein_spectra.geometry import (
    Box,
    Disk,
    LShape,
    Rectangle,
    RectilinearPolygon,
    measure,
    rasterize,
    shape_from_spec,
    shape_to_spec,
    unit_ball_volume,
)


def brute_force_ring(domain):
    """Lattice nodes adjacent to an interior node, found by walking multi-indices."""
    mask = np.zeros(domain.dims, dtype=bool)
    mask.flat[domain.interior] = True
    found = set()
    for flat in domain.interior:
        idx = np.unravel_index(flat, domain.dims)
        for axis in range(domain.ndim):
            for step in (-1, 1):
                nb = list(idx)
                nb[axis] += step
                if not mask[tuple(nb)]:
                    found.add(int(np.ravel_multi_index(nb, domain.dims)))
    return sorted(found)


def test_square_counts():
    d = rasterize(Rectangle(1, 1), 0.5)
    assert (d.n_int, d.n_ring) == (1, 4)
    d = rasterize(Rectangle(1, 1), 0.25)
    assert (d.n_int, d.n_ring) == (9, 12)


def test_lshape_counts():
    d = rasterize(LShape(1, 0.5), 0.25)
    assert d.n_int == 5
    assert d.n_ring == 11


def test_corners_not_in_ring(square_quarter):
    pts = square_quarter.coords(square_quarter.ring)
    corners = {(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)}
    assert not corners & {tuple(p) for p in pts.tolist()}


def test_measure_examples():
    assert measure(Rectangle(1, 1)) == 1.0
    assert measure(LShape(1, 0.5)) == pytest.approx(0.75, abs=1e-15)
    assert measure(Disk(1.0)) == pytest.approx(math.pi, abs=1e-15)
    assert measure(Box((1, 2, 0.5))) == pytest.approx(1.0)


def test_unit_ball_volume():
    assert unit_ball_volume(1) == 2.0
    assert unit_ball_volume(2) == pytest.approx(math.pi, rel=1e-15)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3, rel=1e-15)
    for n in range(1, 9):
        assert unit_ball_volume(n) == pytest.approx(math.pi ** (n / 2) / math.gamma(n / 2 + 1), rel=1e-14)
    with pytest.raises(ValueError):
        unit_ball_volume(0)


@pytest.mark.parametrize("shape,h", [
    (Rectangle(1, 1), 0.25),
    (Rectangle(2, 1, (0.5, -1.0)), 0.125),
    (LShape(1, 0.5), 0.125),
    (Disk(1.0), 0.1),
    (RectilinearPolygon(((0, 0), (3, 0), (3, 1), (1, 1), (1, 3), (0, 3))), 0.25),
])
def test_ring_matches_brute_force(shape, h):
    d = rasterize(shape, h)
    assert list(d.ring) == brute_force_ring(d)
    assert not set(d.ring) & set(d.interior)
    assert np.all(d.ring_degree() >= 1)


def test_maps_are_bijections(lshape_eighth):
    d = lshape_eighth
    assert np.array_equal(d.interior_map[d.interior], np.arange(d.n_int))
    assert np.array_equal(d.ring_map[d.ring], np.arange(d.n_ring))
    assert np.count_nonzero(d.interior_map >= 0) == d.n_int


def test_exact_boundary_ring_on_boundary(lshape_eighth):
    d = lshape_eighth
    assert d.exact_boundary
    pts = d.coords(d.ring)
    assert d.shape.polygon().on_boundary(pts, atol=1e-14).all()


def test_disk_is_not_exact():
    d = rasterize(Disk(1.0), 1 / 8)
    assert not d.exact_boundary
    assert np.all(np.linalg.norm(d.coords(d.interior), axis=1) < 1.0)


def test_box_counts():
    d = rasterize(Box((1, 1, 1)), 0.25)
    assert d.ndim == 3
    assert d.n_int == 27
    assert d.n_ring == 6 * 9


def test_errors():
    with pytest.raises(IncompatibleSpacing):
        rasterize(Rectangle(1, 1), 0.3)
    with pytest.raises(EmptyInterior):
        rasterize(Rectangle(0.5, 0.5), 0.5)
    with pytest.raises(InvalidShape):
        Rectangle(-1, 1)
    with pytest.raises(InvalidShape):
        LShape(1, 1)
    with pytest.raises(InvalidShape):
        RectilinearPolygon(((0, 0), (1, 1), (0, 1)))
    with pytest.raises(InvalidShape):
        shape_from_spec({"kind": "rectangle", "width": 1})


def test_spec_round_trip():
    for s in (Rectangle(1, 2, (0.5, 0.0)), LShape(2, 0.5), Disk(1.5, (0.1, 0.2)), Box((1, 2, 3))):
        assert shape_from_spec(shape_to_spec(s)) == s


@pytest.mark.parametrize("shape", [Rectangle(1, 1), LShape(1, 0.5), Disk(1.0)])
def test_refinement_counts(shape):
    prev = 0
    for k in range(2, 7):
        h = 2.0**-k
        d = rasterize(shape, h)
        assert d.n_int >= prev
        prev = d.n_int
        assert abs(h * h * d.n_int - shape.measure()) <= 2 * h * shape.perimeter()


@settings(max_examples=25, deadline=None)
@given(w=st.integers(1, 6), v=st.integers(1, 6), k=st.integers(1, 3))
def test_rectangle_counts_property(w, v, k):
    h = 2.0**-k
    if min(w, v) * 0.5 / h < 2:
        with pytest.raises(EmptyInterior):
            rasterize(Rectangle(w * 0.5, v * 0.5), h)
        return
    d = rasterize(Rectangle(w * 0.5, v * 0.5), h)
    nx, ny = round(w * 0.5 / h), round(v * 0.5 / h)
    assert d.n_int == (nx - 1) * (ny - 1)
    assert d.n_ring == 2 * (nx - 1) + 2 * (ny - 1)
    assert list(d.ring) == brute_force_ring(d)
