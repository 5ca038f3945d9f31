"""Advancing-front fill and nearest-neighbor queries."""

import numpy as np
import pytest
from scipy.spatial.distance import pdist

from mfplast.geometry import QuarterAnnulus, Rectangle
from mfplast.nodegen import MIN_DIST_FACTOR, NodeSet, fill, nearest_neighbors, export_csv


def grid_nodeset(nx, ny, spacing=1.0):
    xs, ys = np.meshgrid(np.arange(nx) * spacing, np.arange(ny) * spacing, indexing="ij")
    pos = np.stack([xs.ravel(), ys.ravel()], axis=1).astype(float)
    return NodeSet(
        positions=pos, boundary_count=3,
        normals=np.tile([1.0, 0.0], (3, 1)), tags=np.array(["a"] * 3, dtype="U16"),
        h=spacing, seed=0,
    )


class TestFill:
    def test_unit_square_density(self):
        ns = fill(Rectangle(0, 0, 1, 1), 0.05, 1)
        # area/h^2 = 400; quasi-uniform fill stays within [0.7, 1.3] of it
        assert 280 <= ns.n <= 520

    def test_min_distance(self):
        ns = fill(Rectangle(0, 0, 1, 1), 0.05, 1)
        assert pdist(ns.positions).min() >= MIN_DIST_FACTOR * 0.05 - 1e-12

    def test_min_distance_annulus(self):
        ns = fill(QuarterAnnulus(100.0, 200.0), 8.0, 3)
        assert pdist(ns.positions).min() >= MIN_DIST_FACTOR * 8.0 - 1e-9

    def test_determinism(self):
        a = fill(Rectangle(0, 0, 1, 1), 0.05, 7)
        b = fill(Rectangle(0, 0, 1, 1), 0.05, 7)
        assert np.array_equal(a.positions, b.positions)
        assert a.boundary_count == b.boundary_count

    def test_seeds_differ(self):
        a = fill(Rectangle(0, 0, 1, 1), 0.05, 1)
        b = fill(Rectangle(0, 0, 1, 1), 0.05, 2)
        assert a.n != b.n or not np.array_equal(a.positions, b.positions)

    def test_interior_points_inside(self):
        dom = QuarterAnnulus(100.0, 200.0)
        ns = fill(dom, 10.0, 1)
        assert np.all(dom.contains(ns.interior))

    def test_fill_distance(self):
        # every probe point (spacing h/4) has a node within 2h
        dom = Rectangle(0, 0, 1, 1)
        h = 0.1
        ns = fill(dom, h, 5)
        xs = np.arange(0, 1 + 1e-9, h / 4)
        probe = np.stack(np.meshgrid(xs, xs, indexing="ij"), axis=-1).reshape(-1, 2)
        probe = probe[dom.contains(probe)]
        from scipy.spatial import cKDTree

        d, _ = cKDTree(ns.positions).query(probe)
        assert d.max() <= 2.0 * h

    def test_positions_write_protected(self):
        ns = fill(Rectangle(0, 0, 1, 1), 0.2, 1)
        with pytest.raises(ValueError):
            ns.positions[0, 0] = 99.0


class TestNearestNeighbors:
    def test_center_of_grid(self):
        ns = grid_nodeset(3, 3)
        center = np.array([1.0, 1.0])
        assert nearest_neighbors(ns, center, 1)[0] == 4

    def test_five_point_cross(self):
        ns = grid_nodeset(5, 5)
        center = np.array([2.0, 2.0])
        got = set(nearest_neighbors(ns, center, 5).tolist())
        # center plus the four edge-adjacent nodes
        assert got == {12, 7, 11, 13, 17}

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(42)
        pos = rng.uniform(0, 10, size=(1000, 2))
        ns = NodeSet(pos, 3, np.tile([1.0, 0.0], (3, 1)),
                     np.array(["a"] * 3, dtype="U16"), 1.0, 0)
        for q in rng.uniform(0, 10, size=(5, 2)):
            d = np.hypot(pos[:, 0] - q[0], pos[:, 1] - q[1])
            order = np.lexsort((np.arange(len(pos)), d))
            expect = order[:20]
            got = nearest_neighbors(ns, q, 20)
            np.testing.assert_array_equal(got, expect)

    def test_k_too_large(self):
        ns = grid_nodeset(3, 3)
        with pytest.raises(ValueError):
            nearest_neighbors(ns, (0.0, 0.0), 10)


def test_export_csv(tmp_path):
    ns = fill(Rectangle(0, 0, 1, 1), 0.25, 1)
    path = tmp_path / "nodes.csv"
    export_csv(ns, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,is_boundary,nx,ny,tag"
    assert len(lines) == ns.n + 1
    assert sum(1 for ln in lines[1:] if ln.split(",")[2] == "1") == ns.boundary_count
