"""RBF-FD stencil construction and derivative weights."""

import numpy as np
import pytest

from mfplast.approx import (
    OPERATORS,
    ApproxError,
    BasisConfig,
    apply,
    build_stencils,
    build_weight_store,
    compute_weights,
    dump_stencil_csv,
)
from mfplast.geometry import QuarterAnnulus, Rectangle
from mfplast.nodegen import NodeSet, fill


def make_nodeset(pos, h=1.0):
    pos = np.asarray(pos, dtype=float)
    return NodeSet(pos, min(3, len(pos)), np.tile([1.0, 0.0], (min(3, len(pos)), 1)),
                   np.array(["a"] * min(3, len(pos)), dtype="U16"), h, 0)


ANALYTIC = {
    "dx": (1, 0, 1.0), "dy": (0, 1, 1.0),
    "dxx": (2, 0, 2.0), "dyy": (0, 2, 2.0), "dxy": (1, 1, 1.0),
}


class TestBasisConfig:
    def test_defaults(self):
        cfg = BasisConfig()
        assert (cfg.phs_order, cfg.monomial_degree, cfg.stencil_size) == (3, 3, 20)
        assert cfg.n_poly == 10

    def test_stencil_below_poly_count_rejected(self):
        with pytest.raises(ApproxError):
            BasisConfig(3, 3, 9)


class TestBuildStencils:
    def test_single_neighbor_is_self(self):
        ns = fill(Rectangle(0, 0, 1, 1), 0.2, 1)
        st = build_stencils(ns, 1)
        np.testing.assert_array_equal(st[:, 0], np.arange(ns.n))

    def test_five_point_cross_on_grid(self):
        xs, ys = np.meshgrid(np.arange(5.0), np.arange(5.0), indexing="ij")
        ns = make_nodeset(np.stack([xs.ravel(), ys.ravel()], axis=1))
        st = build_stencils(ns, 5)
        assert set(st[12].tolist()) == {12, 7, 11, 13, 17}

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(3)
        ns = make_nodeset(rng.uniform(0, 5, size=(400, 2)))
        st = build_stencils(ns, 20)
        for i in (0, 57, 399):
            d = np.hypot(*(ns.positions - ns.positions[i]).T)
            order = np.lexsort((np.arange(ns.n), d))
            np.testing.assert_array_equal(st[i], order[:20])

    def test_too_large_stencil(self):
        ns = make_nodeset(np.random.default_rng(0).uniform(0, 1, (10, 2)))
        with pytest.raises(ValueError):
            build_stencils(ns, 11)


class TestWeights:
    @pytest.fixture(scope="class")
    def cylinder(self):
        ns = fill(QuarterAnnulus(100.0, 200.0), 6.0, 1)
        return ns, build_weight_store(ns, BasisConfig())

    def test_dx_of_x(self, cylinder):
        ns, store = cylinder
        got = apply(store.dx, store.stencils, ns.positions[:, 0])
        np.testing.assert_allclose(got, 1.0, atol=1e-7)

    def test_laplacian_of_r_squared(self, cylinder):
        ns, store = cylinder
        field = ns.positions[:, 0] ** 2 + ns.positions[:, 1] ** 2
        got = apply(store.dxx, store.stencils, field) + apply(store.dyy, store.stencils, field)
        np.testing.assert_allclose(got, 4.0, atol=1e-6)

    def test_dxy_of_xy(self, cylinder):
        ns, store = cylinder
        field = ns.positions[:, 0] * ns.positions[:, 1]
        got = apply(store.dxy, store.stencils, field)
        np.testing.assert_allclose(got, 1.0, atol=1e-6)

    def test_constants_annihilated(self, cylinder):
        ns, store = cylinder
        ones = np.ones(ns.n)
        for op in OPERATORS:
            got = apply(store.operator(op), store.stencils, ones)
            np.testing.assert_allclose(got, 0.0, atol=1e-8)

    def test_zero_field(self, cylinder):
        ns, store = cylinder
        got = apply(store.dx, store.stencils, np.zeros(ns.n))
        assert np.all(got == 0.0)

    def test_polynomial_reproduction_scaled(self, cylinder):
        """All monomials up to degree m reproduced by all five operators."""
        ns, store = cylinder
        pos = ns.positions
        local = pos[store.stencils] - pos[:, None, :]
        rho = np.sqrt(np.max(np.sum(local**2, axis=-1), axis=1))
        loc = local / rho[:, None, None]
        worst = 0.0
        for i in range(4):
            for j in range(4 - i):
                vals = loc[:, :, 0] ** i * loc[:, :, 1] ** j
                for op, (oi, oj, coef) in ANALYTIC.items():
                    order = 1 if op in ("dx", "dy") else 2
                    target = coef if (i, j) == (oi, oj) else 0.0
                    got = np.einsum("ij,ij->i", store.operator(op), vals) * rho**order
                    worst = max(worst, float(np.max(np.abs(got - target))))
        assert worst <= 1e-6

    def test_translation_invariance(self):
        rng = np.random.default_rng(11)
        pos = rng.uniform(0, 3, size=(60, 2))
        a = build_weight_store(make_nodeset(pos), BasisConfig(stencil_size=15))
        b = build_weight_store(make_nodeset(pos + np.array([500.0, -200.0])),
                               BasisConfig(stencil_size=15))
        np.testing.assert_allclose(a.dx, b.dx, rtol=0, atol=1e-6 * np.abs(a.dx).max())
        np.testing.assert_allclose(a.dxx, b.dxx, rtol=0, atol=1e-6 * np.abs(a.dxx).max())

    def test_smooth_field_accuracy_and_convergence(self):
        b = 200.0
        errs = []
        for h in (8.0, 4.0, 2.0):
            ns = fill(QuarterAnnulus(100.0, b), h, 1)
            store = build_weight_store(ns, BasisConfig())
            x, y = ns.positions[:, 0], ns.positions[:, 1]
            g = np.sin(x / b) * np.cos(y / b)
            gx = np.cos(x / b) * np.cos(y / b) / b
            errs.append(float(np.max(np.abs(apply(store.dx, store.stencils, g) - gx))))
        # monotone decrease allowing factor-2 noise
        assert errs[1] <= 2.0 * errs[0]
        assert errs[2] <= 2.0 * errs[1]
        assert errs[2] < errs[0]

    def test_single_operator_matches_store(self, cylinder):
        ns, store = cylinder
        st = store.stencils
        w = compute_weights(ns, st, BasisConfig(), "dxy")
        np.testing.assert_allclose(w, store.dxy, atol=1e-12)

    def test_unknown_operator(self, cylinder):
        ns, store = cylinder
        with pytest.raises(KeyError):
            compute_weights(ns, store.stencils, BasisConfig(), "dz")

    def test_degenerate_stencil_raises(self):
        # collinear points cannot fit the 2D monomial basis
        pos = np.stack([np.linspace(0, 1, 30), np.zeros(30)], axis=1)
        ns = make_nodeset(pos)
        st = build_stencils(ns, 12)
        with pytest.raises(ApproxError, match="node"):
            compute_weights(ns, st, BasisConfig(3, 2, 12), "dx")

    def test_even_phs_order_branch(self):
        rng = np.random.default_rng(5)
        ns = make_nodeset(rng.uniform(0, 2, size=(80, 2)))
        store = build_weight_store(ns, BasisConfig(phs_order=4, monomial_degree=2,
                                                   stencil_size=14))
        field = ns.positions[:, 0]
        np.testing.assert_allclose(
            apply(store.dx, store.stencils, field), 1.0, atol=1e-6
        )


def test_dump_stencil_csv(tmp_path):
    ns = fill(Rectangle(0, 0, 1, 1), 0.15, 1)
    store = build_weight_store(ns, BasisConfig())
    path = tmp_path / "stencil.csv"
    dump_stencil_csv(ns, store, 0, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("neighbor,")
    assert len(lines) == 21
