"""Assembly, elastic solves and field post-processing."""

import numpy as np
import pytest

from mfplast import driver, elastic, linsys
from mfplast.approx import BasisConfig, build_weight_store
from mfplast.geometry import QuarterAnnulus, Rectangle
from mfplast.material import ElasticConstants, HardeningCurve, MaterialModel
from mfplast.nodegen import fill
from mfplast import verify

EC = ElasticConstants(210.0, 0.3)
MAT = MaterialModel(EC, HardeningCurve.perfect(0.24))


@pytest.fixture(scope="module")
def square():
    ns = fill(Rectangle(0, 0, 1, 1), 0.1, 3)
    return ns, build_weight_store(ns, BasisConfig())


@pytest.fixture(scope="module")
def cylinder():
    ns = fill(QuarterAnnulus(100.0, 200.0), 5.0, 1)
    return ns, build_weight_store(ns, BasisConfig())


def all_essential(ns, ux, uy):
    nb = ns.boundary_count
    return elastic.BoundaryConditionSet(
        np.full(nb, elastic.ESSENTIAL, dtype=np.uint8),
        np.full(nb, elastic.ESSENTIAL, dtype=np.uint8),
        ux(ns.positions[:nb]), uy(ns.positions[:nb]),
    )


class TestConstitutive:
    def test_uniaxial_strain_stress(self):
        eps = np.array([0.001, 0.0, 0.0, 0.0])
        sig = elastic.stress_from_elastic_strain(EC, eps)
        assert sig[0] == pytest.approx(0.282692, abs=1e-6)
        assert sig[1] == pytest.approx(0.121154, abs=1e-6)
        assert sig[2] == pytest.approx(0.121154, abs=1e-6)
        assert sig[3] == 0.0

    def test_pure_shear(self):
        eps = np.array([0.0, 0.0, 0.0, 0.001])
        sig = elastic.stress_from_elastic_strain(EC, eps)
        assert sig[3] == pytest.approx(0.161538, abs=1e-6)
        np.testing.assert_allclose(sig[:3], 0.0, atol=1e-15)

    def test_zero_strain(self):
        np.testing.assert_array_equal(
            elastic.stress_from_elastic_strain(EC, np.zeros(4)), np.zeros(4)
        )

    def test_inverse_roundtrip(self):
        rng = np.random.default_rng(12)
        sig = rng.normal(0, 0.3, size=(200, 4))
        eps = elastic.elastic_strain_from_stress(EC, sig)
        back = elastic.stress_from_elastic_strain(EC, eps)
        np.testing.assert_allclose(back, sig, rtol=1e-12, atol=1e-15)


class TestStrainFromDisplacement:
    def test_constant_displacement(self, cylinder):
        ns, wts = cylinder
        du = np.tile([0.3, -0.7], (ns.n, 1))
        eps = elastic.strain_from_displacement(wts, du)
        assert np.abs(eps).max() <= 1e-10

    def test_linear_field_exact(self, cylinder):
        ns, wts = cylinder
        a = 1.7e-3
        du = np.stack([a * ns.positions[:, 0], np.zeros(ns.n)], axis=1)
        eps = elastic.strain_from_displacement(wts, du)
        np.testing.assert_allclose(eps[:, 0], a, atol=1e-8 * a + 1e-12)
        assert np.abs(eps[:, 1]).max() <= 1e-10
        assert np.abs(eps[:, 3]).max() <= 1e-10

    def test_rigid_rotation_strain_free(self, cylinder):
        ns, wts = cylinder
        w = 2.5e-4
        du = np.stack([-w * ns.positions[:, 1], w * ns.positions[:, 0]], axis=1)
        eps = elastic.strain_from_displacement(wts, du)
        assert np.abs(eps).max() <= 1e-8

    def test_zz_always_zero(self, cylinder):
        ns, wts = cylinder
        rng = np.random.default_rng(0)
        eps = elastic.strain_from_displacement(wts, rng.normal(size=(ns.n, 2)))
        assert np.all(eps[:, 2] == 0.0)


class TestAssemble:
    def test_interior_row_nonzero_count(self, cylinder):
        ns, wts = cylinder
        bcs = elastic.boundary_conditions_from_tags(ns, 0.05)
        sys_ = elastic.assemble(ns, wts, EC, bcs)
        csr = sys_.matrix.tocsr()
        counts = np.diff(csr.indptr)
        interior = np.arange(ns.boundary_count, ns.n)
        assert np.all(counts[interior] == 40)  # 2n for n = 20
        assert np.all(counts[ns.n + interior] == 40)

    def test_essential_rows_are_identity(self, square):
        ns, wts = square
        bcs = all_essential(ns, lambda p: 0.001 * p[:, 0], lambda p: -0.0003 * p[:, 1])
        sys_ = elastic.assemble(ns, wts, EC, bcs)
        csr = sys_.matrix.tocsr()
        for i in range(ns.boundary_count):
            row = csr.getrow(i)
            assert row.nnz == 1 and row[0, i] == 1.0

    def test_constant_field_annihilated_on_interior_rows(self, cylinder):
        ns, wts = cylinder
        bcs = elastic.boundary_conditions_from_tags(ns, 0.05)
        sys_ = elastic.assemble(ns, wts, EC, bcs)
        x = np.concatenate([np.ones(ns.n), np.ones(ns.n)])
        out = sys_.matrix @ x
        nb = ns.boundary_count
        assert np.abs(out[nb:ns.n]).max() <= 1e-8
        assert np.abs(out[ns.n + nb:]).max() <= 1e-8

    def test_validate_passes(self, cylinder):
        ns, wts = cylinder
        bcs = elastic.boundary_conditions_from_tags(ns, 0.05)
        elastic.assemble(ns, wts, EC, bcs).validate()

    def test_bc_count_mismatch(self, cylinder):
        ns, wts = cylinder
        bad = elastic.BoundaryConditionSet(
            np.zeros(3, dtype=np.uint8), np.zeros(3, dtype=np.uint8),
            np.zeros(3), np.zeros(3),
        )
        with pytest.raises(elastic.AssemblyError):
            elastic.assemble(ns, wts, EC, bad)


class TestSolve:
    def test_zero_load_zero_displacement(self, cylinder):
        ns, wts = cylinder
        bcs = elastic.boundary_conditions_from_tags(ns, 0.0)
        rep = driver.run(ns, wts, MAT, bcs, driver.LoadProgram(0.0, 1),
                         driver.SolverConfig())
        assert np.abs(rep.u).max() <= 1e-12

    def test_patch_linear_essential(self, square):
        ns, wts = square
        bcs = all_essential(ns, lambda p: 0.001 * p[:, 0], lambda p: -0.0003 * p[:, 1])
        rep = driver.run(ns, wts, MAT, bcs, driver.LoadProgram(0.0, 1),
                         driver.SolverConfig())
        exact = np.stack(
            [0.001 * ns.positions[:, 0], -0.0003 * ns.positions[:, 1]], axis=1
        )
        assert np.abs(rep.u - exact).max() <= 1e-8

    def test_uniaxial_traction_patch(self, square):
        ns, wts = square
        lam, mu = EC.lam, EC.mu
        s = 0.05
        alpha = s * (lam + 2 * mu) / ((lam + 2 * mu) ** 2 - lam**2)
        beta = -lam * alpha / (lam + 2 * mu)
        nb = ns.boundary_count
        mode_x = np.full(nb, elastic.TRACTION, dtype=np.uint8)
        mode_y = np.full(nb, elastic.TRACTION, dtype=np.uint8)
        vx, vy = np.zeros(nb), np.zeros(nb)
        for i in range(nb):
            tag = ns.tags[i]
            if tag == "left":
                mode_x[i] = elastic.ESSENTIAL
            if tag == "bottom":
                mode_y[i] = elastic.ESSENTIAL
            if tag == "right":
                vx[i] = s
        bcs = elastic.BoundaryConditionSet(mode_x, mode_y, vx, vy)
        rep = driver.run(ns, wts, MAT, bcs, driver.LoadProgram(s, 1),
                         driver.SolverConfig())
        exact = np.stack(
            [alpha * ns.positions[:, 0], beta * ns.positions[:, 1]], axis=1
        )
        assert np.abs(rep.u - exact).max() <= 1e-8

    def test_elastic_cylinder_accuracy(self, cylinder):
        ns, wts = cylinder
        p = 0.05
        bcs = elastic.boundary_conditions_from_tags(ns, p)
        rep = driver.run(ns, wts, MAT, bcs, driver.LoadProgram(p, 1),
                         driver.SolverConfig())
        r = np.hypot(ns.positions[:, 0], ns.positions[:, 1])
        _, _, _, u_ref = verify.elastic_reference(r, p, 100.0, 200.0, EC.E, EC.nu)
        ref = u_ref[:, None] * ns.positions / r[:, None]
        rel = np.hypot(*(rep.u - ref).T) / u_ref
        assert rel.max() <= 0.05  # coarse h = 5 mm sanity bound

    def test_linear_residual_small(self, cylinder):
        ns, wts = cylinder
        bcs = elastic.boundary_conditions_from_tags(ns, 0.05)
        sys_ = elastic.assemble(ns, wts, EC, bcs)
        linsys.factorize(sys_)
        traction = np.stack([bcs.value_x, bcs.value_y], axis=1)
        rhs = elastic.build_rhs(ns, bcs, np.zeros((ns.n, 2)), traction,
                                np.zeros((ns.boundary_count, 2)))
        x = linsys.solve(sys_, rhs)
        res = np.abs(sys_.matrix @ x - rhs).max() / np.abs(rhs).max()
        assert res <= 1e-9


def test_export_fields_csv(tmp_path, cylinder):
    ns, wts = cylinder
    u = np.zeros((ns.n, 2))
    sigma = np.zeros((ns.n, 4))
    epbar = np.zeros(ns.n)
    path = tmp_path / "fields.csv"
    elastic.export_fields_csv(path, ns, u, sigma, epbar)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("x_mm,y_mm,is_boundary,u_mm,v_mm,sigma_xx_gpa")
    assert len(lines) == ns.n + 1
