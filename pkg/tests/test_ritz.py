import numpy as np
import pytest

from einsvd.einstein import SplitTensor, diagonal_tensor, exact_einstein_svd
from einsvd.errors import PreconditionError
from einsvd.lanczos import LanczosFactorization, aelb, elb, lift_triplets, random_start, res_norm
from einsvd.linalg import svd
from einsvd.ritz import RestartConfig, build_augmented, extend_to_m, lbr

from conftest import seeded
from test_lanczos import factorization_residuals


def _augmented(a, m, k, seed=0):
    f = elb(a, random_start(a.col_shape, seed), m)
    trip = lift_triplets(f, svd(f.b), k)
    return f, trip, build_augmented(a, f, trip)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(m=4, k=4), dict(m=4, k=0), dict(m=5, k=2, epsilon=0),
                                    dict(m=5, k=2, max_restarts=0), dict(m=5, k=2, target="middle")])
    def test_invalid(self, kw):
        with pytest.raises(PreconditionError):
            RestartConfig(**kw)


class TestAugmented:
    def test_relations_k1(self):
        a = seeded((10, 8, 10, 8), 1)
        f, trip, aug = _augmented(a, 5, 1, seed=1)
        res = factorization_residuals(a, aug)
        tol = 1e-12 * max(1.0, a.norm())
        assert all(v <= tol for v in res.values()), res

    def test_layout(self):
        a = seeded((10, 8, 10, 8), 2)
        f, trip, aug = _augmented(a, 6, 3, seed=2)
        assert aug.m == 4
        np.testing.assert_array_equal(np.diag(aug.b)[:3], [t.value for t in trip])
        # spike: rho_i = beta_m u_i(m) up to the sign of u_i
        u = svd(f.b).u
        np.testing.assert_allclose(np.abs(aug.b[:3, 3]), f.beta_m * np.abs(u[-1, :3]), atol=1e-12)
        np.testing.assert_allclose(np.abs(aug.b[:3, 3]), [t.residual_estimate for t in trip], atol=1e-12)
        off = aug.b.copy()
        off[np.arange(4), np.arange(4)] = 0
        off[:3, 3] = 0
        assert not off.any()
        # corner equals alpha of A P_{m+1} against the Ritz left tensors
        np.testing.assert_allclose(aug.p_basis[:, 3], f.residual.ravel(order="F") / f.beta_m, atol=1e-15)
        q = aug.q_basis
        assert np.max(np.abs(q.T @ q - np.eye(4))) <= 1e-12

    def test_converged_directions_give_block_diagonal(self):
        a = seeded((6, 5), 3)
        dec = exact_einstein_svd(a)
        trip = dec.triplets(2)
        # residual direction orthogonal to the kept right tensors
        r = dec.right(4)
        f = LanczosFactorization(
            p_basis=np.column_stack([t.right for t in trip]), q_basis=np.column_stack([t.left for t in trip]),
            b=np.diag([t.value for t in trip]), residual=0.5 * r, beta_m=0.5,
            row_shape=a.row_shape, col_shape=a.col_shape)
        aug = build_augmented(a, f, trip)
        assert np.max(np.abs(aug.b[:2, 2])) <= 1e-12
        assert abs(aug.b[2, 2] - dec.s[3]) <= 1e-12

    def test_vanishing_beta_signals_convergence(self):
        a = diagonal_tensor([3, 1], (2,), (2,))
        f = elb(a, np.array([1.0, 0.0]), 2)
        assert build_augmented(a, f, lift_triplets(f, svd(f.b), 1)) is None


class TestExtension:
    def test_relations_and_structure(self):
        a = seeded((10, 8, 10, 8), 4)
        f, trip, aug = _augmented(a, 5, 2, seed=4)
        g = extend_to_m(a, aug, 5)
        assert g.m == 5
        res = factorization_residuals(a, g)
        assert all(v <= 1e-12 * a.norm() for v in res.values()), res
        allowed = np.zeros((5, 5), bool)
        allowed[np.arange(5), np.arange(5)] = True
        allowed[:2, 2] = True
        allowed[np.arange(2, 4), np.arange(3, 5)] = True
        assert not g.b[~allowed].any()

    def test_residual_direction_orthogonal(self):
        a = seeded((10, 8, 10, 8), 5)
        _, _, aug = _augmented(a, 6, 3, seed=5)
        g = extend_to_m(a, aug, 6)
        p_next = g.residual.ravel(order="F") / g.beta_m
        assert np.max(np.abs(g.p_basis.T @ p_next)) <= 1e-12


class TestLbr:
    def test_diagonal_converges_in_one_cycle(self):
        a = diagonal_tensor([4, 3, 2, 1], (4,), (4,))
        trip, rep = lbr(a, RestartConfig(m=4, k=2, seed=1))
        assert rep.converged and rep.iterations == 1
        np.testing.assert_allclose([t.value for t in trip], [4, 3], atol=1e-13)

    def test_diagonal_partial_space_converges(self):
        a = diagonal_tensor([5, 4, 3, 2, 1], (5,), (5,))
        trip, rep = lbr(a, RestartConfig(m=4, k=2, seed=1))
        assert rep.converged
        np.testing.assert_allclose([t.value for t in trip], [5, 4], atol=1e-10)

    def test_exact_when_m_is_full(self):
        a = diagonal_tensor([3, 1], (2,), (2,))
        trip, rep = lbr(a, RestartConfig(m=2, k=1))
        assert rep.converged and rep.iterations == 1
        assert abs(trip[0].value - 3) <= 1e-14

    def test_first_cycle_matches_aelb(self):
        a = seeded((6, 5, 6, 5), 6)
        trip, rep = lbr(a, RestartConfig(m=8, k=3, max_restarts=1, seed=6))
        ref = aelb(a, 8, 3, seed=6)
        assert rep.iterations == 1
        np.testing.assert_array_equal([t.value for t in trip], [t.value for t in ref])

    def test_largest_matches_oracle_and_m_trend(self):
        a = seeded((20, 10, 20, 10), 1)
        s = exact_einstein_svd(a, full_matrices=False).s
        trip15, rep15 = lbr(a, RestartConfig(m=15, k=4, seed=1))
        trip5, rep5 = lbr(a, RestartConfig(m=5, k=4, seed=1))
        assert rep15.converged and rep5.converged
        for trip in (trip15, trip5):
            assert np.max(np.abs(np.array([t.value for t in trip]) - s[:4])) <= 1e-8 * s[0]
            assert all(res_norm(a, t) <= 1e-12 * a.norm() for t in trip)
        assert rep15.iterations < rep5.iterations
        assert rep15.gres_norm <= 1e-10
        assert len(rep15.history) == rep15.iterations

    def test_smallest_small_tensor(self):
        a = seeded((4, 3, 4, 3), 2)
        s = exact_einstein_svd(a).s
        trip, rep = lbr(a, RestartConfig(m=8, k=2, target="smallest", seed=2))
        assert rep.converged
        np.testing.assert_allclose([t.value for t in trip], s[-2:], rtol=1e-6)

    def test_smallest_on_wide_tensor_uses_transpose(self):
        a = SplitTensor(seeded((4, 9), 3).data, 1)
        s = exact_einstein_svd(a).s
        trip, rep = lbr(a, RestartConfig(m=4, k=2, target="smallest", seed=3))
        assert rep.converged
        np.testing.assert_allclose([t.value for t in trip], s[-2:], rtol=1e-6)
        assert trip[0].left.shape == (4,) and trip[0].right.shape == (9,)
        assert all(res_norm(a, t) <= 1e-10 for t in trip)

    def test_unconverged_report(self):
        a = seeded((20, 10, 20, 10), 1)
        trip, rep = lbr(a, RestartConfig(m=5, k=4, max_restarts=3, seed=1))
        assert not rep.converged and rep.iterations == 3
        assert len(trip) == 4

    def test_deterministic(self):
        a = seeded((8, 6, 8, 6), 7)
        cfg = RestartConfig(m=8, k=3, seed=4)
        t1, _ = lbr(a, cfg)
        t2, _ = lbr(a, cfg)
        for x, y in zip(t1, t2):
            assert x.value == y.value
            np.testing.assert_array_equal(x.left, y.left)

    def test_m_too_large(self):
        with pytest.raises(PreconditionError):
            lbr(seeded((3, 3), 0), RestartConfig(m=4, k=1))
