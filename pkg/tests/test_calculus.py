import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import admissible_cases, points
from dlh import calculus as C
from dlh.errors import DegeneratePoint, NonPositiveEpsilon, NotGrushin
from dlh.params import HardyParams
from dlh.system import classical, dilate, grushin


class TestGradLambda:
    def test_first_block_square(self, g31, rng):
        f = C.ScalarField(lambda x: np.sum(x[..., :3] ** 2, axis=-1))
        x = rng.standard_normal((20, 4))
        expect = np.concatenate([2 * x[:, :3], np.zeros((20, 1))], axis=1)
        assert np.allclose(C.grad_lambda(f, g31, x), expect, atol=1e-8)

    def test_second_block_square(self, g31, rng):
        f = C.ScalarField(lambda x: x[..., 3] ** 2, gradient=lambda x: np.concatenate([np.zeros(x.shape[:-1] + (3,)), 2 * x[..., 3:]], -1))
        x = rng.standard_normal((20, 4))
        g = C.grad_lambda(f, g31, x)
        r1 = np.linalg.norm(x[:, :3], axis=1)
        assert np.allclose(g[:, 3], 2 * r1 * x[:, 3])
        assert np.allclose(np.linalg.norm(g, axis=1), 2 * r1 * np.abs(x[:, 3]))

    def test_constant(self, prod3, rng):
        f = C.ScalarField(lambda x: np.full(x.shape[:-1], 3.0))
        assert np.allclose(C.grad_lambda(f, prod3, rng.standard_normal((5, 3))), 0)


class TestDivLambda:
    def test_identity_classical(self, rng):
        h = C.BlockVectorField(lambda x: x)
        assert np.allclose(C.div_lambda(h, classical(4), rng.standard_normal((10, 4))), 4)

    def test_constant(self, prod3, rng):
        h = C.BlockVectorField(lambda x: np.ones_like(x))
        assert np.allclose(C.div_lambda(h, prod3, rng.standard_normal((10, 3))), 0, atol=1e-9)

    def test_identity_field(self, prod3):
        x = points(1, prod3, 50)
        h = C.identity_field(prod3, 2.0)
        assert np.allclose(C.div_lambda_fd(h, prod3, x), C.div_lambda(h, prod3, x), rtol=1e-7)

    def test_product_rule(self, prod3):
        # div_λ(f h) = ∇_λ f · (h/λ) + f div_λ h, with h/λ the field divided blockwise by λ
        x = points(2, prod3, 100)
        f = C.ScalarField(lambda y: np.sin(y[..., 0]) + y[..., 1] * y[..., 2] ** 2)
        h = C.BlockVectorField(lambda y: np.stack([y[..., 1], np.cos(y[..., 2]), y[..., 0] * y[..., 1]], -1))
        fh = C.BlockVectorField(lambda y: f(y)[..., None] * h(y))
        lhs = C.div_lambda_fd(fh, prod3, x)
        rhs = np.sum(C.grad_lambda(f, prod3, x) * h(x), -1) + f(x) * C.div_lambda_fd(h, prod3, x)
        assert np.allclose(lhs, rhs, rtol=1e-6, atol=1e-8)


class TestHEps:
    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_classical_reduction(self, p, rng):
        sys = classical(3)
        x = rng.standard_normal((50, 3))
        eps = 1e-2
        expect = x / ((np.sum(x * x, -1) + eps) ** (p / 2))[:, None]
        got = C.h_eps_semi(sys, HardyParams(p=p, s=p), eps, x)
        # [[x]]_ε = |x| for k = 1, so the classical field appears once ε is moved inside
        ref = x / (np.linalg.norm(x, axis=1) ** p)[:, None]
        assert np.allclose(got, ref, rtol=1e-12)
        unw = C.unweighted_field(sys, p, eps)(x)
        assert np.allclose(unw, expect, rtol=1e-12)

    def test_magnitude_identity(self):
        for i, (sys, params) in enumerate(admissible_cases(3, 12)):
            x = points(10 + i, sys, 1000)
            for eps in (1e-1, 1e-4):
                v = C.h_eps_dist(sys, params, eps, x)
                assert np.allclose(np.linalg.norm(v, axis=1), C.h_eps_magnitude(sys, params, eps, x), rtol=1e-10, atol=0)

    def test_zero_at_origin(self, prod3):
        params = HardyParams(p=2, s=0.5, mu=(1, 1, 1))
        assert np.all(C.h_eps_semi(prod3, params, 1e-3, np.zeros(3)) == 0)

    def test_t_zero_reduces(self, prod3):
        x = points(4, prod3, 100)
        semi = HardyParams(p=2, s=1, mu=(1, 0, 1))
        dist = HardyParams(p=2, s=1, t=0, mu=(1, 0, 1), variant="dist")
        assert np.array_equal(C.h_eps_dist(prod3, dist, 1e-2, x), C.h_eps_semi(prod3, semi, 1e-2, x))
        assert np.all(C.eta_eps(prod3, dist, 1e-2, x) == 0)

    def test_rejects_eps(self, g31):
        with pytest.raises(NonPositiveEpsilon):
            C.h_eps_semi(g31, HardyParams(p=2, s=1), -1e-3, [1, 0, 0, 0])
        with pytest.raises(NonPositiveEpsilon):
            C.c_eps(g31, HardyParams(p=2, s=1), 0.0, [1, 0, 0, 0])

    @pytest.mark.parametrize("params", [HardyParams(p=2, s=1, mu=(0.5, 1)), HardyParams(p=3, s=0.5, t=0.7, mu=(1, 0), variant="dist")])
    def test_eps_zero_is_limit(self, g31, params):
        x = points(15, g31, 500)
        exact = C.h_eps_dist(g31, params, 0.0, x)
        assert np.allclose(C.h_eps_dist(g31, params, 1e-13, x), exact, rtol=1e-9)

    def test_eps_zero_degenerate(self, g31):
        with pytest.raises(DegeneratePoint):
            C.h_eps_semi(g31, HardyParams(p=2, s=1), 0.0, [0, 0, 0, 1.0])
        assert np.all(np.isfinite(C.h_eps_semi(g31, HardyParams(p=2, s=1), 1e-3, [0, 0, 0, 1.0])))

    def test_negative_mu_at_zero_block(self, g31):
        with pytest.raises(DegeneratePoint):
            C.h_eps_semi(g31, HardyParams(p=2, s=0, mu=(0, -0.5)), 1e-2, [1, 0, 0, 0])


class TestCEta:
    def test_bounds(self):
        for i, (sys, params) in enumerate(admissible_cases(5, 15)):
            x = points(20 + i, sys, 1000)
            mu = params.mu_for(sys.k)
            t = params.effective_t()
            for eps in (1.0, 1e-2, 1e-6):
                c = C.c_eps(sys, params, eps, x)
                eta = C.eta_eps(sys, params, eps, x)
                assert np.all(c >= sys.dims[0] + mu[0] - params.s - 1e-12)
                # the upper bound uses s ≥ 0; for s < 0 the Euler fraction (at most 1) adds |s|
                upper = np.sum(np.asarray(sys.dims) * sys.sigma + sys.sigma * mu) + max(-params.s, 0.0)
                assert np.all(c <= upper + 1e-12)
                assert np.all(eta >= 0) and np.all(eta <= t + 1e-12)
                assert np.all(c - eta >= sys.dims[0] + mu[0] - params.s - t - 1e-12)

    def test_eta_bounds_grushin(self, g31):
        params = HardyParams(p=2, s=0, t=2, variant="dist")
        x = points(6, g31, 1000) * np.random.default_rng(1).uniform(0.01, 10, (1000, 1))
        eta = C.eta_eps(g31, params, 1e-3, x)
        assert np.all((eta >= 0) & (eta <= 2))

    def test_limits(self):
        for i, (sys, params) in enumerate(admissible_cases(7, 10)):
            x = points(30 + i, sys, 200)
            mu = params.mu_for(sys.k)
            limit_c = sys.Q - params.s + np.dot(sys.sigma, mu)
            if params.effective_t() == 0:
                assert np.max(np.abs(C.c_eps(sys, params, 1e-12, x) - limit_c)) < 1e-6
            gap = C.c_eps(sys, params, 1e-12, x) - C.eta_eps(sys, params, 1e-12, x)
            assert np.max(np.abs(gap - (limit_c - params.effective_t()))) < 1e-6

    def test_divergence_closed_form_vs_fd(self):
        for i, (sys, params) in enumerate(admissible_cases(8, 10)):
            x = points(40 + i, sys, 200)
            for eps in (1e-1, 1e-3):
                h = C.proof_field(sys, params, eps)
                exact = C.divergence_h_eps(sys, params, eps, x)
                fd = C.div_lambda_fd(h, sys, x, order=4)
                assert np.allclose(fd, exact, rtol=1e-5, atol=0)

    def test_divergence_positive(self):
        for i, (sys, params) in enumerate(admissible_cases(9, 8)):
            x = points(50 + i, sys, 10_000) * np.random.default_rng(i).uniform(1e-3, 1e3, (10_000, 1))
            assert np.all(C.divergence_h_eps(sys, params, 1e-3, x) > 0)

    def test_unweighted_divergence(self, g31):
        x = points(11, g31, 200)
        h = C.unweighted_field(g31, 2.0, 1e-2)
        assert np.allclose(C.div_lambda_fd(h, g31, x, order=4), C.div_lambda(h, g31, x), rtol=1e-6)


class TestAppendixPhi:
    def test_identity(self, g31):
        x = points(12, g31, 1000)
        phi = C.appendix_phi(g31, x)
        div = C.div_lambda_fd(C.BlockVectorField(lambda y: C.appendix_phi(g31, y)), g31, x, order=4)
        target = -((g31.Q - 2) / 2) ** 2 * C.grushin_weight(g31, x)
        res = np.sum(phi * phi, -1) + div - target
        assert np.max(np.abs(res / target)) < 1e-8
        assert np.allclose(div, C.appendix_phi_divergence(g31, x), rtol=1e-8)

    def test_alpha_zero(self):
        sys = grushin(0.0, (2, 2))
        x = points(13, sys, 100)
        n = sys.N
        r2 = np.sum(x * x, -1)
        assert np.allclose(C.appendix_phi(sys, x), -(n - 2) / 2 * x / r2[:, None], rtol=1e-12)
        assert np.allclose(C.appendix_phi_divergence(sys, x), -((n - 2) ** 2) / 2 / r2, rtol=1e-12)

    @given(st.floats(0.05, 20))
    def test_degree(self, r):
        # weight of degree −2 times (x, (1+α)y/|x|^α) of degree one
        sys = grushin(1.5, (2, 1))
        x = points(14, sys, 20)
        a = np.linalg.norm(C.appendix_phi(sys, dilate(sys, r, x)), axis=1)
        b = np.linalg.norm(C.appendix_phi(sys, x), axis=1)
        assert np.allclose(a, b / r, rtol=1e-10)

    def test_requires_grushin(self, prod3):
        with pytest.raises(NotGrushin):
            C.appendix_phi(prod3, [1, 1, 1])

    def test_degenerate(self, g31):
        with pytest.raises(DegeneratePoint):
            C.appendix_phi(g31, [0, 0, 0, 1.0])
