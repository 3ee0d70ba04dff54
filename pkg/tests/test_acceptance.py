"""Acceptance criteria, one test each.

Every test prints a single ``ACCEPT <n> PASS|FAIL ...`` line (shown even
under captured output).  Run alone with ``pytest tests/test_acceptance.py``.
"""
import io
import time

import numpy as np
import pytest

from conftest import admissible_cases, points, systems
from dlh import calculus as C
from dlh import norms
from dlh.cli import run
from dlh.config import load, parse_domain, parse_sampler, parse_testfn
from dlh.hardy import check_conditions
from dlh.integrate import Domain, Verdict, bump, lemma_check, verify_inequality
from dlh.params import HardyParams
from dlh.sharpness import (
    extremal_ansatz,
    extremal_equation_residual,
    fundamental_identity_residual,
    grushin_sharpness_sweep,
    phi_divergence_identity,
)
from dlh.system import build_system, classical, dilate, grushin


@pytest.fixture
def report(capsys, request):
    """Yields a dict; the test fills ``detail`` and the line is printed on exit."""
    rec = {"detail": "", "limit": None}
    start = time.perf_counter()
    yield rec
    elapsed = time.perf_counter() - start
    failed = request.node.rep_call.failed if hasattr(request.node, "rep_call") else True
    over = rec["limit"] is not None and elapsed > rec["limit"]
    status = "FAIL" if failed or over else "PASS"
    name = request.node.name.replace("test_", "", 1)
    with capsys.disabled():
        print(f"\nACCEPT {name} {status} {elapsed:.2f}s (limit {rec['limit']}s) {rec['detail']}")
    assert not over, f"took {elapsed:.1f}s, limit {rec['limit']}s"


# ---------------------------------------------------------------------------


def test_1_structure(report):
    report["limit"] = 1
    for a in (0.5, 1.0, 2.0, 3.0):
        for dims in ((3, 1), (2, 2), (1, 4)):
            g = grushin(a, dims)
            assert list(g.sigma) == [1, a + 1] and g.Q == dims[0] + dims[1] * (a + 1)
    for alphas in ((1, 1), (2, 0.5), (0.5, 3)):
        sys = build_system(3, (1, 2, 1), [[0, 0, 0], [alphas[0], 0, 0], [0, alphas[1], 0]])
        s2 = alphas[0] * 1 + 1
        assert list(sys.sigma) == [1, s2, alphas[1] * s2 + 1]
    for a, b, c in ((1, 1, 1), (0.5, 2, 1), (2, 0, 3)):
        sys = build_system(3, (1, 1, 1), [[0, 0, 0], [a, 0, 0], [b, c, 0]])
        assert sys.sigma[2] == b + (a + 1) * c + 1
    ex21 = grushin(1.0, (3, 1))
    ex22 = build_system(3, (1, 1, 1), [[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    prod3 = build_system(3, (1, 1, 1), [[0, 0, 0], [1, 0, 0], [1, 1, 0]])
    assert (ex21.Q, ex22.Q, prod3.Q) == (5, 6, 7) and prod3.sigma[2] == 4
    report["detail"] = "Grushin, chain and product families exact"


def test_2_norm_properties(report):
    report["limit"] = 30
    rng = np.random.default_rng(2)
    worst_h = worst_e = 0.0
    for i, sys in enumerate(systems(20260101, 20)):
        x = points(100 + i, sys, 1000)
        r = np.exp(rng.uniform(np.log(1e-3), np.log(1e3), 1000))
        for v in norms.NormVariant:
            base = norms.evaluate(sys, x, v)
            worst_h = max(worst_h, float(np.max(np.abs(norms.evaluate(sys, dilate(sys, r, x), v) / (r * base) - 1))))
            worst_e = max(worst_e, float(np.max(np.abs(norms.euler_residual(sys, x, v) / base))))
    report["detail"] = f"20 systems x 1000 pts: homogeneity {worst_h:.1e}, Euler {worst_e:.1e}"
    assert worst_h <= 1e-10 and worst_e <= 1e-6


def _blocks(z, dims):
    o = np.cumsum((0,) + tuple(dims))
    return [np.linalg.norm(z[:, o[i]:o[i + 1]], axis=1) for i in range(len(dims))]


def test_3_closed_forms(report):
    report["limit"] = 5
    worst = 0.0

    def check(got, ref):
        nonlocal worst
        worst = max(worst, float(np.max(np.abs(got / ref - 1))))

    for a in (0.0, 0.5, 1.0, 2.0, 3.0):
        g = grushin(a, (3, 1))
        z = points(1, g, 1000)
        x, y = _blocks(z, g.dims)
        ref = (x ** (2 * (1 + a)) + (1 + a) ** 2 * y**2) ** (1 / (2 * (1 + a)))
        check(norms.bracket_norm(g, z), ref)
        check(norms.dist_norm(g, z, "dist2"), ref)
    for a, b in ((1, 1), (0.5, 2)):
        sys = build_system(3, (1, 2, 1), [[0, 0, 0], [a, 0, 0], [b, 0, 0]])
        z = points(2, sys, 1000)
        x, y, w = _blocks(z, sys.dims)
        ref = (x ** (2 * (1 + a + b)) + (1 + a) ** 2 * x ** (2 * b) * y**2 + (1 + b) ** 2 * x ** (2 * a) * w**2) ** (1 / (2 * (1 + a + b)))
        check(norms.bracket_norm(sys, z), ref)
    sys = build_system(3, (2, 1, 1), [[0, 0, 0], [1, 0, 0], [1, 0, 0]])
    z = points(4, sys, 1000)
    x, y, w = _blocks(z, sys.dims)
    check(norms.dist_norm(sys, z, "dist1"), (x**8 + y**4 + w**4) ** (1 / 8))
    for a, b, c in ((1, 1, 1), (0.5, 1, 2)):
        sys = build_system(3, (2, 1, 2), [[0, 0, 0], [a, 0, 0], [b, c, 0]])
        z = points(3, sys, 1000)
        x, y, w = _blocks(z, sys.dims)
        mu = b + (1 + a) * c
        ref = (y ** (2 * c) * x ** (2 * (1 + a + b)) + (1 + a) ** 2 * x ** (2 * b) * y ** (2 * (1 + c)) + (1 + mu) ** 2 * x ** (2 * a) * w**2) ** (
            1 / (2 * (1 + a + mu))
        )
        check(norms.bracket_norm(sys, z), ref)
        P = (1 + a) * (1 + mu)
        check(norms.dist_norm(sys, z, "dist1"), (x ** (2 * P) + y ** (2 * (1 + mu)) + w ** (2 * (1 + a))) ** (1 / (2 * P)))
    report["detail"] = f"worst relative error {worst:.1e}"
    assert worst <= 1e-10


def test_4_proof_objects(report):
    report["limit"] = 30
    cases = [c for c in admissible_cases(4, 40) if c[1].s >= 0][:15]
    worst_lim = worst_mag = 0.0
    for i, (sys, params) in enumerate(cases):
        x = points(200 + i, sys, 1000)
        mu = params.mu_for(sys.k)
        t = params.effective_t()
        lo = sys.dims[0] + mu[0] - params.s
        hi = float(np.sum(np.asarray(sys.dims) * sys.sigma + sys.sigma * mu))
        for eps in (1.0, 1e-2, 1e-6):
            c = C.c_eps(sys, params, eps, x)
            eta = C.eta_eps(sys, params, eps, x)
            assert np.all(c >= lo - 1e-12) and np.all(c <= hi + 1e-12)
            assert np.all(eta >= 0) and np.all(eta <= t + 1e-12)
            mag = C.h_eps_magnitude(sys, params, eps, x)
            worst_mag = max(worst_mag, float(np.max(np.abs(np.linalg.norm(C.h_eps_dist(sys, params, eps, x), axis=1) / mag - 1))))
        limit = sys.Q - params.s - t + float(np.dot(sys.sigma, mu))
        gap = C.c_eps(sys, params, 1e-14, x) - C.eta_eps(sys, params, 1e-14, x) - limit
        worst_lim = max(worst_lim, float(np.max(np.abs(gap))))
    report["detail"] = f"{len(cases)} cases: eps->0 gap {worst_lim:.1e}, |h| identity {worst_mag:.1e}"
    assert worst_lim <= 1e-6 and worst_mag <= 1e-10


def _fixture_case(name):
    cfg = load(f"fixture:{name}")
    run_sec = cfg.run
    return (
        name,
        cfg.system,
        cfg.params,
        parse_testfn(run_sec["testfn"], cfg.system),
        parse_domain(run_sec["domain"]),
        parse_sampler(run_sec.get("sampler")),
    )


def _built_case(name, sys, params, testfn):
    return (name, sys, params, parse_testfn(testfn, sys), Domain.box([-1.5] * sys.N, [1.5] * sys.N), None)


def test_5_inequality_verification(report):
    report["limit"] = 300
    g = grushin(1.0, (3, 1))
    chain = build_system(3, (1, 1, 1), [[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    cases = [_fixture_case(n) for n in ("grushin_3_1", "chain_3", "product_3", "classical_3", "unweighted_5_1")]
    cases += [
        _built_case("grushin_semi_p1.5", g, HardyParams(p=1.5, s=1, mu=(0, 1)), "bump:0,0,0,0:1"),
        _built_case("classical_5_semi", classical(5), HardyParams(p=2, s=2), "bump:0,0,0,0,0:1"),
        _built_case("grushin_dist1", g, HardyParams(p=2, s=1, t=0.5, mu=(0, 2), variant="dist"), "bump:0,0,0,0:1"),
        _built_case("grushin_dist2_p3", g, HardyParams(p=3, s=1, t=0.5, mu=(1, 2), variant="dist", norm="dist2"), "bump:0.2,0,0,0.1:0.9"),
        _built_case("chain_dist1", chain, HardyParams(p=2, s=1, t=0.5, mu=(1, 1, 1), variant="dist"), "bump:0,0,0:0.9"),
        _built_case("grushin_5_1_unweighted_dist2", grushin(1.0, (5, 1)), HardyParams(p=2, variant="unweighted", norm="dist2"), "bump:0,0,0,0,0,0:1"),
        _built_case("classical_4_unweighted_p3", classical(4), HardyParams(p=3, variant="unweighted"), "bump:0,0,0,0:1"),
    ]
    lines = []
    variants = set()
    for j, (name, sys, params, u, domain, sampler) in enumerate(cases):
        assert check_conditions(sys, params).overall, f"{name} is not admissible"
        rep = verify_inequality(sys, params, u, domain, n=1_000_000, seed=1000 + j, sampler=sampler)
        variants.add(params.variant.value)
        lines.append((name, rep.verdict, rep.z_score))
    lemma_cases = [
        ("lemma_grushin_h_eps", g, C.proof_field(g, HardyParams(p=2, s=2, mu=(0, 2)), 1e-3), 2.0),
        ("lemma_classical_p3", classical(4), C.unweighted_field(classical(4), 3.0, 1e-2), 3.0),
    ]
    for j, (name, sys, h, p) in enumerate(lemma_cases):
        rep = lemma_check(sys, h, bump(np.zeros(sys.N), 1.0), p, Domain.box([-1.2] * sys.N, [1.2] * sys.N), n=1_000_000, seed=2000 + j)
        lines.append((name, rep.verdict, rep.z_score))
    holds = sum(v is Verdict.HOLDS for _, v, _ in lines)
    weakest = min(lines, key=lambda r: r[2])
    others = [f"{n}:{v.value}" for n, v, _ in lines if v is not Verdict.HOLDS]
    report["detail"] = f"{holds}/{len(lines)} Holds, lowest z {weakest[2]:.1f} ({weakest[0]})" + (f"; {', '.join(others)}" if others else "")
    assert variants == {"semi", "dist", "unweighted"} and len(cases) >= 10
    assert not any(v is Verdict.VIOLATED for _, v, _ in lines)
    assert holds == len(lines)


def test_6_grushin_sharpness(report):
    report["limit"] = 300
    trend = grushin_sharpness_sweep(grushin(1.0, (3, 1)), n=200_000, seed=6)
    best = trend.extrapolated
    low = min(trend.entries, key=lambda e: (e.ratio - trend.target) / e.se)
    report["detail"] = (
        f"{len(trend.entries)} entries, min ratio {best.ratio:.4f}+-{best.se:.4f} at delta={best.delta:g}, "
        f"gap {100 * trend.relative_gap:.2f}%, tightest {(low.ratio - trend.target) / low.se:.1f} se above 2.25"
    )
    assert trend.target == 2.25
    assert abs(trend.relative_gap) <= 0.05
    assert trend.lower_bound_ok(3.0)


def test_7_appendix_identities(report):
    report["limit"] = 10
    g = grushin(1.0, (3, 1))
    chain = build_system(3, (1, 1, 1), [[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    p22 = HardyParams(p=2, s=2)
    x = points(7, g, 1000)
    fund = float(np.max(np.abs(fundamental_identity_residual(g, x, relative=True))))
    ext = float(np.max(np.abs(extremal_equation_residual(g, p22, extremal_ansatz(g), x, relative=True))))
    phi = C.appendix_phi(g, x)
    div = C.div_lambda_fd(C.BlockVectorField(lambda y: C.appendix_phi(g, y)), g, x, order=4)
    target = -((g.Q - 2) / 2) ** 2 * C.grushin_weight(g, x)
    grushin_phi = float(np.max(np.abs((np.sum(phi * phi, -1) + div - target) / target)))
    general_phi = max(
        float(np.max(np.abs(phi_divergence_identity(sys, p22, points(8, sys, 1000), relative=True)))) for sys in (g, chain)
    )
    report["detail"] = f"fundamental {fund:.1e}, extremal {ext:.1e}, Grushin phi {grushin_phi:.1e}, general phi {general_phi:.1e}"
    assert fund <= 1e-8 and ext <= 1e-8 and grushin_phi <= 1e-8 and general_phi <= 1e-6


def _cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue()


def test_8_determinism(report):
    report["limit"] = 60
    args = ("verify", "--config", "fixture:grushin_3_1", "--n", "1000000", "--seed", "42")
    a = _cli(*args, "--threads", "1")
    b = _cli(*args, "--threads", "1")
    c = _cli(*args, "--threads", "3")
    d = _cli(*args, "--threads", "8")
    e = _cli(*args[:-2], "--seed", "43", "--threads", "1")
    report["detail"] = f"exit {a[0]}, {len(a[1])} bytes; threads 1/3/8 identical: {a == c == d}"
    assert a[0] == 0
    assert a[1].encode() == b[1].encode()
    assert a == c == d
    assert e[1] != a[1]
