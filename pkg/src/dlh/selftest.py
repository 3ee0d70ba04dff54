"""Fast invariant suites behind ``dlh selftest``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import norms
from .calculus import c_eps, div_lambda_fd, divergence_h_eps, eta_eps, proof_field
from .config import fixture_names, load, parse_domain, parse_sampler, parse_testfn
from .hardy import Mode, check_conditions, hardy_constant
from .integrate import Verdict, verify_inequality
from .params import HardyParams
from .sharpness import extremal_ansatz, extremal_equation_residual, fundamental_identity_residual, phi_divergence_identity
from .system import build_system, dilate, grushin, homogeneous_dimension_alt, lambdas


@dataclass(frozen=True)
class Outcome:
    name: str
    ok: bool
    detail: str


def random_system(rng: np.random.Generator, kmax: int = 4):
    k = int(rng.integers(1, kmax + 1))
    dims = rng.integers(1, 4, size=k)
    alpha = np.tril(rng.integers(0, 7, size=(k, k)) / 2.0, -1)
    return build_system(k, dims, alpha)


def random_points(rng: np.random.Generator, sys, n: int) -> np.ndarray:
    """Points with every block norm in a moderate range (away from degenerate sets)."""
    x = rng.standard_normal((n, sys.N))
    for s in sys.slices:
        blk = x[:, s]
        blk *= rng.uniform(0.3, 2.0, (n, 1)) / np.linalg.norm(blk, axis=1, keepdims=True)
    return x


def _structure() -> str:
    cases = [
        (grushin(1.0, (3, 1)), [1, 2], 5),
        (build_system(3, (1, 1, 1), [[0, 0, 0], [1, 0, 0], [0, 1, 0]]), [1, 2, 3], 6),
        (build_system(3, (1, 1, 1), [[0, 0, 0], [1, 0, 0], [1, 1, 0]]), [1, 2, 4], 7),
        (build_system(1, (3,), [[0]]), [1], 3),
    ]
    for sys, sigma, Q in cases:
        assert np.array_equal(sys.sigma, sigma) and sys.Q == Q, repr(sys)
        assert homogeneous_dimension_alt(sys) == sys.Q
    return "sigma and Q of the worked examples"


def _norm_invariants() -> str:
    rng = np.random.default_rng(20240601)
    worst_h = worst_e = 0.0
    for _ in range(6):
        sys = random_system(rng)
        x = random_points(rng, sys, 200)
        r = rng.uniform(0.2, 5.0, 200)
        for v in norms.NormVariant:
            a = norms.evaluate(sys, dilate(sys, r, x), v)
            b = r * norms.evaluate(sys, x, v)
            worst_h = max(worst_h, float(np.max(np.abs(a - b) / b)))
            e = norms.euler_residual(sys, x, v) / norms.evaluate(sys, x, v)
            worst_e = max(worst_e, float(np.max(np.abs(e))))
        lam_ok = np.allclose(lambdas(sys, dilate(sys, r, x)), r[:, None] ** (sys.sigma - 1) * lambdas(sys, x), rtol=1e-10)
        assert lam_ok, "λ_i homogeneity"
    assert worst_h < 1e-10, f"homogeneity {worst_h:.3g}"
    assert worst_e < 1e-6, f"Euler {worst_e:.3g}"
    return f"homogeneity {worst_h:.2e}, Euler {worst_e:.2e}"


def _closed_forms() -> str:
    rng = np.random.default_rng(7)
    sys = grushin(1.5, (2, 1))
    z = random_points(rng, sys, 500)
    x, y = z[:, :2], z[:, 2:]
    a = 1.5
    ref = (np.linalg.norm(x, axis=1) ** (2 + 2 * a) + (1 + a) ** 2 * np.sum(y * y, axis=1)) ** (1 / (2 + 2 * a))
    err = float(np.max(np.abs(norms.bracket_norm(sys, z) / ref - 1)))
    err2 = float(np.max(np.abs(norms.dist_norm(sys, z, "dist2") / ref - 1)))
    assert max(err, err2) < 1e-10, f"{err:.3g} {err2:.3g}"
    return f"Grushin bracket norm {err:.2e}"


def _proof_objects() -> str:
    rng = np.random.default_rng(11)
    sys = build_system(3, (1, 2, 1), [[0, 0, 0], [1, 0, 0], [0.5, 1, 0]])
    params = HardyParams(p=2, s=1, t=0.5, mu=(0.5, 0, 1), variant="dist")
    x = random_points(rng, sys, 300)
    mu = params.mu_for(sys.k)
    c = c_eps(sys, params, 1e-2, x)
    lo = sys.dims[0] + mu[0] - params.s
    hi = float(np.sum(np.asarray(sys.dims) * sys.sigma + sys.sigma * mu))
    assert np.all(c >= lo - 1e-12) and np.all(c <= hi + 1e-12), "c_ε bounds"
    eta = eta_eps(sys, params, 1e-2, x)
    assert np.all(eta >= -1e-12) and np.all(eta <= params.t + 1e-12), "η_ε bounds"
    limit = sys.Q - params.s - params.t + float(np.dot(sys.sigma, mu))
    gap = float(np.max(np.abs(c_eps(sys, params, 1e-14, x) - eta_eps(sys, params, 1e-14, x) - limit)))
    assert gap < 1e-6, f"ε→0 limit {gap:.3g}"
    fd = div_lambda_fd(proof_field(sys, params, 1e-2), sys, x)
    ex = divergence_h_eps(sys, params, 1e-2, x)
    rel = float(np.max(np.abs(fd - ex) / np.abs(ex)))
    assert rel < 1e-6, f"div h_ε {rel:.3g}"
    return f"ε→0 gap {gap:.2e}, FD divergence {rel:.2e}"


def _constants() -> str:
    g = grushin(1.0, (3, 1))
    assert hardy_constant(g, HardyParams(p=2, s=2)) == 2.25
    assert hardy_constant(g, HardyParams(p=2, variant="unweighted")) == 0.25
    assert not check_conditions(g, HardyParams(p=2, s=2)).overall
    assert check_conditions(g, HardyParams(p=2, s=2, mu=(0, 2))).overall
    return "constants and condition reports of the worked examples"


def _identities() -> str:
    rng = np.random.default_rng(3)
    g = grushin(1.0, (3, 1))
    x = random_points(rng, g, 500)
    p2 = HardyParams(p=2, s=2)
    f = float(np.max(np.abs(fundamental_identity_residual(g, x, relative=True))))
    e = float(np.max(np.abs(extremal_equation_residual(g, p2, extremal_ansatz(g), x, relative=True))))
    ph = float(np.max(np.abs(phi_divergence_identity(g, p2, x, relative=True))))
    assert f < 1e-8 and e < 1e-8 and ph < 1e-6, f"{f:.3g} {e:.3g} {ph:.3g}"
    return f"fundamental {f:.2e}, extremal {e:.2e}, phi {ph:.2e}"


def _fixture_runs() -> str:
    done = []
    for name in fixture_names():
        cfg = load(f"fixture:{name}")
        run = cfg.run
        if "testfn" not in run or cfg.params is None:
            continue
        mode = Mode.parse(run.get("mode", "verbatim"))
        if not check_conditions(cfg.system, cfg.params, mode).overall:
            # the literal conditions reject this fixture; exercise it under the relaxed reading
            mode = Mode.RELAXED
        report = verify_inequality(
            cfg.system,
            cfg.params,
            parse_testfn(run["testfn"], cfg.system),
            parse_domain(run["domain"]),
            int(run.get("n", 100_000)),
            int(run.get("seed", 0)),
            sampler=parse_sampler(run.get("sampler")),
            mode=mode,
        )
        assert report.verdict is Verdict.HOLDS, f"{name}: {report.verdict.value} (z = {report.z_score:.3g})"
        done.append(name)
    return f"Holds on {', '.join(done)}"


SUITES: list[tuple[str, Callable[[], str]]] = [
    ("lambda_system.structure", _structure),
    ("norms.invariants", _norm_invariants),
    ("norms.closed_forms", _closed_forms),
    ("lambda_calculus.proof_objects", _proof_objects),
    ("hardy.constants", _constants),
    ("sharpness.identities", _identities),
    ("integrate.fixtures", _fixture_runs),
]


def run_all() -> list[Outcome]:
    out = []
    for name, fn in SUITES:
        try:
            out.append(Outcome(name, True, fn()))
        except Exception as exc:  # every failure is reported, none aborts the run
            out.append(Outcome(name, False, f"{type(exc).__name__}: {exc}"))
    return out
