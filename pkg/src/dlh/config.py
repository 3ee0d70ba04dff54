"""Run configuration: loading, validation and canonical echo.

A config is a mapping with up to three sections, ``system``, ``params`` and
``run``.  Files may be YAML or the plain ``key = value`` text printed by the
``derive`` command (lists space separated, matrix rows separated by ``;``).
A file given to ``--system`` or ``--params`` may hold either the bare section
or a mapping containing it.  ``fixture:<name>`` refers to a shipped config.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .errors import ConfigParse, ValidationError
from .hardy import Mode
from .params import HardyParams
from .system import LambdaSystem, build_system

SYSTEM_KEYS = {"k", "dims", "alpha", "sigma", "Q"}
PARAMS_KEYS = {"p", "s", "t", "mu", "variant", "norm"}
RUN_KEYS = {
    "command", "n", "seed", "domain", "testfn", "schedule", "output", "format",
    "mode", "sampler", "override_conditions", "variant", "point", "epsilon",
}
SECTIONS = {"system": SYSTEM_KEYS, "params": PARAMS_KEYS, "run": RUN_KEYS}


def fmt(v: float) -> str:
    """15 significant digits, trailing zeros dropped."""
    return f"{float(v):.15g}"


def fmt_list(values) -> str:
    return " ".join(fmt(v) for v in values)


def _parse_scalar(token: str) -> Any:
    try:
        return yaml.safe_load(token)
    except yaml.YAMLError as exc:
        raise ConfigParse(f"cannot parse value {token!r}") from exc


def _parse_kv(text: str) -> dict:
    out: dict = {}
    section: Optional[dict] = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = out.setdefault(line[1:-1].strip(), {})
            continue
        if "=" not in line:
            raise ConfigParse(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if ";" in value:
            parsed: Any = [[_parse_scalar(t) for t in row.split()] for row in value.split(";")]
        else:
            tokens = value.split()
            parsed = _parse_scalar(tokens[0]) if len(tokens) == 1 else [_parse_scalar(t) for t in tokens]
        (section if section is not None else out)[key] = parsed
    return out


def _looks_like_kv(text: str) -> bool:
    lines = [l.split("#", 1)[0].strip() for l in text.splitlines()]
    lines = [l for l in lines if l]
    return bool(lines) and all(("=" in l and ":" not in l) or (l.startswith("[") and l.endswith("]")) for l in lines)


def parse_text(text: str) -> dict:
    if _looks_like_kv(text):
        return _parse_kv(text)
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigParse(f"invalid YAML: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigParse("config must be a mapping")
    return data


def fixture_names() -> list[str]:
    root = resources.files("dlh") / "fixtures"
    return sorted(p.name.rsplit(".", 1)[0] for p in root.iterdir() if p.name.endswith(".yaml"))


def read_source(ref: str) -> dict:
    """Load a config from a path or ``fixture:<name>``."""
    if ref.startswith("fixture:"):
        name = ref.split(":", 1)[1]
        path = resources.files("dlh") / "fixtures" / f"{name}.yaml"
        if not path.is_file():
            raise ConfigParse(f"unknown fixture {name!r}; available: {', '.join(fixture_names())}")
        return parse_text(path.read_text())
    p = Path(ref)
    if not p.is_file():
        raise ConfigParse(f"config file not found: {ref}")
    return parse_text(p.read_text())


def section_of(data: dict, name: str) -> dict:
    """Pick ``name`` out of a full config, or accept a bare section."""
    if name in data and isinstance(data[name], dict):
        return data[name]
    if set(data) & set(SECTIONS) - {name}:
        return {}
    return data


def _check_keys(section: dict, name: str):
    unknown = set(section) - SECTIONS[name]
    if unknown:
        raise ConfigParse(f"unknown key(s) in {name} section: {', '.join(sorted(map(str, unknown)))}")


def system_from(section: dict) -> LambdaSystem:
    _check_keys(section, "system")
    if "dims" not in section or "alpha" not in section:
        raise ConfigParse("system section needs 'dims' and 'alpha'")
    dims = section["dims"]
    dims = [dims] if not isinstance(dims, list) else dims
    k = section.get("k", len(dims))
    alpha = section["alpha"]
    if not isinstance(alpha, list):
        alpha = [[alpha]]
    elif alpha and not isinstance(alpha[0], list):
        kk = int(k)
        if len(alpha) != kk * kk:
            raise ConfigParse(f"flat alpha needs {kk * kk} entries")
        alpha = [alpha[i * kk:(i + 1) * kk] for i in range(kk)]
    try:
        sys = build_system(k, dims, np.asarray(alpha, dtype=float))
    except (TypeError, ValueError) as exc:
        raise ConfigParse(f"invalid system: {exc}") from exc
    for key, derived in (("sigma", sys.sigma), ("Q", [sys.Q])):
        if key in section:
            given = np.atleast_1d(np.asarray(section[key], dtype=float))
            if given.shape != np.shape(derived) or not np.allclose(given, derived, rtol=1e-12, atol=0):
                raise ConfigParse(f"{key} in config does not match the value derived from alpha")
    return sys


def params_from(section: dict) -> HardyParams:
    _check_keys(section, "params")
    if "p" not in section:
        raise ConfigParse("params section needs 'p'")
    mu = section.get("mu", ())
    mu = tuple(mu) if isinstance(mu, list) else ((mu,) if mu not in (None, ()) else ())
    try:
        return HardyParams(
            p=section["p"],
            s=section.get("s", 0.0),
            t=section.get("t", 0.0),
            mu=mu,
            variant=section.get("variant", "semi"),
            norm=section.get("norm"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigParse(f"invalid params: {exc}") from exc


def system_id(sys: LambdaSystem) -> str:
    key = f"{sys.dims}|{sys.alpha.tobytes().hex()}"
    return f"k{sys.k}-" + hashlib.sha256(key.encode()).hexdigest()[:10]


def system_lines(sys: LambdaSystem) -> list[str]:
    rows = " ; ".join(fmt_list(row) for row in sys.alpha)
    return [f"k = {sys.k}", f"dims = {' '.join(str(d) for d in sys.dims)}", f"alpha = {rows}"]


def params_lines(params: HardyParams, k: int) -> list[str]:
    mu = params.mu_for(k)
    return [
        f"p = {fmt(params.p)}",
        f"s = {fmt(params.s)}",
        f"t = {fmt(params.t)}",
        f"mu = {fmt_list(mu)}",
        f"variant = {params.variant.value}",
        f"norm = {params.norm}",
    ]


@dataclass
class RunConfig:
    system: Optional[LambdaSystem] = None
    params: Optional[HardyParams] = None
    run: dict = field(default_factory=dict)

    def echo(self) -> list[str]:
        """Resolved config as comment lines, in a fixed order."""
        out = []
        if self.system is not None:
            out.append("# [system]")
            out += [f"# {l}" for l in system_lines(self.system)]
        if self.params is not None:
            out.append("# [params]")
            out += [f"# {l}" for l in params_lines(self.params, self.system.k if self.system else len(self.params.mu))]
        if self.run:
            out.append("# [run]")
            for key in sorted(self.run):
                value = self.run[key]
                if isinstance(value, float):
                    value = fmt(value)
                elif isinstance(value, (list, tuple)):
                    value = " ".join(fmt(v) if isinstance(v, float) else str(v) for v in value)
                out.append(f"# {key} = {value}")
        return out


def load(config: Optional[str] = None, system: Optional[str] = None, params: Optional[str] = None) -> RunConfig:
    """Merge a full config with per-section overrides (overrides win)."""
    data = read_source(config) if config else {}
    unknown = set(data) - set(SECTIONS)
    if config and unknown:
        raise ConfigParse(f"unknown section(s): {', '.join(sorted(map(str, unknown)))}")
    sys_sec = section_of(read_source(system), "system") if system else data.get("system")
    par_sec = section_of(read_source(params), "params") if params else data.get("params")
    run_sec = dict(data.get("run") or {})
    _check_keys(run_sec, "run")
    if "mode" in run_sec:
        try:
            run_sec["mode"] = Mode.parse(run_sec["mode"]).value
        except ValueError as exc:
            raise ConfigParse(str(exc)) from exc
    return RunConfig(
        system=system_from(sys_sec) if sys_sec else None,
        params=params_from(par_sec) if par_sec else None,
        run=run_sec,
    )


def parse_floats(text: str, what: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in str(text).replace(" ", "").split(",") if t != ""], dtype=float)
    except ValueError as exc:
        raise ConfigParse(f"invalid {what}: {text!r}") from exc


def parse_domain(spec: str):
    from .integrate import Domain

    parts = str(spec).split(":")
    try:
        if parts[0] == "ball" and len(parts) == 3:
            return Domain.ball(parse_floats(parts[1], "ball center"), float(parts[2]))
        if parts[0] == "box" and len(parts) == 3:
            return Domain.box(parse_floats(parts[1], "box lo"), parse_floats(parts[2], "box hi"))
    except (ValueError, ValidationError) as exc:
        raise ConfigParse(f"invalid domain {spec!r}: {exc}") from exc
    raise ConfigParse(f"domain must be ball:<center>:<radius> or box:<lo>:<hi>, got {spec!r}")


def parse_testfn(spec: str, sys: LambdaSystem):
    from .integrate import bump, zero_field

    parts = str(spec).split(":")
    if parts[0] == "zero" and len(parts) == 1:
        return zero_field()
    if parts[0] == "bump" and len(parts) == 3:
        try:
            return bump(parse_floats(parts[1], "bump center"), float(parts[2]), sys)
        except (ValueError, ValidationError) as exc:
            raise ConfigParse(f"invalid test function {spec!r}: {exc}") from exc
    raise ConfigParse(f"test function must be bump:<center>:<radius> or zero, got {spec!r}")


def parse_sampler(spec: Optional[str]):
    from .integrate import RadialPower, Uniform

    if spec in (None, "", "auto"):
        return None
    parts = str(spec).split(":")
    if parts[0] == "uniform" and len(parts) == 1:
        return Uniform()
    if parts[0] == "radial" and len(parts) in (2, 3):
        try:
            a = float(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 0.3
        except ValueError as exc:
            raise ConfigParse(f"invalid sampler {spec!r}") from exc
        return RadialPower(a, w)
    raise ConfigParse(f"sampler must be auto, uniform or radial:<a>[:<weight>], got {spec!r}")


def parse_schedule(data) -> list[tuple[float, float]]:
    """``schedule: [[δ, R], ...]`` or ``deltas`` × ``radii`` grids."""
    if isinstance(data, dict):
        if "schedule" in data:
            data = data["schedule"]
        elif "deltas" in data or "radii" in data:
            unknown = set(data) - {"deltas", "radii"}
            if unknown:
                raise ConfigParse(f"unknown schedule key(s): {', '.join(sorted(unknown))}")
            deltas = data.get("deltas", [0.05])
            radii = data.get("radii", [1.0])
            deltas = deltas if isinstance(deltas, list) else [deltas]
            radii = radii if isinstance(radii, list) else [radii]
            return [(float(d), float(r)) for d in deltas for r in radii]
        else:
            raise ConfigParse("schedule config needs 'schedule' or 'deltas'/'radii'")
    if not isinstance(data, list) or not data:
        raise ConfigParse("schedule must be a non-empty list of [delta, R] pairs")
    try:
        return [(float(d), float(r)) for d, r in data]
    except (TypeError, ValueError) as exc:
        raise ConfigParse("schedule entries must be [delta, R] pairs") from exc
