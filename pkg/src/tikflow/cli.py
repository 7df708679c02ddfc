"""Configuration-driven scenario runner and command line interface.

A scenario config (JSON or TOML) declares the state space, the invariant
set, the operator (direct, forward-backward, or a time-indexed family), the
regularization schedule, the run controls, and optional analytic quantities.
The runner executes class checks, regularization-path validations, the plain
and regularized flows, and the assumption monitors, writing CSV artifacts
plus a machine-readable pass/fail report.

Exit codes: 0 pass, 1 check failure, 2 configuration error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import pathlib
import sys
from dataclasses import dataclass

import numpy as np

from . import flow, operators, regpath, spaces
from .operators import Operator, OperatorFamily

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

#: Pairwise endpoint agreement required across starting points.
START_INDEPENDENCE_TOL = 2e-2


class ConfigError(ValueError):
    """The scenario configuration is missing or inconsistent."""


@dataclass
class ReportLine:
    """One machine-readable check outcome."""

    check_id: str
    passed: bool
    measured: float
    threshold: float

    def text(self) -> str:
        status = "pass" if self.passed else "fail"
        return (
            f"{self.check_id} {status} measured={self.measured!r} "
            f"threshold={self.threshold!r}"
        )


# ---------------------------------------------------------------------------
# Config loading and object construction
# ---------------------------------------------------------------------------


def resolve_config(source) -> dict:
    """Load a config from a dict, a ``builtin:<name>`` tag, or a JSON/TOML file."""
    if isinstance(source, dict):
        return copy.deepcopy(source)
    text = str(source)
    if text.startswith("builtin:"):
        name = text.split(":", 1)[1]
        if name not in BUILTIN_SCENARIOS:
            raise ConfigError(
                f"unknown builtin scenario {name!r}; "
                f"available: {', '.join(sorted(BUILTIN_SCENARIOS))}"
            )
        return copy.deepcopy(BUILTIN_SCENARIOS[name])
    path = pathlib.Path(text)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    if path.suffix == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib

        with open(path, "rb") as fh:
            return tomllib.load(fh)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from exc


def _vec(cfg, key, dim, where):
    try:
        return spaces.as_vector(cfg[key], dim)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{where}: bad or missing {key!r}: {exc}") from exc


def build_set(spec: dict, dim: int) -> spaces.ConvexSet:
    kind = spec.get("kind")
    try:
        if kind == "whole":
            return spaces.WholeSpace(dim)
        if kind == "box":
            return spaces.Box(_vec(spec, "lo", dim, "set"), _vec(spec, "hi", dim, "set"))
        if kind == "ball":
            return spaces.Ball(_vec(spec, "center", dim, "set"), float(spec["radius"]))
        if kind == "halfspace":
            return spaces.Halfspace(_vec(spec, "a", dim, "set"), float(spec["b"]))
        if kind == "hyperplane":
            return spaces.Hyperplane(_vec(spec, "a", dim, "set"), float(spec["b"]))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad set spec: {exc}") from exc
    raise ConfigError(f"unknown set kind {kind!r}")


def build_prox(spec: dict, dim: int) -> operators.ProxSpec:
    kind = spec.get("kind")
    try:
        if kind == "indicator":
            return operators.IndicatorProx(build_set(spec["set"], dim))
        if kind == "l1":
            return operators.L1Prox(float(spec.get("weight", 1.0)))
        if kind == "quadratic":
            return operators.QuadraticProx(
                _vec(spec, "center", dim, "prox"), float(spec.get("weight", 1.0))
            )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad prox spec: {exc}") from exc
    raise ConfigError(f"unknown prox kind {kind!r}")


def build_schedule(spec: dict, dim: int) -> flow.Schedule:
    kind = spec.get("kind")
    try:
        if kind == "power":
            return flow.power_schedule(
                float(spec["eps0"]), float(spec["beta"]),
                _vec(spec, "anchor", dim, "schedule"),
            )
        if kind == "moving-anchor":
            return flow.moving_anchor_schedule(
                float(spec["eps0"]), float(spec["beta"]),
                _vec(spec, "y0", dim, "schedule"),
                _vec(spec, "y_limit", dim, "schedule"),
                float(spec["rate"]),
            )
        if kind == "constant-eps":
            return flow.constant_eps_schedule(
                float(spec["value"]), _vec(spec, "anchor", dim, "schedule")
            )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad schedule spec: {exc}") from exc
    raise ConfigError(f"unknown schedule kind {kind!r}")


def _build_delta(spec: dict, sched: flow.Schedule):
    kind = spec.get("kind")
    if kind == "eps-power":
        power = float(spec.get("power", 3.0))
        # The square root of the set gap must vanish faster than eps.
        if power <= 2.0:
            raise ConfigError("delta kind eps-power needs power > 2")
        eps = sched.eps
        return lambda t: eps(t) ** power
    raise ConfigError(f"unknown delta kind {kind!r}")


@dataclass(eq=False)
class Scenario:
    """A fully built scenario ready to run."""

    name: str
    dim: int
    D: spaces.ConvexSet
    family: OperatorFamily
    sched: flow.Schedule
    run: dict
    analytics: dict
    fb: tuple | None = None  # (phi, B, mu) for forward-backward operators
    setfamily: spaces.SetFamily | None = None

    @property
    def T(self) -> Operator:
        return self.family.limit


def build_operator(spec: dict, dim: int, D, sched) -> tuple:
    """Return (family, fb_parts, setfamily) for an operator spec."""
    kind = spec.get("kind")
    if kind == "identity":
        return operators.constant_family(operators.identity_op(D)), None, None
    if kind == "constant":
        value = _vec(spec, "value", dim, "operator")
        return operators.constant_family(operators.constant_op(D, value)), None, None
    if kind == "projection":
        target = build_set(spec["target"], dim)
        return operators.constant_family(operators.projection_op(target, D)), None, None
    if kind == "translation":
        shift = _vec(spec, "shift", dim, "operator")
        return operators.constant_family(operators.translation_op(D, shift)), None, None
    if kind == "scaled-rotation":
        if dim != 2:
            raise ConfigError("scaled-rotation needs a 2-D state space")
        angle = math.radians(float(spec.get("angle_deg", 0.0)))
        try:
            T = operators.scaled_rotation_op(float(spec["alpha"]), angle)
        except (KeyError, operators.ParameterError) as exc:
            raise ConfigError(f"bad scaled-rotation spec: {exc}") from exc
        return operators.constant_family(T), None, None
    if kind == "forward-backward":
        phi = build_prox(spec["phi"], dim)
        B_spec = spec["B"]
        if B_spec.get("kind") != "affine":
            raise ConfigError("forward-backward B must be an affine spec")
        matrix = B_spec.get("matrix")
        if matrix is not None:
            matrix = np.asarray(matrix, dtype=float)
        offset = B_spec.get("offset")
        B = operators.affine_op(
            D, matrix, offset, "cocoercive", float(B_spec["modulus"]), name="B"
        )
        mu = float(spec["mu"])
        try:
            T = operators.make_forward_backward(phi, B, mu)
        except operators.ParameterError as exc:
            raise ConfigError(str(exc)) from exc
        return operators.constant_family(T), (phi, B, mu), None
    if kind == "moving-box-projected-gradient":
        base = build_set(spec["box"], dim)
        if not isinstance(base, spaces.Box):
            raise ConfigError("moving-box-projected-gradient needs a box")
        delta = _build_delta(spec.get("delta", {"kind": "eps-power"}), sched)
        setfam = spaces.inflated_box_family(base, delta)
        center = _vec(spec, "grad_center", dim, "operator")
        beta = float(spec.get("beta", 1.0))
        mu = float(spec["mu"])
        if not 0 < mu < 2 * beta:
            raise ConfigError(f"mu must lie in (0, {2 * beta}), got {mu}")
        B = operators.affine_op(D, None, -center, "cocoercive", beta, name="B")
        phi_limit = operators.IndicatorProx(base)
        T_limit = operators.make_forward_backward(phi_limit, B, mu)
        lo, hi = base.lo, base.hi
        ones = np.ones(dim)

        def member(t):
            hi_t = hi + float(delta(t)) * ones
            return Operator(
                D,
                lambda x: np.clip(x - mu * B(x), lo, hi_t),
                "nonexpansive",
                name="forward-backward-t",
            )

        return OperatorFamily(member, T_limit), (phi_limit, B, mu), setfam
    raise ConfigError(f"unknown operator kind {kind!r}")


def build_scenario(cfg: dict) -> Scenario:
    for section in ("space", "set", "operator", "schedule", "run"):
        if section not in cfg:
            raise ConfigError(f"missing config section {section!r}")
    dim = int(cfg["space"].get("dim", 0))
    if dim < 1:
        raise ConfigError("space.dim must be >= 1")
    D = build_set(cfg["set"], dim)
    sched = build_schedule(cfg["schedule"], dim)
    family, fb, setfam = build_operator(cfg["operator"], dim, D, sched)

    run = dict(cfg["run"])
    x0s = run.get("x0")
    if not x0s:
        raise ConfigError("run.x0 must list at least one start")
    run["x0"] = [spaces.as_vector(x, dim) for x in x0s]
    for x0 in run["x0"]:
        if not D.contains(x0, 1e-9):
            raise ConfigError(f"start {x0} lies outside D")
    if run.get("flows", True) and "t_end" not in run:
        raise ConfigError("run.t_end is required when flows are enabled")
    # Anchor path must stay inside the invariant set.
    for t in (0.0, 1.0, 10.0, 1e3):
        if not D.contains(sched.y(t), 1e-7):
            raise ConfigError(f"schedule anchor leaves D at t={t}")

    analytics = dict(cfg.get("analytics", {}))
    for key in ("proj_fix", "fixed_point"):
        if key in analytics and analytics[key] is not None:
            analytics[key] = spaces.as_vector(analytics[key], dim)
    return Scenario(
        name=str(cfg.get("name", "scenario")),
        dim=dim, D=D, family=family, sched=sched,
        run=run, analytics=analytics, fb=fb, setfamily=setfam,
    )


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------


def run_class_checks(sc: Scenario, rng) -> list:
    lines = []
    T = sc.T
    if T.declared_class != "unclassified":
        rep = operators.check_class(
            T, T.declared_class, rng=rng, pairs=1000, tol=1e-9
        )
        lines.append(ReportLine("class.T", rep.passed, rep.worst_margin, rep.tol))
    if sc.fb is not None:
        phi, B, mu = sc.fb
        rep = operators.check_forward_backward_inequality(
            T, B, mu, rng=rng, pairs=1000, tol=1e-9
        )
        lines.append(ReportLine("fb.composite", rep.passed, rep.worst_margin, rep.tol))
        prox_T = operators.prox_op(phi, mu, T.domain)
        rep = operators.check_class(
            prox_T, "firmly-nonexpansive", rng=rng, pairs=1000, tol=1e-9
        )
        lines.append(ReportLine("prox.firm", rep.passed, rep.worst_margin, rep.tol))
    if sc.setfamily is not None:
        lines.extend(run_drift_checks(sc, rng))
    return lines


def run_drift_checks(sc: Scenario, rng, samples: int = 500) -> list:
    """Moreau projection-gap bound and the prox drift envelope on sampled points."""
    fam = sc.setfamily
    _, _, mu = sc.fb
    base = fam.base
    lo = fam.bound.lo - 2.0
    hi = fam.bound.hi + 2.0
    hs = max(fam.hausdorff_to_base(t) for t in (0.0, 1.0, 4.0, 16.0, 256.0))
    z0 = base.project(np.zeros(sc.dim))
    c_phi = float(np.linalg.norm(z0)) + 0.5 * hs

    worst_moreau = -math.inf
    worst_env = -math.inf
    for t in (1.0, 4.0, 16.0):
        Ct = fam.member(t)
        haus = fam.hausdorff_to_base(t)
        kappa = 2.0 * math.sqrt(haus)
        for _ in range(samples):
            z = rng.uniform(lo, hi)
            gap = float(np.linalg.norm(Ct.project(z) - base.project(z)))
            moreau_rhs = 2.0 * (Ct.distance(z) + base.distance(z)) * haus
            worst_moreau = max(worst_moreau, gap**2 - moreau_rhs)
            env_rhs = kappa * math.sqrt(float(np.linalg.norm(z)) + c_phi)
            worst_env = max(worst_env, gap - env_rhs)
    return [
        ReportLine("drift.moreau", worst_moreau <= 1e-9, worst_moreau, 1e-9),
        ReportLine("drift.envelope", worst_env <= 1e-9, worst_env, 1e-9),
    ]


def run_regpath_checks(sc: Scenario, rng) -> list:
    lines = []
    T = sc.T
    sampler = operators.domain_sampler(T.domain, rng)
    tol = 1e-10
    slack = 10.0 * tol

    worst = 0.0
    for _ in range(100):
        lam, mu = np.sort(rng.uniform(0.05, 5.0, size=2))
        if mu <= lam:
            mu = lam * 1.5
        worst = max(worst, regpath.check_resolvent_identity(T, lam, mu, sampler(), tol=tol))
    lines.append(ReportLine("regpath.resolvent", worst <= slack, worst, slack))

    worst = -math.inf
    for _ in range(50):
        eps = float(rng.uniform(0.2, 2.0))
        y1, y2 = sampler(), sampler()
        p1 = regpath.solve_reg_point(T, eps, y1, tol=tol)
        p2 = regpath.solve_reg_point(T, eps, y2, tol=tol)
        lhs = (
            np.linalg.norm(p1.point - p2.point) ** 2
            + np.linalg.norm((y1 - p1.point) - (y2 - p2.point)) ** 2
        )
        worst = max(worst, float(lhs - np.linalg.norm(y1 - y2) ** 2))
    lines.append(ReportLine("regpath.firm", worst <= slack, worst, slack))

    worst = -math.inf
    for _ in range(50):
        e1, e2 = rng.uniform(0.1, 3.0, size=2)
        rep = regpath.check_path_lipschitz(T, sampler(), float(e1), float(e2), tol=tol)
        worst = max(worst, rep.lhs - rep.rhs)
    lines.append(ReportLine("regpath.lipschitz", worst <= slack, worst, slack))

    fp = sc.analytics.get("fixed_point")
    if fp is not None:
        worst = -math.inf
        for _ in range(50):
            eps = float(rng.uniform(0.2, 2.0))
            rep = regpath.check_fejer_triple(T, eps, sampler(), fp, tol=tol)
            worst = max(worst, rep.lhs - rep.rhs)
        lines.append(ReportLine("regpath.fejer", worst <= slack, worst, slack))
    return lines


def run_path_stage(sc: Scenario, outdir) -> tuple:
    """Follow the regularization path from the limit anchor; returns (lines, result)."""
    path_cfg = dict(sc.run.get("path", {}))
    epsilons = regpath.geometric_epsilons(
        float(path_cfg.get("eps0", 1.0)),
        float(path_cfg.get("ratio", 0.5)),
        int(path_cfg.get("count", 21)),
    )
    result = regpath.follow_path(
        sc.T,
        sc.sched.y_limit,
        epsilons,
        tol=float(path_cfg.get("tol", 1e-8)),
        divergence_radius=path_cfg.get("divergence_radius"),
    )
    if outdir is not None:
        regpath.path_to_csv(result, str(pathlib.Path(outdir) / "path.csv"))

    lines = []
    if sc.analytics.get("expect_diverged"):
        lines.append(
            ReportLine("regpath.diverged", result.diverged, float(result.diverged), 1.0)
        )
    elif sc.analytics.get("proj_fix") is not None:
        err = (
            float(np.linalg.norm(result.limit_estimate - sc.analytics["proj_fix"]))
            if result.limit_estimate is not None
            else math.inf
        )
        tol = float(sc.analytics.get("path_limit_tol", 1e-5))
        lines.append(ReportLine("regpath.limit", err <= tol, err, tol))
    return lines, result


def emit_rate_table(traj: flow.Trajectory, analytics: dict, out) -> None:
    """Residual-rate table: t, residual, inverse-sqrt bound, ratio.

    When a contraction modulus and fixed point are supplied, the exponential
    envelope columns are appended.  Rows before t = 0.1 are skipped to avoid
    division noise near the start.
    """
    dist = analytics.get("dist_x0_fix")
    if dist is None:
        raise ConfigError("rate table needs analytics.dist_x0_fix")
    dist = float(dist)
    alpha = analytics.get("alpha")
    fp = analytics.get("fixed_point")
    with_exp = alpha is not None and fp is not None

    close = False
    if isinstance(out, (str, bytes)):
        out = open(out, "w", encoding="utf-8", newline="")
        close = True
    try:
        header = "t,residual,bound,ratio"
        if with_exp:
            header += ",exp_bound,exp_ratio"
        out.write(header + "\n")
        res = traj.diagnostics["residual_limit"]
        x0 = traj.states[0]
        for i, t in enumerate(traj.times):
            if t < 0.1:
                continue
            bound = dist / math.sqrt(t)
            ratio = res[i] / bound if bound > 0 else 0.0
            row = f"{t!r},{res[i]!r},{bound!r},{ratio!r}"
            if with_exp:
                exp_bound = math.exp(-(1.0 - alpha) * t) * float(
                    np.linalg.norm(x0 - fp)
                )
                d = float(np.linalg.norm(traj.states[i] - fp))
                exp_ratio = d / exp_bound if exp_bound > 0 else 0.0
                row += f",{exp_bound!r},{exp_ratio!r}"
            out.write(row + "\n")
    finally:
        if close:
            out.close()


def _integrate_kwargs(run: dict) -> dict:
    kw = {
        "method": run.get("method", "rk4"),
        "h": float(run.get("h", 1e-3)),
    }
    if run.get("rtol") is not None:
        kw["rtol"] = float(run["rtol"])
    if run.get("atol") is not None:
        kw["atol"] = float(run["atol"])
    if run.get("max_step") is not None:
        kw["max_step"] = float(run["max_step"])
    return kw


def _sample_grid(t_end: float, run: dict) -> np.ndarray:
    samples = int(run.get("samples", 201))
    return np.linspace(0.0, t_end, max(2, samples))


def run_flow_stage(sc: Scenario, outdir) -> list:
    lines = []
    an = sc.analytics
    t_end = float(sc.run["t_end"])
    kw = _integrate_kwargs(sc.run)

    # Plain (unregularized) flow from the first start, limit operator.
    plain_t_end = float(sc.run.get("plain_t_end", min(20.0, t_end)))
    plain = flow.run_plain_flow(
        sc.T, sc.D, sc.run["x0"][0], plain_t_end,
        method="rk4", h=min(kw["h"], 1e-3),
        sample_times=np.linspace(0.0, plain_t_end, 401),
    )
    if outdir is not None:
        plain.to_csv(str(pathlib.Path(outdir) / "plain.csv"))
    inv = float(np.max(plain.diagnostics["d_D"]))
    lines.append(ReportLine("plain.invariance", inv <= 1e-6, inv, 1e-6))

    if an.get("dist_x0_fix") is not None:
        dist = float(an["dist_x0_fix"])
        mask = plain.times >= 0.1
        ratios = plain.diagnostics["residual_limit"][mask] * np.sqrt(
            plain.times[mask]
        ) / dist
        worst = float(np.max(ratios)) if ratios.size else 0.0
        lines.append(ReportLine("plain.rate", worst <= 1.05, worst, 1.05))
        if outdir is not None:
            emit_rate_table(plain, an, str(pathlib.Path(outdir) / "rate.csv"))
    if an.get("fixed_point") is not None:
        fp = an["fixed_point"]
        d = np.linalg.norm(plain.states - fp, axis=1)
        worst = float(np.max(np.diff(d))) if d.size > 1 else 0.0
        lines.append(ReportLine("plain.fejer", worst <= 1e-8, worst, 1e-8))
    if an.get("alpha") is not None and an.get("fixed_point") is not None:
        alpha = float(an["alpha"])
        fp = an["fixed_point"]
        d0 = float(np.linalg.norm(plain.states[0] - fp))
        env = np.exp(-(1.0 - alpha) * plain.times) * d0
        d = np.linalg.norm(plain.states - fp, axis=1)
        worst = float(np.max(d / np.maximum(env, 1e-300)))
        lines.append(ReportLine("plain.exponential", worst <= 1 + 1e-3, worst, 1 + 1e-3))

    # Regularized flow, every configured start.
    endpoints = []
    lyap = bool(sc.run.get("lyapunov", False))
    for i, x0 in enumerate(sc.run["x0"]):
        traj = flow.run_tikhonov_flow(
            sc.family, sc.D, sc.sched, x0, t_end,
            sample_times=_sample_grid(t_end, sc.run),
            fix_distance=an.get("fix_distance"),
            lyapunov=lyap,
            **kw,
        )
        if outdir is not None:
            traj.to_csv(str(pathlib.Path(outdir) / f"tikhonov_{i}.csv"))
        inv = float(np.max(traj.diagnostics["d_D"]))
        lines.append(ReportLine(f"tik.invariance.{i}", inv <= 1e-6, inv, 1e-6))
        endpoints.append(traj.endpoint)
        if lyap:
            final = float(traj.diagnostics["lyapunov"][-1])
            lines.append(ReportLine(f"tik.lyapunov.{i}", final <= 1e-2, final, 1e-2))

    endpoint_tol = an.get("endpoint_tol")
    if an.get("proj_fix") is not None and endpoint_tol is not None:
        for i, ep in enumerate(endpoints):
            err = float(np.linalg.norm(ep - an["proj_fix"]))
            lines.append(
                ReportLine(f"tik.endpoint.{i}", err <= endpoint_tol, err, float(endpoint_tol))
            )
    if len(endpoints) > 1:
        worst = max(
            float(np.linalg.norm(a - b))
            for i, a in enumerate(endpoints)
            for b in endpoints[i + 1:]
        )
        lines.append(
            ReportLine(
                "tik.start_independence",
                worst <= START_INDEPENDENCE_TOL, worst, START_INDEPENDENCE_TOL,
            )
        )
    return lines


def run_monitor_stage(sc: Scenario) -> list:
    if sc.analytics.get("fix_distance") is None or sc.sched.kind == "constant-eps":
        return []
    t_end = float(sc.run.get("t_end", 1e4))
    ts = [t for t in (10.0, 1e2, 1e3, 1e4) if t <= max(t_end, 10.0)]
    values = []
    warm = None
    for t in ts:
        sample = flow.psi_monitor(
            t, sc.family, sc.sched, float(sc.analytics["fix_distance"]),
            warm_start=warm,
        )
        warm = sample.reg_point
        values.append(sample.psi_over_eps)
    decreasing = all(b < a for a, b in zip(values, values[1:]))
    return [ReportLine("monitor.psi_decreasing", decreasing, values[-1], values[0])]


# ---------------------------------------------------------------------------
# Verbs
# ---------------------------------------------------------------------------


def _rng(sc: Scenario, seed=None):
    if seed is None:
        seed = int(sc.run.get("seed", 0))
    return np.random.default_rng(seed)


def run_checks(cfg, seed=None) -> list:
    """Operator-class and regularization-path validators only; no integration."""
    sc = build_scenario(resolve_config(cfg))
    rng = _rng(sc, seed)
    return run_class_checks(sc, rng) + run_regpath_checks(sc, rng)


def run_scenario(cfg, outdir=None, seed=None) -> list:
    """Full pipeline: checks, path, flows, monitors; writes CSVs into ``outdir``."""
    sc = build_scenario(resolve_config(cfg))
    rng = _rng(sc, seed)
    if outdir is not None:
        outdir = pathlib.Path(outdir) / sc.name
        outdir.mkdir(parents=True, exist_ok=True)
    lines = run_class_checks(sc, rng)
    lines += run_regpath_checks(sc, rng)
    path_lines, _ = run_path_stage(sc, outdir)
    lines += path_lines
    if sc.run.get("flows", True):
        lines += run_flow_stage(sc, outdir)
        lines += run_monitor_stage(sc)
    if outdir is not None:
        write_report(lines, outdir / "report.txt")
    return lines


def write_report(lines, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line.text() + "\n")
        overall = "pass" if all(l.passed for l in lines) else "fail"
        fh.write(f"overall {overall}\n")


def _print_lines(lines) -> int:
    for line in lines:
        print(line.text())
    return EXIT_OK if all(l.passed for l in lines) else EXIT_CHECK_FAILED


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tikflow",
        description="Fixed points of nonexpansive operators via regularized flows.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("check", help="run operator and path validators")
    p.add_argument("config")
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("regpath", help="follow the regularization path")
    p.add_argument("config")
    p.add_argument("--out", default=None)

    p = sub.add_parser("simulate", help="integrate the flows and write CSVs")
    p.add_argument("config")
    p.add_argument("--out", default=None)

    p = sub.add_parser("scenario", help="scenario operations")
    scen_sub = p.add_subparsers(dest="scenario_verb", required=True)
    pr = scen_sub.add_parser("run", help="run the full scenario pipeline")
    pr.add_argument("config")
    pr.add_argument("--out", default=None)
    pr.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("suite", help="run the built-in acceptance suite")
    p.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    try:
        if args.verb == "check":
            return _print_lines(run_checks(args.config, seed=args.seed))
        if args.verb == "regpath":
            sc = build_scenario(resolve_config(args.config))
            out = None
            if args.out:
                out = pathlib.Path(args.out) / sc.name
                out.mkdir(parents=True, exist_ok=True)
            lines, result = run_path_stage(sc, out)
            print(f"stop_reason {result.stop_reason} diverged {result.diverged}")
            if result.limit_estimate is not None:
                print("limit_estimate " + " ".join(repr(v) for v in result.limit_estimate))
            return _print_lines(lines)
        if args.verb == "simulate":
            sc = build_scenario(resolve_config(args.config))
            out = None
            if args.out:
                out = pathlib.Path(args.out) / sc.name
                out.mkdir(parents=True, exist_ok=True)
            return _print_lines(run_flow_stage(sc, out))
        if args.verb == "scenario":
            return _print_lines(run_scenario(args.config, outdir=args.out, seed=args.seed))
        if args.verb == "suite":
            from .suite import run_acceptance

            lines = run_acceptance()
            if args.out:
                out = pathlib.Path(args.out)
                out.mkdir(parents=True, exist_ok=True)
                write_report(lines, out / "acceptance.txt")
            return _print_lines(lines)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (
        regpath.ConvergenceError,
        flow.StiffnessError,
        flow.DivergenceError,
    ) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# Built-in scenario catalog
# ---------------------------------------------------------------------------

BUILTIN_SCENARIOS = {
    "line-select": {
        "name": "line-select",
        "space": {"dim": 2},
        "set": {"kind": "whole"},
        "operator": {
            "kind": "projection",
            "target": {"kind": "hyperplane", "a": [0.0, 1.0], "b": 0.0},
        },
        "schedule": {"kind": "power", "eps0": 1.0, "beta": 0.5, "anchor": [3.0, 4.0]},
        "run": {
            "x0": [[10.0, 10.0], [-5.0, 2.0]],
            "t_end": 250000.0,
            "plain_t_end": 20.0,
            "method": "rk45",
            "max_step": 2.0,
            "rtol": 1e-6,
            "atol": 1e-9,
            "h": 1e-3,
            "samples": 201,
            "seed": 0,
        },
        "analytics": {
            "proj_fix": [3.0, 0.0],
            "fixed_point": [3.0, 0.0],
            "fix_distance": 4.0,
            "dist_x0_fix": 10.0,
            "endpoint_tol": 1e-2,
        },
    },
    "lasso-select": {
        "name": "lasso-select",
        "space": {"dim": 2},
        "set": {"kind": "whole"},
        "operator": {
            "kind": "forward-backward",
            "phi": {"kind": "l1", "weight": 1.0},
            "B": {"kind": "affine", "offset": [-2.0, -0.5], "modulus": 1.0},
            "mu": 1.0,
        },
        "schedule": {"kind": "power", "eps0": 1.0, "beta": 0.5, "anchor": [0.0, 0.0]},
        "run": {
            "x0": [[5.0, 5.0], [-3.0, 1.0]],
            "t_end": 100000.0,
            "plain_t_end": 20.0,
            "method": "rk45",
            "max_step": 2.0,
            "rtol": 1e-6,
            "atol": 1e-9,
            "h": 1e-3,
            "samples": 201,
            "seed": 0,
        },
        "analytics": {
            "proj_fix": [1.0, 0.0],
            "fixed_point": [1.0, 0.0],
            "fix_distance": 1.0,
            "dist_x0_fix": 6.4031242374328485,
            "endpoint_tol": 1e-2,
        },
    },
    "moving-box": {
        "name": "moving-box",
        "space": {"dim": 2},
        "set": {"kind": "box", "lo": [0.0, 0.0], "hi": [2.0, 2.0]},
        "operator": {
            "kind": "moving-box-projected-gradient",
            "box": {"kind": "box", "lo": [0.0, 0.0], "hi": [1.0, 1.0]},
            "grad_center": [2.0, 0.5],
            "mu": 1.0,
            "beta": 1.0,
            "delta": {"kind": "eps-power", "power": 3.0},
        },
        "schedule": {"kind": "power", "eps0": 1.0, "beta": 0.5, "anchor": [0.0, 0.0]},
        "run": {
            "x0": [[2.0, 2.0], [0.0, 1.0]],
            "t_end": 40000.0,
            "plain_t_end": 20.0,
            "method": "rk45",
            "max_step": 2.0,
            "rtol": 1e-6,
            "atol": 1e-9,
            "h": 1e-3,
            "samples": 201,
            "seed": 0,
        },
        "analytics": {
            "proj_fix": [1.0, 0.5],
            "fixed_point": [1.0, 0.5],
            "fix_distance": 1.118033988749895,
            "dist_x0_fix": 1.8027756377319946,
            "endpoint_tol": 2e-2,
        },
    },
    "rotation-contraction": {
        "name": "rotation-contraction",
        "space": {"dim": 2},
        "set": {"kind": "whole"},
        "operator": {"kind": "scaled-rotation", "alpha": 0.5, "angle_deg": 30.0},
        "schedule": {"kind": "power", "eps0": 1.0, "beta": 0.5, "anchor": [0.0, 0.0]},
        "run": {
            "x0": [[1.0, 1.0]],
            "t_end": 30.0,
            "plain_t_end": 20.0,
            "method": "rk4",
            "h": 1e-3,
            "samples": 201,
            "seed": 0,
            "lyapunov": True,
        },
        "analytics": {
            "proj_fix": [0.0, 0.0],
            "fixed_point": [0.0, 0.0],
            "fix_distance": 0.0,
            "alpha": 0.5,
            "dist_x0_fix": 1.4142135623730951,
            "endpoint_tol": 1e-2,
        },
    },
    "box-invariance": {
        "name": "box-invariance",
        "space": {"dim": 2},
        "set": {"kind": "box", "lo": [0.0, 0.0], "hi": [1.0, 1.0]},
        "operator": {
            "kind": "forward-backward",
            "phi": {"kind": "indicator", "set": {"kind": "box", "lo": [0.0, 0.0], "hi": [1.0, 1.0]}},
            "B": {"kind": "affine", "offset": [-2.0, -0.5], "modulus": 1.0},
            "mu": 1.0,
        },
        "schedule": {"kind": "power", "eps0": 1.0, "beta": 0.5, "anchor": [0.0, 0.0]},
        "run": {
            "x0": [[1.0, 1.0], [0.0, 0.2]],
            "t_end": 20.0,
            "plain_t_end": 10.0,
            "method": "rk4",
            "h": 1e-3,
            "samples": 201,
            "seed": 0,
        },
        "analytics": {
            "proj_fix": [1.0, 0.5],
            "fixed_point": [1.0, 0.5],
            "fix_distance": 1.118033988749895,
            "dist_x0_fix": 0.5,
            "endpoint_tol": None,
        },
    },
    "translation-divergence": {
        "name": "translation-divergence",
        "space": {"dim": 2},
        "set": {"kind": "whole"},
        "operator": {"kind": "translation", "shift": [1.0, 0.0]},
        "schedule": {"kind": "power", "eps0": 1.0, "beta": 0.5, "anchor": [0.0, 0.0]},
        "run": {
            "x0": [[0.0, 0.0]],
            "flows": False,
            "path": {"eps0": 1.0, "ratio": 0.5, "count": 21, "divergence_radius": 1000.0},
            "seed": 0,
        },
        "analytics": {"expect_diverged": True},
    },
}


if __name__ == "__main__":
    raise SystemExit(main())
