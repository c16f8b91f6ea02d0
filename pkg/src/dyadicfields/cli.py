"""Scenario-driven command-line front end.

One scenario per config file (TOML primary, JSON accepted): a command, a model
fragment, parameters, and a master seed.  Every run writes tidy CSV and a JSON
summary whose bytes depend only on (scenario, seed), plus a run manifest with
checksums of the emitted files.  Thread count affects speed only.

Exit codes: 0 success, 2 config error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dyadic import TruncationLadder, telescoping_decompose
from .harness import (
    baum_katz_series,
    feller_wlln,
    moment_series_check,
    mz_slln_trace,
    pyke_root_lp,
    regular_norming_series,
)
from .inequalities import (
    H2qInstance,
    InequalityLedger,
    MonotoneTransform,
    WeightScheme,
    h2q_min_constant,
    rosenthal_lhs_mc,
    rosenthal_rhs,
    tailbound_check,
)
from .models import FieldModel, MarginalSpec, SpecError, sample_field
from .varying import (
    SlowlyVaryingFamily,
    debruijn_conjugate,
    debruijn_residual,
    domination_check,
    uniform_integrability_trace,
)
from .models import dominator_model

__all__ = ["Scenario", "RunManifest", "ScenarioError", "parse_scenario", "run", "main"]

COMMANDS = ("decompose", "rosenthal", "tailbound", "h2q", "series", "slln",
            "wlln", "lp", "varying", "dominate", "moment-series")


class ScenarioError(ValueError):
    """Config rejected; carries the full list of violations."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass(frozen=True)
class Scenario:
    name: str
    command: str
    model: FieldModel | None
    params: dict
    master_seed: int
    out_dir: str | None
    raw: dict = field(repr=False, default_factory=dict)

    def canonical_hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    scenario_hash: str
    toolkit_version: str
    started_at: float
    finished_at: float
    seed: int
    command: str
    files: dict  # path -> sha256

    def to_json_dict(self) -> dict:
        return {
            "scenario_hash": self.scenario_hash,
            "toolkit_version": self.toolkit_version,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "seed": self.seed,
            "command": self.command,
            "files": self.files,
        }


# ---------------------------------------------------------------------------
# Parsing and validation
# ---------------------------------------------------------------------------


def _load_config(path: str | Path) -> dict:
    path = Path(path)
    text = path.read_bytes()
    if path.suffix.lower() == ".json":
        return json.loads(text)
    if path.suffix.lower() in (".toml", ".tml"):
        return tomllib.loads(text.decode())
    # sniff: try TOML first, then JSON
    try:
        return tomllib.loads(text.decode())
    except tomllib.TOMLDecodeError:
        return json.loads(text)


def _validate_params(command: str, params: dict, violations: list[str]) -> None:
    p = params.get("p")
    alpha = params.get("alpha")
    q = params.get("q", 1.0)
    if command in ("series",):
        if p is None or alpha is None:
            violations.append("params: series requires p and alpha")
            return
        if p < 1:
            violations.append("params.p: series requires p >= 1")
        if not 0.5 < alpha <= 1.0:
            violations.append("params.alpha: series requires alpha in (1/2, 1]")
        if alpha * p < 1:
            violations.append("params: series requires alpha*p >= 1")
        if p >= 2:
            floor_q = (alpha * p - 1) / (2 * alpha - 1)
            if q <= floor_q:
                violations.append(
                    f"params.q: requires q>(alpha*p-1)/(2*alpha-1)={floor_q:.6g} for p >= 2")
    if command in ("wlln", "lp", "slln"):
        if p is None:
            violations.append(f"params.p: {command} requires p")
        elif not 1 <= p < 2:
            violations.append(f"params.p: {command} requires 1 <= p < 2")
    if command in ("rosenthal", "tailbound"):
        if p is None or alpha is None:
            violations.append(f"params: {command} requires p and alpha for the weight scheme")
        else:
            try:
                WeightScheme(p=p, alpha=alpha, q=q, a=params.get("a"))
            except SpecError as exc:
                violations.append(f"params: {exc}")
    if command == "tailbound" and params.get("eps", 1.0) <= 0:
        violations.append("params.eps: requires eps > 0")
    if command == "moment-series":
        if "marginal" not in params:
            violations.append("params.marginal: moment-series requires a marginal fragment")
        if p is None or not 0 < p < params.get("q", 0):
            violations.append("params: moment-series requires 0 < p < q")
        if alpha is None or alpha <= 0:
            violations.append("params.alpha: moment-series requires alpha > 0")
    if command == "dominate" and not params.get("cells"):
        violations.append("params.cells: dominate requires a nonempty cell list")
    if command == "decompose":
        if int(params.get("m_exp", 4)) < 1 or int(params.get("n_exp", 4)) < 1:
            violations.append("params: decompose requires m_exp, n_exp >= 1")


def _parse_model(raw: dict, violations: list[str]) -> FieldModel | None:
    if "model" not in raw:
        return None
    try:
        return FieldModel.from_fragment(raw["model"])
    except (SpecError, TypeError, KeyError) as exc:
        violations.append(f"model: {exc}")
        return None


_MODEL_COMMANDS = ("decompose", "rosenthal", "tailbound", "series", "slln", "wlln", "lp")


def parse_scenario(path: str | Path) -> Scenario:
    """Parse and fully validate a scenario file; raises ScenarioError carrying
    every violation found, not just the first."""
    try:
        raw = _load_config(path)
    except FileNotFoundError as exc:
        raise ScenarioError([f"io: {exc}"]) from exc
    except (json.JSONDecodeError, tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ScenarioError([f"syntax: {exc}"]) from exc
    violations: list[str] = []
    name = raw.get("name")
    if not name or not isinstance(name, str):
        violations.append("name: scenario requires a string name")
        name = "unnamed"
    command = raw.get("command")
    if command not in COMMANDS:
        violations.append(f"command: must be one of {', '.join(COMMANDS)}; got {command!r}")
    params = raw.get("params", {})
    if not isinstance(params, dict):
        violations.append("params: must be a table")
        params = {}
    model = _parse_model(raw, violations)
    if command in _MODEL_COMMANDS and model is None and "model" not in raw:
        violations.append(f"model: command {command!r} requires a model fragment")
    if command in COMMANDS:
        _validate_params(command, params, violations)
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        violations.append("seed: must be a nonnegative integer")
        seed = 0
    if violations:
        raise ScenarioError(violations)
    return Scenario(name=name, command=command, model=model, params=params,
                    master_seed=seed, out_dir=raw.get("out"), raw=raw)


# ---------------------------------------------------------------------------
# Command execution
# ---------------------------------------------------------------------------


def _ladder_from(params: dict) -> TruncationLadder:
    return TruncationLadder.power(params.get("ladder_alpha", params.get("alpha", 1.0)))


def _family_from(frag: dict | str) -> SlowlyVaryingFamily:
    if isinstance(frag, str):
        frag = {"kind": frag}
    kind = frag.get("kind", "constant")
    if kind == "constant":
        return SlowlyVaryingFamily.constant(frag.get("value", 1.0))
    if kind == "log_power":
        return SlowlyVaryingFamily.log_power(frag.get("gamma", 1.0))
    if kind == "loglog_power":
        return SlowlyVaryingFamily.loglog_power(frag.get("gamma", 1.0))
    if kind == "iterated_log":
        return SlowlyVaryingFamily.iterated_log(frag.get("nu", 1))
    if kind == "iterated_log_sq":
        return SlowlyVaryingFamily.iterated_log_sq(frag.get("nu", 1))
    raise SpecError(f"unknown slowly varying kind {kind!r}")


_BUILTIN_INSTANCES = {
    "walsh_triple": lambda: H2qInstance(
        outcomes=tuple(
            (0.25, (e1, e2, e1 * e2)) for e1 in (-1.0, 1.0) for e2 in (-1.0, 1.0)),
        transforms=(MonotoneTransform.identity(),) * 3,
    ),
    "independent_pair": lambda: H2qInstance(
        outcomes=tuple((0.25, (e1, e2)) for e1 in (-1.0, 1.0) for e2 in (-1.0, 1.0)),
        transforms=(MonotoneTransform.identity(),) * 2,
    ),
}


def _transform_from(frag: dict | str) -> MonotoneTransform:
    if isinstance(frag, str):
        frag = {"kind": frag}
    kind = frag.get("kind", "identity")
    if kind == "identity":
        return MonotoneTransform.identity()
    if kind == "affine":
        return MonotoneTransform.affine(frag.get("slope", 1.0), frag.get("intercept", 0.0))
    if kind == "clamp":
        return MonotoneTransform.clamp(frag.get("lo", -1.0), frag.get("hi", 1.0))
    if kind == "step":
        return MonotoneTransform.step(frag.get("threshold", 0.0),
                                      frag.get("low_value", 0.0),
                                      frag.get("high_value", 1.0))
    raise SpecError(f"unknown transform kind {kind!r}")


def _instance_from(params: dict) -> H2qInstance:
    frag = params.get("instance", "walsh_triple")
    if isinstance(frag, str):
        if frag not in _BUILTIN_INSTANCES:
            raise SpecError(f"unknown builtin instance {frag!r}")
        return _BUILTIN_INSTANCES[frag]()
    outcomes = tuple((float(o["prob"]), tuple(float(v) for v in o["values"]))
                     for o in frag["outcomes"])
    transforms = tuple(_transform_from(t) for t in frag.get(
        "transforms", ["identity"] * len(outcomes[0][1])))
    return H2qInstance(outcomes=outcomes, transforms=transforms)


def _run_decompose(sc: Scenario, threads: int) -> tuple[list[str], dict]:
    p = sc.params
    m_exp, n_exp = int(p.get("m_exp", 4)), int(p.get("n_exp", 4))
    reps = int(p.get("reps", 10))
    ladder = _ladder_from(p)
    rows = []
    worst_resid = 0.0
    worst_slack = None
    for rep in range(reps):
        field_ = sample_field(sc.model, m_exp, n_exp, sc.master_seed, rep)
        rep_report = telescoping_decompose(field_, sc.model, ladder)
        rows.append(rep_report.csv_row(rep))
        worst_resid = max(worst_resid, rep_report.identity_residual)
        rel_slack = rep_report.bound_slack / rep_report.bound_scale
        worst_slack = rel_slack if worst_slack is None else min(worst_slack, rel_slack)
    from .dyadic import DecompositionReport
    csv_lines = [DecompositionReport.CSV_HEADER] + rows
    summary = {
        "m_exp": m_exp, "n_exp": n_exp, "reps": reps,
        "max_identity_residual": worst_resid,
        "min_relative_bound_slack": worst_slack,
    }
    return csv_lines, summary


def _run_rosenthal(sc: Scenario, threads: int) -> tuple[list[str], dict]:
    p = sc.params
    m_exp, n_exp = int(p.get("m_exp", 3)), int(p.get("n_exp", 3))
    scheme = WeightScheme(p=p["p"], alpha=p["alpha"], q=p.get("q", 1.0), a=p.get("a"))
    ladder = _ladder_from(p)
    reps = int(p.get("reps", 500))
    rhs = rosenthal_rhs(sc.model, m_exp, n_exp, scheme, ladder)
    lhs = rosenthal_lhs_mc(sc.model, m_exp, n_exp, scheme.q, ladder, reps, sc.master_seed,
                           threads=threads)
    ledger = InequalityLedger(m=m_exp, n=n_exp, q=scheme.q, alpha=scheme.alpha,
                              a=scheme.a, lhs=lhs, rhs=rhs)
    csv_lines = [InequalityLedger.CSV_HEADER, ledger.csv_row()]
    summary = {
        "m_exp": m_exp, "n_exp": n_exp, "q": scheme.q, "alpha": scheme.alpha,
        "a": scheme.a, "lhs_mean": lhs.mean, "lhs_ci": list(lhs.ci),
        "rhs": rhs, "implied_constant": ledger.implied_constant,
    }
    return csv_lines, summary


def _run_tailbound(sc: Scenario, threads: int) -> tuple[list[str], dict]:
    p = sc.params
    m_exp, n_exp = int(p.get("m_exp", 3)), int(p.get("n_exp", 3))
    scheme = WeightScheme(p=p["p"], alpha=p["alpha"], q=p.get("q", 1.0), a=p.get("a"))
    ladder = _ladder_from(p)
    report = tailbound_check(sc.model, m_exp, n_exp, scheme, ladder,
                             eps=p.get("eps", 1.0), reps=int(p.get("reps", 400)),
                             seed=sc.master_seed, threads=threads)
    header = ("m,n,q,alpha,a,eps,trunc_mean_excess,tail_term,a_mn,"
              "precond_trunc_mean_ok,precond_tail_term_ok,threshold_multiplier,"
              "lhs_tail,lhs_ci_low,lhs_ci_high,rhs_bound")
    lo, hi = report.lhs_tail_mc.ci
    row = (f"{m_exp},{n_exp},{scheme.q!r},{scheme.alpha!r},{scheme.a!r},"
           f"{report.eps!r},{report.trunc_mean_excess!r},{report.tail_term!r},"
           f"{report.a_mn!r},{report.precond_trunc_mean_ok},{report.precond_tail_term_ok},"
           f"{report.threshold_multiplier!r},{report.lhs_tail_mc.mean!r},{lo!r},{hi!r},"
           f"{report.rhs_bound!r}")
    summary = {
        "preconditions_met": report.preconditions_met,
        "precond_trunc_mean_ok": report.precond_trunc_mean_ok,
        "precond_tail_term_ok": report.precond_tail_term_ok,
        "lhs_tail": report.lhs_tail_mc.mean,
        "rhs_bound": report.rhs_bound,
        "threshold_multiplier": report.threshold_multiplier,
    }
    return [header, row], summary


def _run_h2q(sc: Scenario, threads: int) -> tuple[list[str], dict]:
    p = sc.params
    instance = _instance_from(p)
    q = float(p.get("q", 1.0))
    const = h2q_min_constant(instance, q)
    csv_lines = ["q,dimension,outcomes,min_constant",
                 f"{q!r},{instance.dimension},{len(instance.outcomes)},{const!r}"]
    return csv_lines, {"q": q, "min_constant": const}


def _run_series(sc: Scenario, threads: int) -> tuple[list[str], dict]:
    p = sc.params
    family = p.get("sv_family")
    common = dict(p=p["p"], alpha=p["alpha"], eps=p.get("eps", 1.0),
                  max_block=int(p.get("max_block", 8)),
                  reps=int(p.get("reps", 500)), seed=sc.master_seed,
                  threads=threads)
    if family is None:
        est = baum_katz_series(sc.model, **common)
    else:
        est = regular_norming_series(sc.model, sv_family=_family_from(family), **common)
    csv_lines = [est.CSV_HEADER] + est.csv_rows()
    return csv_lines, est.to_json_dict()


def _run_slln(sc: Scenario, threads: int) -> tuple[list[str], dict]:
    p = sc.params
    trace = mz_slln_trace(sc.model, p["p"], int(p.get("max_exp", 8)), sc.master_seed)
    return [trace.CSV_HEADER] + trace.csv_rows(), trace.to_json_dict()


def _run_wlln(sc: Scenario, threads: int) -> tuple[list[str], dict]:
    p = sc.params
    trace = feller_wlln(sc.model, p["p"], [int(e) for e in p.get("grid_exps", [4, 6, 8, 10])],
                        eps=p.get("eps", 1.0), reps=int(p.get("reps", 500)),
                        seed=sc.master_seed, threads=threads)
    return [trace.CSV_HEADER] + trace.csv_rows(), trace.to_json_dict()


def _run_lp(sc: Scenario, threads: int) -> tuple[list[str], dict]:
    p = sc.params
    trace = pyke_root_lp(sc.model, p["p"], [int(e) for e in p.get("grid_exps", [4, 6, 8, 10])],
                         reps=int(p.get("reps", 500)), seed=sc.master_seed, threads=threads)
    return [trace.CSV_HEADER] + trace.csv_rows(), trace.to_json_dict()


def _run_varying(sc: Scenario, threads: int) -> tuple[list[str], dict]:
    p = sc.params
    family = _family_from(p.get("family", {"kind": "log_power", "gamma": 1.0}))
    xs = [float(x) for x in p.get("x_points", [10.0**k for k in range(3, 13)])]
    conj = debruijn_conjugate(family)
    lines = ["x,L,conjugate,residual"]
    residuals = []
    for x in xs:
        resid = debruijn_residual(family, x)
        residuals.append(resid)
        lines.append(f"{x!r},{float(family.value(x))!r},{float(conj.value(x))!r},{resid!r}")
    summary = {"family": family.describe(), "max_residual": max(residuals),
               "final_residual": residuals[-1], "nonincreasing":
               bool(all(residuals[i+1] <= residuals[i] + 1e-15 for i in range(len(residuals)-1)))}
    return lines, summary


def _run_dominate(sc: Scenario, threads: int) -> tuple[list[str], dict]:
    p = sc.params
    cells = [MarginalSpec.from_fragment(f) for f in p["cells"]]
    xs = np.geomspace(p.get("x_min", 0.5), p.get("x_max", 1e6), int(p.get("n_grid", 200)))
    if "candidate" in p:
        candidate = MarginalSpec.from_fragment(p["candidate"])
    else:
        candidate = dominator_model(cells)
    report = domination_check(cells, candidate, xs)
    header = "x," + ",".join(f"cell{i}" for i in range(len(cells))) + ",dominator,candidate"
    lines = [header] + report.csv_rows()
    summary = {"max_violation": report.max_violation,
               "dominates": bool(report.max_violation <= 0)}
    if "ui_p" in p:
        family = _family_from(p.get("ui_family", "constant"))
        trace = uniform_integrability_trace(cells, p["ui_p"], family,
                                            p.get("k_grid", [1.0, 10.0, 100.0]))
        summary["ui_trace"] = {"k_grid": list(trace.k_grid),
                               "values": list(trace.values),
                               "tends_to_zero": trace.tends_to_zero}
    return lines, summary


def _run_moment_series(sc: Scenario, threads: int) -> tuple[list[str], dict]:
    p = sc.params
    marginal = MarginalSpec.from_fragment(p["marginal"])
    report = moment_series_check(marginal, p["p"], p["alpha"], p["q"],
                                 max_term=int(p.get("max_term", 64)))
    lines = ["index,tail_power_shell,trunc_power_shell,tail_dyadic,trunc_dyadic"]
    n = max(len(report.shell_index), len(report.diag_index))
    for i in range(n):
        sh = report.shell_index[i] if i < len(report.shell_index) else ""
        tp = repr(report.tail_power_terms[i]) if i < len(report.tail_power_terms) else ""
        rp = repr(report.trunc_power_terms[i]) if i < len(report.trunc_power_terms) else ""
        td = repr(report.tail_dyadic_terms[i]) if i < len(report.tail_dyadic_terms) else ""
        rd = repr(report.trunc_dyadic_terms[i]) if i < len(report.trunc_dyadic_terms) else ""
        lines.append(f"{sh},{tp},{rp},{td},{rd}")
    cls = dict(report.classifications)
    fitted = cls.pop("fitted")
    summary = {"classifications": cls, "fitted_rates": fitted,
               "moment_value": (report.moment_value
                                if report.moment_value != float("inf") else "inf"),
               "agree": report.agree()}
    return lines, summary


_RUNNERS = {
    "decompose": _run_decompose,
    "rosenthal": _run_rosenthal,
    "tailbound": _run_tailbound,
    "h2q": _run_h2q,
    "series": _run_series,
    "slln": _run_slln,
    "wlln": _run_wlln,
    "lp": _run_lp,
    "varying": _run_varying,
    "dominate": _run_dominate,
    "moment-series": _run_moment_series,
}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(scenario: Scenario, out_dir: str | Path | None = None, threads: int = 1,
        fmt: str = "both") -> RunManifest:
    """Execute the scenario, write artifacts, return the manifest.  Partial
    outputs are removed if the command fails."""
    if fmt not in ("csv", "json", "both"):
        raise ScenarioError([f"format: must be csv|json|both, got {fmt!r}"])
    out = Path(out_dir or scenario.out_dir or "runs")
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    stem = f"{scenario.name}_{scenario.command.replace('-', '_')}"
    written: list[Path] = []
    try:
        csv_lines, summary = _RUNNERS[scenario.command](scenario, threads)
        summary_doc = {
            "scenario": scenario.name,
            "command": scenario.command,
            "seed": scenario.master_seed,
            "params": scenario.params,
            "results": summary,
        }
        if fmt in ("csv", "both"):
            csv_path = out / f"{stem}.csv"
            csv_path.write_text("\n".join(csv_lines) + "\n")
            written.append(csv_path)
        if fmt in ("json", "both"):
            json_path = out / f"{stem}.json"
            json_path.write_text(json.dumps(summary_doc, sort_keys=True, indent=2) + "\n")
            written.append(json_path)
    except Exception:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    files = {p.name: _sha256(p) for p in written}
    manifest = RunManifest(
        scenario_hash=scenario.canonical_hash(),
        toolkit_version=__version__,
        started_at=started,
        finished_at=time.time(),
        seed=scenario.master_seed,
        command=scenario.command,
        files=files,
    )
    (out / f"{stem}_manifest.json").write_text(
        json.dumps(manifest.to_json_dict(), sort_keys=True, indent=2) + "\n")
    return manifest


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyadicfields",
        description="Scenario runner for the random-field limit toolkit")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for cmd in COMMANDS + ("validate",):
        sp = sub.add_parser(cmd, help=f"run a {cmd} scenario" if cmd != "validate"
                            else "parse and validate a scenario without running it")
        sp.add_argument("--config", required=True, help="scenario TOML or JSON file")
        if cmd != "validate":
            sp.add_argument("--seed", type=int, default=None, help="override the config seed")
            sp.add_argument("--out", default=None, help="output directory")
            sp.add_argument("--threads", type=int, default=1,
                            help="worker threads (speed only, never results)")
            sp.add_argument("--format", default="both", choices=("csv", "json", "both"))
    mp = sub.add_parser("manifest", help="inspect a prior run manifest")
    mp.add_argument("--out", required=True, help="directory holding the run")
    mp.add_argument("--name", default=None, help="scenario stem to inspect")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.subcommand == "manifest":
        out = Path(args.out)
        pattern = f"{args.name}*_manifest.json" if args.name else "*_manifest.json"
        found = sorted(out.glob(pattern))
        if not found:
            print(json.dumps({"error": "no manifest found", "dir": str(out)}), file=sys.stderr)
            return 3
        for mf in found:
            print(mf.read_text().rstrip())
        return 0
    try:
        scenario = parse_scenario(args.config)
    except ScenarioError as exc:
        print(json.dumps({"error": "config", "violations": exc.violations}), file=sys.stderr)
        return 2
    if args.subcommand == "validate":
        print(json.dumps({"ok": True, "name": scenario.name, "command": scenario.command,
                          "hash": scenario.canonical_hash()}))
        return 0
    if scenario.command != args.subcommand:
        print(json.dumps({"error": "config",
                          "violations": [f"command: config says {scenario.command!r} "
                                         f"but subcommand is {args.subcommand!r}"]}),
              file=sys.stderr)
        return 2
    if args.seed is not None:
        scenario = Scenario(name=scenario.name, command=scenario.command,
                            model=scenario.model, params=scenario.params,
                            master_seed=args.seed, out_dir=scenario.out_dir,
                            raw={**scenario.raw, "seed": args.seed})
    try:
        manifest = run(scenario, out_dir=args.out, threads=args.threads, fmt=args.format)
    except ScenarioError as exc:
        print(json.dumps({"error": "config", "violations": exc.violations}), file=sys.stderr)
        return 2
    except (SpecError, KeyError, ValueError) as exc:
        print(json.dumps({"error": "runtime", "detail": str(exc)}), file=sys.stderr)
        return 3
    print(json.dumps({"ok": True, "files": manifest.files}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
