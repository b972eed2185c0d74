"""Command-line entry point.

Exit codes: 0 success (or every experiment passed), 1 an experiment failed or
was inconclusive, 2 usage or domain error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, _io, experiments
from .errors import DomainError, NumericalError, PreconditionError
from .exact import eval_barenblatt, fundamental_params, support_radius
from .nonlinearity import PowerLog, Tabulated, Verdict, classify, from_dict
from .ode_flow import FlatFlow, phi_inf, phi_trace
from .solver import (
    FixedDirichlet,
    RadialGrid,
    SolveConfig,
    ZeroDirichlet,
    ZeroFlux,
    dirac_initial,
    solve,
)
from .steady import blowup_annulus, picard_steady

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3

_CFS_WORDS = {Verdict.FINITE: "holds", Verdict.INFINITE: "fails", Verdict.UNDECIDED: "undecided"}


@dataclass
class RunManifest:
    """Reproducibility record written next to every output."""

    version: str
    command: str
    config: dict
    input_hashes: dict = field(default_factory=dict)
    wall_time: float = 0.0
    tolerances: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(_io.to_jsonable(dataclasses.asdict(self)), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(self.to_json())
        return path


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# --------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, spec=True):
    p.add_argument("--config", help="JSON file of defaults; flags override it")
    p.add_argument("--out", help="output file or directory")
    if spec:
        p.add_argument("--alpha", type=float, help="power exponent of f = s^alpha ln^beta(s+1)")
        p.add_argument("--beta", type=float, help="log exponent (default 0)")
        p.add_argument("--table", help="CSV of (s, f(s)) pairs for a tabulated f")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="plap", description="p-Laplacian evolution with absorption: numerical laboratory")
    parser.add_argument("--version", action="version", version=f"plap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", help="decide J, K and the CFS condition")
    _common(p)
    p.add_argument("--p", type=float)
    p.add_argument("--dim", type=int)

    p = sub.add_parser("ode-flow", help="CSV trace (t, phi) of the flat flow")
    _common(p)
    p.add_argument("--a", help="initial value, or 'inf' for the maximal solution")
    p.add_argument("--t-max", type=float)
    p.add_argument("--n", type=int, help="number of sample times")

    p = sub.add_parser("barenblatt", help="CSV profile (r, u, t) of the fundamental solution")
    _common(p, spec=False)
    p.add_argument("--p", type=float)
    p.add_argument("--dim", type=int)
    p.add_argument("--k", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--r-max", type=float)
    p.add_argument("--n", type=int)

    p = sub.add_parser("steady-state", help="radial steady state w_a by Picard iteration")
    _common(p)
    p.add_argument("--p", type=float)
    p.add_argument("--dim", type=int)
    p.add_argument("--a", type=float)
    p.add_argument("--r-max", type=float)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("blowup-annulus", help="annulus solution with large boundary values")
    _common(p)
    p.add_argument("--p", type=float)
    p.add_argument("--dim", type=int)
    p.add_argument("--eps", type=float, help="inner radius")
    p.add_argument("--R", type=float, help="outer radius")
    p.add_argument("--m", type=float, help="boundary value")
    p.add_argument("--grid-size", type=int)

    p = sub.add_parser("solve", help="implicit solve from Dirac-like data")
    _common(p)
    p.add_argument("--p", type=float)
    p.add_argument("--dim", type=int)
    p.add_argument("--k", type=float, help="initial mass")
    p.add_argument("--eps", type=float, help="data are v_k(., eps)")
    p.add_argument("--R", type=float, help="domain radius (default from the support)")
    p.add_argument("--M", type=int, help="number of cells")
    p.add_argument("--h", type=float, help="time step")
    p.add_argument("--T", type=float, help="final time")
    p.add_argument("--growth", type=float, help="cap the step at growth * t")
    p.add_argument("--record", type=float, nargs="*", help="snapshot times")
    p.add_argument("--boundary", choices=["dirichlet", "neumann"])
    p.add_argument("--flux-reg", type=float)

    p = sub.add_parser("experiment", help="run a scripted experiment and write its report")
    p.add_argument("name", choices=sorted(_EXPERIMENTS))
    _common(p)
    p.add_argument("--p", type=float)
    p.add_argument("--dim", type=int)
    return parser


# --------------------------------------------------------------------------
# config resolution: flags > config file > defaults


def _load_config(args) -> tuple[dict, dict]:
    if not args.config:
        return {}, {}
    path = Path(args.config)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DomainError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise DomainError("config file must hold a JSON object")
    return data, {str(path): file_sha256(path)}


def _resolve(args, config: dict, defaults: dict, rename=None) -> dict:
    """Merge defaults, config entries and explicit flags (in rising priority)."""
    rename = rename or {}
    out = dict(defaults)
    out.update({k: v for k, v in config.items() if k != "spec"})
    for key in defaults:
        flag = rename.get(key, key)
        val = getattr(args, flag, None)
        if val is not None:
            out[key] = val
    return out


def _read_table(path) -> Tabulated:
    rows = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
    if rows.shape[1] != 2:
        raise DomainError("table must have two columns (s, f)")
    return Tabulated(tuple(map(tuple, rows.tolist())))


def _resolve_spec(args, config: dict, default=None):
    if getattr(args, "table", None):
        return _read_table(args.table)
    base = config.get("spec")
    if getattr(args, "alpha", None) is not None:
        beta = args.beta if args.beta is not None else (base or {}).get("beta", 0.0)
        return PowerLog(args.alpha, beta)
    if base is not None:
        spec = from_dict(base)
        if args.beta is not None and isinstance(spec, PowerLog):
            spec = PowerLog(spec.alpha, args.beta)
        return spec
    if default is None:
        raise DomainError("a nonlinearity is required: give --alpha [--beta], --table or a config 'spec'")
    return default


def _require(values: dict, *keys):
    missing = [k for k in keys if values.get(k) is None]
    if missing:
        raise DomainError("missing required value(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


def _out_path(args, config, default: str) -> Path:
    """Output location: ``--out`` flag, else ``PLAP_OUT_DIR``, else config ``out``, else ``default``."""
    if args.out:
        return Path(args.out)
    env = _io.output_dir()
    if env is not None:
        return env / Path(default).name
    if config.get("out"):
        return Path(config["out"])
    return Path(default)


# --------------------------------------------------------------------------
# subcommands


def _cmd_classify(args, config, hashes):
    vals = _resolve(args, config, {"p": None, "dim": None})
    _require(vals, "p", "dim")
    spec = _resolve_spec(args, config)
    rep = classify(spec, vals["p"], int(vals["dim"]))
    print(f"J={rep.j_finite.value} K={rep.k_finite.value} CFS={_CFS_WORDS[rep.cfs_holds]}")
    return EXIT_OK, {"spec": spec.to_dict(), **vals}, rep.to_dict(), None


def _cmd_ode_flow(args, config, hashes):
    vals = _resolve(args, config, {"a": None, "t_max": 1.0, "n": 101})
    _require(vals, "a")
    spec = _resolve_spec(args, config)
    a = math.inf if str(vals["a"]).lower() in ("inf", "infinity") else float(vals["a"])
    times = np.linspace(0.0, float(vals["t_max"]), int(vals["n"]))
    if math.isinf(a):
        times = times[times > 0]
        values = [phi_inf(spec, float(t)) for t in times]
    else:
        values = phi_trace(FlatFlow(spec, a), times)
    out = _out_path(args, config, "ode_flow.csv")
    _io.write_csv(out, ["t", "phi"], zip(times, values))
    return EXIT_OK, {"spec": spec.to_dict(), **vals}, {"rows": len(times)}, out


def _cmd_barenblatt(args, config, hashes):
    vals = _resolve(args, config, {"p": None, "dim": None, "k": 1.0, "t": 1.0, "r_max": None, "n": 201})
    _require(vals, "p", "dim")
    params = fundamental_params(vals["p"], int(vals["dim"]), vals["k"])
    r_max = vals["r_max"]
    if r_max is None:
        r_max = 1.5 * support_radius(params, vals["t"]) if params.p > 2.0 else 10.0 * vals["t"] ** (params.lam / params.N)
    r = np.linspace(0.0, float(r_max), int(vals["n"]))
    u = eval_barenblatt(params, r, vals["t"])
    out = _out_path(args, config, "barenblatt.csv")
    _io.write_csv(out, ["r", "u", "t"], [(ri, ui, vals["t"]) for ri, ui in zip(r, u)])
    return EXIT_OK, {**vals, "r_max": r_max}, {"C_k": params.C_k, "lam": params.lam}, out


def _cmd_steady_state(args, config, hashes):
    vals = _resolve(args, config, {"p": None, "dim": None, "a": None, "r_max": 10.0, "tol": 1e-10})
    _require(vals, "p", "dim", "a")
    spec = _resolve_spec(args, config)
    prof = picard_steady(spec, vals["p"], int(vals["dim"]), vals["a"], vals["r_max"], tol=vals["tol"])
    out = _out_path(args, config, "steady_state.csv")
    _io.write_csv(out, ["r", "w"], zip(prof.r, prof.w))
    status = type(prof.status).__name__
    radius = getattr(prof.status, "radius", None)
    print(f"status={status}" + (f" radius={_io.format_float(radius)}" if radius is not None else ""))
    return EXIT_OK, {"spec": spec.to_dict(), **vals}, {"status": status, "radius": radius}, out


def _cmd_blowup_annulus(args, config, hashes):
    vals = _resolve(
        args, config, {"p": None, "dim": None, "eps": 0.1, "R": 2.0, "m": 100.0, "grid_size": 400}
    )
    _require(vals, "p", "dim")
    spec = _resolve_spec(args, config)
    prof = blowup_annulus(spec, vals["p"], int(vals["dim"]), vals["eps"], vals["R"], vals["m"], grid_size=int(vals["grid_size"]))
    out = _out_path(args, config, "blowup_annulus.csv")
    _io.write_csv(out, ["r", "w"], zip(prof.r, prof.w))
    return EXIT_OK, {"spec": spec.to_dict(), **vals}, {"newton_iterations": prof.newton_iterations, "residual": prof.residual}, out


def _cmd_solve(args, config, hashes):
    defaults = {
        "p": None,
        "dim": None,
        "k": 1.0,
        "eps": 1e-3,
        "R": None,
        "M": None,
        "h": None,
        "T": 1.0,
        "growth": 0.05,
        "record": None,
        "boundary": "dirichlet",
        "flux_reg": None,
    }
    vals = _resolve(args, config, defaults)
    _require(vals, "p", "dim")
    spec = _resolve_spec(args, config)
    p, N = float(vals["p"]), int(vals["dim"])
    params = fundamental_params(p, N, vals["k"])
    R = vals["R"]
    if R is None:
        R = experiments._domain_radius(params, vals["T"])
    M = int(vals["M"]) if vals["M"] is not None else int(math.ceil(R / 0.01))
    grid = RadialGrid(N, float(R), M)
    h = vals["h"] if vals["h"] is not None else 0.5 * grid.dr
    record = tuple(vals["record"]) if vals["record"] else (float(vals["T"]),)
    boundary = ZeroDirichlet() if vals["boundary"] == "dirichlet" else ZeroFlux()
    cfg = SolveConfig(
        h=h, T=vals["T"], record_times=record, growth=vals["growth"], boundary=boundary, flux_reg=vals["flux_reg"]
    )
    run = solve(dirac_initial(params, grid, vals["eps"]), spec, p, cfg)
    out = _out_path(args, config, "solve.csv")
    rows = [(r, u, s.t) for s in run.snapshots for r, u in zip(grid.centers, s.values)]
    _io.write_csv(out, ["r", "u", "t"], rows)
    results = {
        "grid": grid.to_dict(),
        "flux_reg": run.flux_reg,
        "newton_iterations": run.newton_iterations.tolist(),
        "ledger": {
            "columns": ["t", "mass", "absorbed", "outflow", "clipped", "newton"],
            "rows": run.ledger.tolist(),
        },
        "max_balance_defect": float(run.balance_defect().max()),
    }
    return EXIT_OK, {"spec": spec.to_dict(), **vals, "R": R, "M": M, "h": h}, results, out


def _experiment_kwargs(name, args, config):
    kwargs = {k: v for k, v in config.items() if k not in ("spec", "out")}
    if args.p is not None:
        kwargs["p"] = args.p
    if args.dim is not None:
        kwargs["N"] = args.dim
    if "dim" in kwargs:
        kwargs["N"] = kwargs.pop("dim")
    if args.alpha is not None or args.table or "spec" in config:
        kwargs["spec"] = _resolve_spec(args, config)
    for key in ("zetas",):
        kwargs.pop(key, None)
    return kwargs


_EXPERIMENTS = {
    "fundamental": experiments.run_fundamental,
    "lemma-int": experiments.run_lemma_int,
    "k-limit": experiments.run_k_limit,
    "nonuniqueness": experiments.run_nonuniqueness,
    "universal": experiments.run_universal_estimate,
    "razor-blade": experiments.run_razor_blade,
    "trace": experiments.run_trace,
}

_LEMMA_DEFAULTS = {"p": 2.0, "N": 2}


def _cmd_experiment(args, config, hashes):
    func = _EXPERIMENTS[args.name]
    kwargs = _experiment_kwargs(args.name, args, config)
    if args.name == "lemma-int":
        kwargs = {**_LEMMA_DEFAULTS, **kwargs}
    out_dir = _out_path(args, config, f"plap_out/{args.name}")
    try:
        report = func(**kwargs, out_dir=out_dir)
    except TypeError as exc:
        raise DomainError(f"bad experiment configuration: {exc}") from exc
    print(f"{report.name}: {report.verdict.value}")
    for m in report.metrics:
        mark = "" if m.threshold is None else (" ok" if m.passed else " FAILED")
        print(f"  {m.label} = {m.value}{mark}")
    code = EXIT_OK if report.verdict is experiments.Outcome.PASS else EXIT_FAIL
    return code, {"experiment": args.name, **kwargs}, report.to_dict(), out_dir / "manifest.json"


_COMMANDS = {
    "classify": _cmd_classify,
    "ode-flow": _cmd_ode_flow,
    "barenblatt": _cmd_barenblatt,
    "steady-state": _cmd_steady_state,
    "blowup-annulus": _cmd_blowup_annulus,
    "solve": _cmd_solve,
    "experiment": _cmd_experiment,
}

_TOLERANCES = {
    "solver.newton_tol": 1e-12,
    "solver.flux_reg_rel": 1e-8,
    "steady.blowup_threshold": 1e12,
    "ode_flow.quad_epsrel": 1e-13,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    start = time.perf_counter()
    try:
        config, hashes = _load_config(args)
        code, resolved, results, out = _COMMANDS[args.command](args, config, hashes)
    except (DomainError, PreconditionError) as exc:
        print(f"plap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"plap: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if out is not None:
        manifest = RunManifest(
            version=__version__,
            command=args.command,
            config=_io.to_jsonable(resolved),
            input_hashes=hashes,
            wall_time=time.perf_counter() - start,
            tolerances=dict(_TOLERANCES),
            results=_io.to_jsonable(results),
        )
        path = out if out.suffix == ".json" else out.with_name(out.stem + ".manifest.json")
        manifest.write(path)
    return code


if __name__ == "__main__":
    sys.exit(main())
