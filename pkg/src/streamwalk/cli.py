"""Command-line front end.

One binary, subcommand style:

    streamwalk thresholds --lmax K
    streamwalk profile --alpha A --L L [--solver closed|linear]
    streamwalk simulate --alpha A --beta B [--confine L] --steps N --seed S
    streamwalk verify LOG --L L [--eps E --D D]
    streamwalk experiment {trapping|convergence|streams|coupling|range} ...

Parameters may also come from a flat key=value config file (--config);
explicit flags override file values, and --dump-config prints the fully
resolved configuration in the same format.  Data goes to stdout or to
files; progress logging goes to stderr (level via STREAMWALK_LOG).

Exit codes: 0 success, 1 failed assertions/verdicts, 2 invalid arguments.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

from . import analysis, experiments, profiles, reporting
from .kernels import InteractionKernel
from .walk import WalkParameters, run_walk

logger = logging.getLogger("streamwalk")


@dataclasses.dataclass
class RunConfig:
    """Resolved run configuration: walk parameters plus experiment fields."""

    alpha: float | None = None
    beta: float = 1.0
    L: int | None = None
    steps: int | None = None
    horizon: int = 100_000
    trials: int = 100
    checkpoints: int = 96
    seed: int = 0
    record: str = "full"
    solver: str = "auto"
    lmax: int = 10
    eps: float | None = None
    D: float | None = None
    gamma: float = 0.01
    M: float = 1.0
    threads: int = 1
    out: str | None = None
    out_prefix: str | None = None


_FIELD_TYPES = {f.name: f for f in dataclasses.fields(RunConfig)}
_PARSERS = {
    "alpha": float, "beta": float, "L": int, "steps": int, "horizon": int,
    "trials": int, "checkpoints": int, "seed": int, "record": str,
    "solver": str, "lmax": int, "eps": float, "D": float, "gamma": float,
    "M": float, "threads": int, "out": str, "out_prefix": str,
}


def parse_config_file(path: str, error) -> dict:
    values = {}
    try:
        with open(path) as f:
            lines = f.readlines()
    except OSError as exc:
        error(f"--config: cannot read {path}: {exc}")
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            error(f"--config {path}:{lineno}: expected key=value, got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _PARSERS:
            error(f"--config {path}:{lineno}: unknown parameter {key!r}")
        if raw == "":
            values[key] = None
            continue
        try:
            values[key] = _PARSERS[key](raw)
        except ValueError:
            error(f"--config {path}:{lineno}: bad value for {key}: {raw!r}")
    return values


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for f in dataclasses.fields(RunConfig):
        v = getattr(cfg, f.name)
        lines.append(f"{f.name}=" if v is None else f"{f.name}={v}")
    return "\n".join(lines) + "\n"


def resolve_config(args: argparse.Namespace, error) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        for key, value in parse_config_file(args.config, error).items():
            setattr(cfg, key, value)
    for key in _PARSERS:
        flag = getattr(args, key, None)
        if flag is not None:
            setattr(cfg, key, flag)
    return cfg


def _require(cfg: RunConfig, error, *names: str) -> None:
    for name in names:
        if getattr(cfg, name) is None:
            error(f"--{name} is required (set it as a flag or in --config)")


def _open_out(path: str | None):
    if path is None:
        return sys.stdout, False
    return open(path, "w"), True


def _write(path: str | None, writer) -> None:
    f, close = _open_out(path)
    try:
        writer(f)
    finally:
        if close:
            f.close()


def cmd_thresholds(args, error) -> int:
    cfg = resolve_config(args, error)
    if args.dump_config:
        sys.stdout.write(dump_config(cfg))
        return 0
    if cfg.lmax < 1:
        error("--lmax must be >= 1")

    def write(f):
        f.write("L,alpha_L\n")
        for row in profiles.threshold_table(cfg.lmax):
            f.write(f"{row.L},{reporting.fmt(row.value)}\n")

    _write(cfg.out, write)
    return 0


def cmd_profile(args, error) -> int:
    cfg = resolve_config(args, error)
    if args.dump_config:
        sys.stdout.write(dump_config(cfg))
        return 0
    _require(cfg, error, "alpha", "L")
    if cfg.L < 1:
        error("--L must be >= 1")
    if cfg.solver not in ("auto", "closed", "linear"):
        error("--solver must be auto, closed or linear")
    alpha, L = cfg.alpha, cfg.L
    in_window = profiles.ALPHA_INF < alpha < profiles.alpha_threshold(L)
    use_closed = cfg.solver == "closed" or (cfg.solver == "auto" and in_window)
    if cfg.solver == "closed" and not in_window:
        error("--solver closed needs 1/3 < --alpha < alpha_threshold(--L)")
    try:
        if use_closed:
            lp = profiles.limit_profile(alpha, L)
            u, raw = lp.u, lp.u * lp.znorm
            meta = {
                "alpha": alpha, "L": L, "omega": lp.omega, "phi": lp.phi,
                "d0": lp.d0, "dL1": lp.dL1, "Z": lp.znorm, "solver": "closed",
            }
        else:
            u = profiles.solve_profile_system(InteractionKernel.default(alpha), L)
            raw = u
            d0, dL1 = profiles.boundary_streams(u, alpha)
            meta = {
                "alpha": alpha, "L": L, "omega": None, "phi": None,
                "d0": d0, "dL1": dL1, "Z": None, "solver": "linear",
            }
    except profiles.ProfileSystemError as exc:
        logger.error("profile system singular: %s (cond=%s)", exc, exc.condition)
        return 1
    if args.json:
        sys.stdout.write(json.dumps(meta, indent=2) + "\n")
        return 0
    if cfg.out:
        with open(cfg.out + ".csv", "w") as f:
            reporting.write_profile_csv(u, raw, f)
        with open(cfg.out + ".json", "w") as f:
            f.write(json.dumps(meta, indent=2) + "\n")
        logger.info("wrote %s.csv and %s.json", cfg.out, cfg.out)
    else:
        reporting.write_profile_csv(u, raw, sys.stdout)
    return 0


def cmd_simulate(args, error) -> int:
    cfg = resolve_config(args, error)
    if args.dump_config:
        sys.stdout.write(dump_config(cfg))
        return 0
    _require(cfg, error, "alpha", "steps")
    if cfg.steps < 0:
        error("--steps must be >= 0")
    if cfg.record not in ("full", "thin"):
        error("--record must be full or thin")
    try:
        params = WalkParameters(
            alpha=cfg.alpha, beta=cfg.beta, confinement=cfg.L, seed=cfg.seed
        )
    except ValueError as exc:
        error(f"--confine/--beta: {exc}")
    logger.info(
        "simulate alpha=%s beta=%s confine=%s steps=%d seed=%d",
        cfg.alpha, cfg.beta, cfg.L, cfg.steps, cfg.seed,
    )
    walk_log = run_walk(params, cfg.steps, record_interval=1 if cfg.record == "full" else 0)

    def write(f):
        if cfg.record == "full":
            reporting.write_trajectory_csv(walk_log, f)
        else:
            reporting.write_snapshot_csv(walk_log.final_local_times, f)

    _write(cfg.out, write)
    if cfg.out:
        with open(cfg.out + ".meta.json", "w") as f:
            f.write(json.dumps({"config": dataclasses.asdict(cfg)}, indent=2) + "\n")
    return 0


def _load_meta(path: str) -> dict:
    meta_path = path + ".meta.json"
    if os.path.exists(meta_path):
        try:
            with open(meta_path) as f:
                return json.load(f).get("config", {})
        except (OSError, json.JSONDecodeError):
            logger.warning("ignoring unreadable sidecar %s", meta_path)
    return {}


def cmd_verify(args, error) -> int:
    cfg = resolve_config(args, error)
    if args.dump_config:
        sys.stdout.write(dump_config(cfg))
        return 0
    meta = _load_meta(args.log)
    alpha = cfg.alpha if cfg.alpha is not None else meta.get("alpha")
    beta = cfg.beta if args.beta is not None else meta.get("beta", cfg.beta)
    L = cfg.L if cfg.L is not None else meta.get("L")
    if alpha is None:
        error("--alpha is required (no sidecar metadata found)")
    if L is None:
        error("--L is required (no sidecar metadata found)")
    params = WalkParameters(alpha=alpha, beta=beta)
    try:
        with open(args.log) as f:
            walk_log = reporting.read_trajectory_csv(f, params)
    except OSError as exc:
        error(f"log: cannot read {args.log}: {exc}")
    except ValueError as exc:
        error(f"log: {exc}")
    logger.info("verify %s: %d steps, L=%d", args.log, walk_log.n_steps, L)
    lip = analysis.check_stream_lipschitz(walk_log, L)
    jumps = analysis.upstream_jumps(walk_log, L)
    stream = analysis.max_interior_stream(walk_log, L)
    instances = analysis.scan_confinement_instances(walk_log, L)
    held = sum(1 for c in instances if c.verdict is analysis.Verdict.HOLDS)
    if cfg.eps is not None and cfg.D is not None:
        eps, big_d = cfg.eps, cfg.D
    else:
        eps, big_d = analysis.proposition_reference_constants(cfg.gamma, L)
        if cfg.eps is not None:
            eps = cfg.eps
        if cfg.D is not None:
            big_d = cfg.D
    prop = analysis.check_proposition_instance(walk_log, L, eps, big_d)
    report = {
        "lipschitz": "pass" if lip.ok else "fail",
        "confinement_instances": {"checked": len(instances), "held": held},
        "proposition": {"eps": eps, "D": big_d, "verdict": prop.verdict.value},
        "upstream_jumps": len(jumps),
        "max_stream": float(stream.running_max[-1]) if stream.running_max.size else 0.0,
    }
    sys.stdout.write(json.dumps(reporting._jsonable(report), indent=2) + "\n")
    ok = (
        lip.ok
        and held == len(instances)
        and prop.verdict is not analysis.Verdict.VIOLATED
    )
    return 0 if ok else 1


_EXPERIMENTS = ("trapping", "convergence", "streams", "coupling", "range")


def cmd_experiment(args, error) -> int:
    cfg = resolve_config(args, error)
    if args.dump_config:
        sys.stdout.write(dump_config(cfg))
        return 0
    kind = args.kind
    _require(cfg, error, "alpha")
    if cfg.threads < 1:
        error("--threads must be >= 1")
    logger.info("experiment %s: %s", kind, dump_config(cfg).replace("\n", " "))
    if kind == "trapping":
        summary = experiments.trapping_probability_experiment(
            cfg.alpha, cfg.beta, cfg.trials, cfg.horizon, cfg.seed, cfg.threads
        )
        recomputed = experiments.aggregate_trapping(summary.rows, summary.trials)
    elif kind == "range":
        summary = experiments.range_growth_experiment(
            cfg.alpha, cfg.beta, cfg.trials, cfg.horizon, cfg.seed, cfg.threads
        )
        recomputed = experiments.aggregate_range(summary.rows, summary.trials)
    elif kind == "convergence":
        _require(cfg, error, "L")
        summary = experiments.profile_convergence_experiment(
            cfg.alpha, cfg.L, cfg.beta, cfg.horizon, cfg.checkpoints, cfg.seed
        )
        recomputed = summary.aggregates
    elif kind == "streams":
        _require(cfg, error, "L")
        summary = experiments.stream_growth_experiment(
            cfg.alpha, cfg.L, cfg.beta, cfg.horizon, cfg.seed, cfg.checkpoints
        )
        recomputed = summary.aggregates
    elif kind == "coupling":
        _require(cfg, error, "L")
        summary = experiments.coupling_survival_experiment(
            cfg.alpha, cfg.L, cfg.beta, cfg.horizon, cfg.trials, cfg.seed,
            cfg.checkpoints, cfg.threads,
        )
        recomputed = experiments.aggregate_coupling(summary.rows, summary.trials)
    else:  # pragma: no cover - argparse restricts choices
        error(f"unknown experiment {kind!r}")
    summary.params["config"] = dataclasses.asdict(cfg)
    if cfg.out_prefix:
        if kind in ("trapping", "range"):
            with open(cfg.out_prefix + ".trials.csv", "w") as f:
                reporting.write_trial_csv(summary.rows, f)
        if kind == "coupling":
            with open(cfg.out_prefix + ".trials.csv", "w") as f:
                reporting.write_checkpoint_csv(
                    summary.rows,
                    ("trial", "seed", "final_log_survival", "survival", "converged"),
                    f,
                )
        if summary.checkpoint_rows:
            cols = tuple(summary.checkpoint_rows[0].keys())
            with open(cfg.out_prefix + ".checkpoints.csv", "w") as f:
                reporting.write_checkpoint_csv(summary.checkpoint_rows, cols, f)
        with open(cfg.out_prefix + ".summary.json", "w") as f:
            f.write(reporting.summary_json(summary) + "\n")
        logger.info("wrote %s.*", cfg.out_prefix)
    else:
        sys.stdout.write(reporting.summary_json(summary) + "\n")
    if reporting._jsonable(recomputed) != reporting._jsonable(summary.aggregates):
        logger.error("aggregate consistency check failed")
        return 1
    return 0


def _add_config_options(p: argparse.ArgumentParser, *names: str) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--dump-config", action="store_true",
                   help="print the resolved configuration and exit")
    option_kwargs = {
        "alpha": dict(type=float, help="interaction strength alpha"),
        "beta": dict(type=float, help="inverse temperature beta > 0"),
        "L": dict(type=int, help="interior length L"),
        "steps": dict(type=int, help="number of steps"),
        "horizon": dict(type=int, help="steps per trial"),
        "trials": dict(type=int, help="number of trials"),
        "checkpoints": dict(type=int, help="number of geometric checkpoints"),
        "seed": dict(type=int, help="master seed (64-bit)"),
        "record": dict(choices=("full", "thin"), help="recording mode"),
        "solver": dict(choices=("auto", "closed", "linear"), help="profile solver"),
        "lmax": dict(type=int, help="largest interior length to tabulate"),
        "eps": dict(type=float, help="upstream-intensity factor for the implication check"),
        "D": dict(type=float, help="stream bound for the implication check"),
        "gamma": dict(type=float, help="geometric weight for stream thresholds"),
        "M": dict(type=float, help="intensity threshold"),
        "threads": dict(type=int, help="worker threads (does not change results)"),
        "out": dict(help="output file (default stdout)"),
        "out_prefix": dict(help="prefix for experiment output files"),
    }
    for name in names:
        kw = dict(option_kwargs[name])
        flags = [f"--{name}"]
        if name == "L":
            flags.append("--confine")
        if name == "out_prefix":
            flags = ["--out-prefix"]
        p.add_argument(*flags, dest=name, default=None, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streamwalk",
        description="Self-interacting walk simulator, profile solver and analyzer",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("thresholds", help="tabulate trapping thresholds alpha_L")
    _add_config_options(p, "lmax", "out")
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("profile", help="limiting local-time profile")
    _add_config_options(p, "alpha", "L", "solver", "out")
    p.add_argument("--json", action="store_true", help="print the JSON sidecar instead of CSV")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("simulate", help="run one walk and record it")
    _add_config_options(p, "alpha", "beta", "L", "steps", "seed", "record", "out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="path diagnostics over a recorded trajectory")
    p.add_argument("log", help="trajectory CSV (full recording)")
    _add_config_options(p, "alpha", "beta", "L", "eps", "D", "gamma", "M")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment", help="Monte Carlo experiments")
    p.add_argument("kind", choices=_EXPERIMENTS)
    _add_config_options(
        p, "alpha", "beta", "L", "trials", "horizon", "checkpoints", "seed",
        "threads", "out_prefix",
    )
    p.set_defaults(func=cmd_experiment)
    return parser


def dispatch(argv=None) -> int:
    level = os.environ.get("STREAMWALK_LOG", "warning").upper()
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args, parser.error)


def main() -> None:
    sys.exit(dispatch())
