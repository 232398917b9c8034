"""``netmed`` command line: generate, fit, select-dim, simulate, check-invariance, summarize."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .lsm import select_dimension
from .mediation import InfeasibleConditionError
from .netcore import (NetworkFormatError, density, format_actors, format_matrix, load_actors,
                      load_network)
from .sampler import (ChainConfig, ChainDraws, NumericalError, PosteriorSummary, config_dict,
                      run_chain, summarize)
from .simstudy import (SimCondition, estimate_runtime, generate_dataset,
                       generate_empirical_replica, grid_csv, load_grid, replications_csv, run_grid)
from .transforms import invariance_suite

log = logging.getLogger("netmed")

SCHEMA_VERSION = 1
CSV_SCHEMA_LINE = f"# netmed schema_version={SCHEMA_VERSION}\n"
INVARIANCE_TOL = 1e-9

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_THRESHOLD = 0, 1, 2, 3

# Effect rows in results-table order: direct, mediation, total.
EFFECTS = (("c_prime", "c_prime"), ("med", "med"), ("tot", "tot"))
ORIENTATION_DEPENDENT = ("i1_", "a_", "b_", "sigma1_sq_")


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n")


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir: Path, command: str, config: dict, seed, inputs=(), started=None):
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "seed": seed,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "tool_version": __version__,
        "wall_clock_seconds": round(time.perf_counter() - started, 3) if started else None,
    }
    _dump_json(manifest, out_dir / "manifest.json")


def _chain_cfg(args, **extra) -> ChainConfig:
    return ChainConfig(n_iter=args.iters, burn_in=args.burnin, seed=args.seed,
                       thin=getattr(args, "thin", 1), **extra)


def effect_block(summary: PosteriorSummary) -> dict:
    """Effect estimates keyed like the results table, with interval bounds."""
    return {key: summary[col].to_dict() for key, col in EFFECTS}


def effects_table(summary: PosteriorSummary) -> list[dict]:
    tail = (1 - summary.level) / 2 * 100
    lo, hi = f"{tail:g}%", f"{100 - tail:g}%"
    return [{"effect": key, "est": summary[col].mean, lo: summary[col].ci_lower,
             hi: summary[col].ci_upper} for key, col in EFFECTS]


def summary_json(summary: PosteriorSummary) -> dict:
    out = {"schema_version": SCHEMA_VERSION, "level": summary.level,
           "n_retained": summary.n_retained}
    if all(col in summary for _, col in EFFECTS):
        out.update(effect_block(summary))
        out["effects_table"] = effects_table(summary)
    # per-dimension columns change under rotations of the latent space, so they
    # are kept apart as chain diagnostics rather than reported as estimates
    ident, orient = {}, {}
    for k, v in summary.params.items():
        (orient if k.startswith(ORIENTATION_DEPENDENT) else ident)[k] = v.to_dict(full=True)
    out["parameters"] = ident
    if orient:
        out["orientation_dependent"] = orient
    return out


# ---------------------------------------------------------------- commands

def cmd_generate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    if args.replica:
        net, data, truth = generate_empirical_replica(args.seed, n=args.n or 162, dim=args.dim or 5,
                                                      target_density=args.density)
        config = {"replica": True, "n": net.n_actors, "dim": truth.dim,
                  "target_density": args.density}
    else:
        if args.dim is None or args.n is None:
            raise ValueError("generate needs --dim and --n (or --replica)")
        cond = SimCondition(args.dim, args.n, args.med, args.cprime)
        net, data, truth = generate_dataset(cond, args.seed)
        config = {"dim": args.dim, "n": args.n, "med": args.med, "c_prime": args.cprime}
    (out / "net.csv").write_text(format_matrix(net))
    (out / "actors.csv").write_text(format_actors(data))
    truth_doc = {"schema_version": SCHEMA_VERSION, **truth.to_dict(), **truth.effects().to_dict(),
                 "density": density(net)}
    _dump_json(truth_doc, out / "truth.json")
    write_manifest(out, "generate", config, args.seed, started=started)
    if not args.quiet:
        print(f"wrote {out}/net.csv, actors.csv, truth.json (N={net.n_actors}, density={density(net):.3f})")
    return EXIT_OK


def cmd_fit(args) -> int:
    started = time.perf_counter()
    data = load_actors(args.actors)
    net = load_network(args.network, args.format, args.symmetrize, labels=data.actor_ids)
    data.check_matches(net)
    if args.dim >= net.n_actors:
        raise ValueError(f"--dim {args.dim} must be smaller than the number of actors ({net.n_actors})")
    cfg = _chain_cfg(args)
    res = run_chain(net, data, args.dim, cfg, outcome=args.outcome, level=args.level)
    s = res.summary
    doc = {
        "schema_version": SCHEMA_VERSION,
        "model": {"dim": args.dim, "n_actors": net.n_actors, "n_edges": net.n_edges,
                  "density": density(net), "outcome": args.outcome},
        **effect_block(s),
        "effects_table": effects_table(s),
        "parameters": {k: s[k].to_dict() for k in ("alpha", "sigma2_sq", "log_lik")},
        "acceptance": s.acceptance,
        "diagnostics": {
            "n_retained": s.n_retained,
            "rhat": {k: s[k].rhat for k in ("med", "c_prime", "tot", "alpha")},
            "ess": {k: s[k].ess for k in ("med", "c_prime", "tot", "alpha")},
            "warnings": res.warnings,
        },
        "config": config_dict(cfg) | {"level": args.level, "outcome": args.outcome},
    }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _dump_json(doc, out)
    if args.draws:
        _write_draws(res.draws, Path(args.draws), cfg)
    write_manifest(out.parent, "fit", doc["config"], args.seed,
                   inputs=(args.network, args.actors), started=started)
    if not args.quiet:
        print(_format_table(doc["effects_table"]))
    return EXIT_OK


def _write_draws(draws: ChainDraws, path: Path, cfg: ChainConfig) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    draws.to_csv(tmp, start=cfg.burn_in, thin=cfg.thin)
    path.write_text(CSV_SCHEMA_LINE + tmp.read_text())
    tmp.unlink()


def _format_table(rows: list[dict]) -> str:
    keys = list(rows[0])
    lines = ["  ".join(f"{k:>10}" for k in keys)]
    for r in rows:
        lines.append("  ".join(f"{r[k]:>10}" if isinstance(r[k], str) else f"{r[k]:>10.3f}" for k in keys))
    return "\n".join(lines)


def _parse_dims(text: str) -> list[int]:
    dims = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-")
            dims.extend(range(int(lo), int(hi) + 1))
        elif part.strip():
            dims.append(int(part))
    return dims


def cmd_select_dim(args) -> int:
    started = time.perf_counter()
    net = load_network(args.network, args.format, args.symmetrize)
    cfg = _chain_cfg(args)
    best, table = select_dimension(net, _parse_dims(args.dims), cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = [CSV_SCHEMA_LINE.rstrip("\n"), "D,fpr,fnr,correct,bic"]
    for row in table:
        vals = [row.fpr, row.fnr, row.correct, row.bic]
        lines.append(",".join([str(row.dim)] + ["NA" if v is None else repr(float(v)) for v in vals]))
    (out / "dims.csv").write_text("\n".join(lines) + "\n")
    _dump_json({"schema_version": SCHEMA_VERSION, "best_d": best, "rates": "in-sample",
                "failed": {str(r.dim): r.error for r in table if r.error}}, out / "best_d.json")
    write_manifest(out, "select-dim", config_dict(cfg) | {"dims": _parse_dims(args.dims)},
                   args.seed, inputs=(args.network,), started=started)
    if not args.quiet:
        print((out / "dims.csv").read_text(), end="")
        print(f"best_d={best}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    grid_spec = json.loads(Path(args.grid).read_text())
    base = load_grid(grid_spec)
    grid = [SimCondition(c.dim, c.n, c.med_level, c.c_prime, args.reps, args.seed) for c in base]
    if args.full_scale:
        args.iters, args.burnin = 20000, 6000
    cfg = _chain_cfg(args)
    eta = estimate_runtime(grid, cfg) / max(args.threads, 1)
    if not args.quiet:
        print(f"{len(grid)} conditions x {args.reps} replications; estimated runtime {eta / 60:.1f} min",
              file=sys.stderr)
    reports = run_grid(grid, cfg, threads=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "replications.csv").write_text(CSV_SCHEMA_LINE + replications_csv(reports))
    (out / "aggregate.csv").write_text(CSV_SCHEMA_LINE + grid_csv(reports))
    if args.plot_data:
        (out / "plot_data.csv").write_text(CSV_SCHEMA_LINE + grid_csv(reports, clip=True))
    agg = [{"condition": r.condition.key(), "n_failed": r.n_failed,
            "targets": {t: vars(tr) for t, tr in r.targets.items()}} for r in reports]
    _dump_json({"schema_version": SCHEMA_VERSION, "conditions": agg}, out / "aggregate.json")
    write_manifest(out, "simulate", config_dict(cfg) | {"reps": args.reps, "grid": grid_spec},
                   args.seed, inputs=(args.grid,), started=started)
    if not args.quiet:
        print((out / "aggregate.csv").read_text(), end="")
    return EXIT_OK


def cmd_check_invariance(args) -> int:
    started = time.perf_counter()
    res = invariance_suite(args.k, args.instances, args.n, args.dim, args.seed)
    ok = res["max_delta_med"] <= INVARIANCE_TOL and res["max_delta_direct"] <= INVARIANCE_TOL
    print(f"max |delta_med| = {res['max_delta_med']:.3e}  max |delta_direct| = "
          f"{res['max_delta_direct']:.3e}  over {args.k} isometries: {'PASS' if ok else 'FAIL'}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _dump_json({"schema_version": SCHEMA_VERSION, **res, "tolerance": INVARIANCE_TOL,
                    "pass": ok}, out / "invariance.json")
        write_manifest(out, "check-invariance", {"k": args.k, "instances": args.instances,
                                                 "n": args.n, "dim": args.dim},
                       args.seed, started=started)
    return EXIT_OK if ok else EXIT_THRESHOLD


def cmd_summarize(args) -> int:
    started = time.perf_counter()
    draws = ChainDraws.from_csv(args.draws)
    s = summarize(draws, args.burnin, args.level)
    doc = summary_json(s)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _dump_json(doc, out)
    write_manifest(out.parent, "summarize", {"level": args.level, "burnin": args.burnin},
                   None, inputs=(args.draws,), started=started)
    if not args.quiet and "effects_table" in doc:
        print(_format_table(doc["effects_table"]))
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--quiet", action="store_true")

    chain = argparse.ArgumentParser(add_help=False)
    chain.add_argument("--iters", type=int, default=20000)
    chain.add_argument("--burnin", type=int, default=6000)
    chain.add_argument("--thin", type=int, default=1)

    netin = argparse.ArgumentParser(add_help=False)
    netin.add_argument("--network", required=True)
    netin.add_argument("--format", choices=("auto", "matrix", "edges"), default="auto")
    netin.add_argument("--symmetrize", choices=("max", "min"), default=None)

    p = argparse.ArgumentParser(prog="netmed", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="simulate a dataset")
    g.add_argument("--dim", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--med", type=float, default=0.0)
    g.add_argument("--cprime", type=float, default=0.0)
    g.add_argument("--replica", action="store_true",
                   help="binary-outcome replica network (default 162 actors, D=5)")
    g.add_argument("--density", type=float, default=0.162)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("fit", parents=[common, chain, netin], help="fit the mediation model")
    f.add_argument("--actors", required=True)
    f.add_argument("--dim", type=int, required=True)
    f.add_argument("--outcome", choices=("continuous", "binary"), default="continuous")
    f.add_argument("--level", type=float, default=0.95)
    f.add_argument("--out", required=True)
    f.add_argument("--draws")
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("select-dim", parents=[common, chain, netin], help="BIC sweep over dimensions")
    s.add_argument("--dims", default="1-5", help="e.g. 1-7 or 1,2,3")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_select_dim, iters=3000, burnin=1000)

    m = sub.add_parser("simulate", parents=[common, chain], help="Monte Carlo study over a grid")
    m.add_argument("--grid", required=True)
    m.add_argument("--reps", type=int, default=50)
    m.add_argument("--full-scale", action="store_true", help="20000 iterations, 6000 burn-in")
    m.add_argument("--plot-data", action="store_true", help="also write relative bias clipped to +-20%%")
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_simulate, iters=5000, burnin=2000)

    c = sub.add_parser("check-invariance", parents=[common], help="isometry invariance of effects")
    c.add_argument("--k", type=int, default=1000)
    c.add_argument("--instances", type=int, default=20)
    c.add_argument("--n", type=int, default=60)
    c.add_argument("--dim", type=int, default=3)
    c.add_argument("--out")
    c.set_defaults(func=cmd_check_invariance)

    z = sub.add_parser("summarize", parents=[common], help="re-summarise a draws file")
    z.add_argument("--draws", required=True)
    z.add_argument("--level", type=float, default=0.95)
    z.add_argument("--burnin", type=int, default=0, help="rows of the draws file to drop")
    z.add_argument("--out", required=True)
    z.set_defaults(func=cmd_summarize)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (NetworkFormatError, InfeasibleConditionError, ValueError, FileNotFoundError,
            KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
