"""Command-line front end: ``marcsep <subcommand> CONFIG [options]``.

Results go to stdout as JSON (or CSV with ``--csv``); diagnostics go to
stderr. Exit codes: 0 success, 2 parse error, 3 validation error, 4 search
cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time

from . import __version__
from . import io as mio
from .dm_regions import (
    entropy_vector,
    evaluate_converse_mabrc,
    evaluate_converse_marc,
    evaluate_irregular,
    maximize_converse,
    regular_encoding_region,
)
from .fading import fading_report, mabrc_kappa_star, sweep_configs
from .probability import ValidationError
from .simulator import CapExceededError, run_scheme, threshold_sweep, verify_regular_vs_irregular

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_CAP = 0, 2, 3, 4


def _clean(obj):
    """Make a structure JSON-safe (non-finite floats become strings)."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _clean(obj.tolist())
    return obj


def _json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    fields = list(rows[0]) if rows else []
    for r in rows[1:]:
        fields += [k for k in r if k not in fields]
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _clean(v) for k, v in r.items()})
    return buf.getvalue()


def _pick(args, cfg: dict, name: str, default):
    val = getattr(args, name, None)
    return cfg.get(name, default) if val is None else val


def _sources_of(cfg: dict):
    return mio.sources_from_dict(cfg["sources"] if "sources" in cfg else cfg)


def cmd_entropy(args, cfg: dict):
    ent = entropy_vector(_sources_of(cfg)).as_dict()
    return _csv([ent]) if args.csv else _json(ent), None


def _dm_region(args, cfg: dict) -> str:
    sources = mio.sources_from_dict(mio._require(cfg, "sources", "config"))
    channel = mio.channel_from_dict(mio._require(cfg, "channel", "config"))
    inputs = mio.inputs_from_dict(cfg.get("input"), channel)
    seed = _pick(args, cfg, "seed", 0)
    irregular = evaluate_irregular(sources, channel, inputs)
    regular = regular_encoding_region(sources, channel, inputs, scenario=args.scenario)
    reports = {"irregular": irregular, "regular": regular}
    out = {"scenario": args.scenario, "irregular": irregular.to_dict(), "regular": regular.to_dict()}
    if "input_pmf" in cfg:
        ev = evaluate_converse_marc if args.scenario == "marc" else evaluate_converse_mabrc
        reports["converse"] = ev(sources, channel, cfg["input_pmf"])
        out["converse"] = reports["converse"].to_dict()
    if cfg.get("search", args.search):
        res = maximize_converse(
            sources, channel, budget=int(cfg.get("budget", 64)), seed=seed,
            scenario=args.scenario, workers=args.threads,
        )
        out["converse_search"] = res.to_dict()
        reports["converse_search"] = res.report
    # best of the two achievable schemes
    out["kappa_star"] = min(irregular.kappa_star, regular.kappa_star)
    if args.csv:
        return _csv([{"report": k, **r.csv_row()} for k, r in reports.items()])
    return _json(out)


def _fading_row(rep, param=None, value=None) -> dict:
    r = rep.region
    row = {} if param is None else {param: value}
    row.update(rep.config.gains)
    row.update({"c1": r.c1, "c2": r.c2, "csum": r.csum, "conditions_hold": r.conditions_hold})
    for i, s in enumerate(r.condition_slack, 1):
        row[f"slack{i}"] = s
    if rep.estimates is not None:
        for k, e in zip(("c1", "c2", "csum"), rep.estimates):
            row[f"{k}_ci95"] = e.half_width_95
    if rep.entropies is not None:
        row["kappa_star"] = rep.kappa_star
        row["converse_kappa"] = rep.converse_kappa
        row["mabrc_kappa_star"] = mabrc_kappa_star(r, rep.entropies)
    return row


def _fading_region(args, cfg: dict) -> str:
    cfg = dict(cfg)
    cfg["kind"] = args.model
    fcfg = mio.fading_from_dict(cfg)
    samples = int(_pick(args, cfg, "samples", 10**6))
    seed = int(_pick(args, cfg, "seed", 0))
    ent = None
    if "entropies" in cfg:
        ent = mio.entropies_from_dict(cfg["entropies"])
    elif "sources" in cfg:
        ent = entropy_vector(mio.sources_from_dict(cfg["sources"]))
    sweep = cfg.get("sweep")
    if sweep:
        param, values = sweep["param"], sweep["values"]
        try:
            cfgs = sweep_configs(fcfg, param, values)
        except ValueError as exc:
            raise ValidationError(f"sweep: {exc}") from exc
        reps = [fading_report(c, ent, samples, seed, args.threads) for c in cfgs]
        if args.csv:
            return _csv([_fading_row(r, param, v) for r, v in zip(reps, values)])
        return _json({"scenario": args.scenario, "sweep": {"param": param, "values": values},
                      "reports": [r.to_dict() for r in reps]})
    rep = fading_report(fcfg, ent, samples, seed, args.threads)
    if args.csv:
        return _csv([_fading_row(rep)])
    d = rep.to_dict()
    d["scenario"] = args.scenario
    d["samples"] = samples if fcfg.kind == "rayleigh" else None
    d["seed"] = seed
    return _json(d)


def cmd_region(args, cfg: dict):
    seed = _pick(args, cfg, "seed", 0)
    if args.model == "dm":
        return _dm_region(args, cfg), seed
    return _fading_region(args, cfg), seed


def cmd_simulate(args, cfg: dict):
    scheme = mio.scheme_from_dict(cfg)
    trials = int(_pick(args, cfg, "trials", 200))
    seed = int(_pick(args, cfg, "seed", 0))
    rep = run_scheme(scheme, trials, seed, workers=args.threads).to_dict()
    if args.csv:
        flat = {k: v for k, v in rep.items() if k != "margins"}
        flat.update({f"margin_{k}": v for k, v in rep["margins"].items()})
        return _csv([flat]), seed
    return _json(rep), seed


def cmd_sweep(args, cfg: dict):
    scheme = mio.scheme_from_dict(cfg)
    trials = int(_pick(args, cfg, "trials", 200))
    seed = int(_pick(args, cfg, "seed", 0))
    sw = cfg.get("sweep", {})
    param = args.param or sw.get("param", "R1d")
    rates = args.rates or sw.get("rates")
    if not rates:
        raise ValidationError("sweep: no rate grid given (config 'sweep.rates' or --rates)")
    res = threshold_sweep(scheme, rates, trials, seed, param=param, workers=args.threads)
    if args.csv:
        return res.to_csv(), seed
    return _json({"param": res.param, "rows": res.rows,
                  "monotone_violations": res.monotone_violations}), seed


def cmd_compare(args, cfg: dict):
    sources = _sources_of(cfg)
    trials = int(_pick(args, cfg, "trials", 200))
    seed = int(_pick(args, cfg, "seed", 0))
    margins = cfg.get("margins", [0.1 * k for k in range(11)])
    rep = verify_regular_vs_irregular(
        sources, int(cfg.get("m", 12)), margins, trials, seed,
        target=float(cfg.get("target", 0.05)), epsilon=float(cfg.get("epsilon", 0.05)),
        decoder=cfg.get("decoder", "typical"), B=int(cfg.get("B", 1)), workers=args.threads,
    ).to_dict()
    if args.csv:
        rows = [{"margin": g, "irregular_error": i, "regular_error": r}
                for g, i, r in zip(rep["grid"], rep["irregular_errors"], rep["regular_errors"])]
        return _csv(rows), seed
    return _json(rep), seed


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="marcsep", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"marcsep {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="JSON configuration file")
    common.add_argument("--csv", action="store_true", help="emit CSV instead of JSON")
    common.add_argument("--threads", type=int, default=1, help="maximum worker threads")
    common.add_argument("--manifest", help="write a run manifest JSON to this path")
    common.add_argument("--output", "-o", help="write results here instead of stdout")
    sub = p.add_subparsers(dest="subcommand", required=True)

    sub.add_parser("entropy", parents=[common], help="six conditional entropies of a source")

    r = sub.add_parser("region", parents=[common], help="achievable and necessary regions")
    r.add_argument("--model", choices=("dm", "phase", "rayleigh"), default="dm")
    r.add_argument("--scenario", choices=("marc", "mabrc"), default="marc")
    r.add_argument("--samples", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--search", action="store_true", help="also minimise the converse bound (dm)")

    for name, helptext in (("simulate", "separation-scheme Monte Carlo"),
                           ("sweep", "error rate against one bin rate"),
                           ("compare-encoding", "irregular vs regular rate budgets")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--trials", type=int)
        s.add_argument("--seed", type=int)
        if name == "sweep":
            s.add_argument("--param", choices=("R1d", "R2d", "R1r", "R2r"))
            s.add_argument("--rates", type=float, nargs="+")
    return p


_COMMANDS = {
    "entropy": cmd_entropy,
    "region": cmd_region,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "compare-encoding": cmd_compare,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("marcsep: --threads must be at least 1", file=sys.stderr)
        return EXIT_VALIDATION
    t0 = time.perf_counter()
    try:
        cfg = mio.load_json(args.config)
        text, seed = _COMMANDS[args.subcommand](args, cfg)
    except mio.ConfigError as exc:
        print(f"marcsep: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CapExceededError as exc:
        print(f"marcsep: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ValidationError, ValueError, KeyError, TypeError) as exc:
        print(f"marcsep: invalid config {args.config}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    wall = time.perf_counter() - t0
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.manifest:
        manifest = {
            "subcommand": args.subcommand,
            "config": str(args.config),
            "seed": seed,
            "version": __version__,
            "wall_time_s": wall,
            "output_sha256": hashlib.sha256(text.encode()).hexdigest(),
        }
        with open(args.manifest, "w") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
