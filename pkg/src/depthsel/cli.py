"""Command-line interface.

Subcommands: search, sweep, oracle, gen-landscape, analyze. Configuration is
a single JSON document; any field can be overridden on the command line with
dotted flags (--search.beam_width=5), and the effective configuration is
echoed into every output so a run can be reproduced from its artifacts.

Layer indices are 0-based everywhere. Exit codes: 0 success, 2 configuration
error, 3 evaluator failure, 4 subset space over the enumeration cap.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from .analysis import (
    SweepPlan,
    SweepReport,
    derive_statistics,
    inter_method_variance,
    sort_cells,
    spearman,
    write_report_bundle,
)
from .errors import ConfigError, ProtocolError, SpaceTooLarge
from .masks import mask_key
from .objectives import build_objective
from .objectives.landscape import generate_landscape
from .oracle import DEFAULT_CAP, brute_force
from .search import SearchConfig, run_search

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EVALUATOR = 3
EXIT_SPACE = 4

SEED_ENV = "DEPTHSEL_SEED"


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = argparse.ArgumentParser(
        prog="depthsel",
        description="Layer-subset selection over removal masks (0-based layer indices).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_search = sub.add_parser("search", help="run one search algorithm against one objective")
    p_search.add_argument("--config", required=True, help="JSON run configuration")
    p_search.add_argument("--out", default=None, help="output directory (overrides config out_dir)")

    p_sweep = sub.add_parser("sweep", help="run the full algorithms x objectives grid")
    p_sweep.add_argument("--config", required=True, help="JSON sweep configuration")
    p_sweep.add_argument("--out", default=None, help="output directory (overrides config out_dir)")
    p_sweep.add_argument("--resume", action="store_true", help="reuse existing valid cells")
    p_sweep.add_argument("--workers", type=int, default=None, help="concurrent grid cells")

    p_oracle = sub.add_parser("oracle", help="exact brute-force optimum by enumeration")
    p_oracle.add_argument("--config", required=True, help="JSON oracle configuration")
    p_oracle.add_argument("--out", default=None, help="output directory")
    p_oracle.add_argument("--keep-table", action="store_true", help="export the full loss table CSV")

    p_gen = sub.add_parser("gen-landscape", help="write a seeded synthetic loss surface")
    p_gen.add_argument("--seed", type=int, default=None, help=f"defaults to ${SEED_ENV} or 0")
    p_gen.add_argument("--depth", type=int, required=True)
    p_gen.add_argument("--density", type=float, default=0.3, help="pairwise interaction density")
    p_gen.add_argument("--gamma", type=float, default=0.0, help="explosion coupling gain")
    p_gen.add_argument("--out", required=True, help="output JSON path")

    p_an = sub.add_parser("analyze", help="statistics from a report or from CSV columns")
    p_an.add_argument("--report", default=None, help="report directory to recompute")
    p_an.add_argument("--table", default=None, help="CSV file with metric columns")
    p_an.add_argument("--x", default=None, help="column for the first metric")
    p_an.add_argument("--y", default=None, help="column for the second metric")
    p_an.add_argument("--out", default=None, help="where to write the JSON result")

    args, extra = parser.parse_known_args(argv)
    try:
        overrides = parse_override_tokens(extra)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "search":
            return cmd_search(args, overrides)
        if args.command == "sweep":
            return cmd_sweep(args, overrides)
        if args.command == "oracle":
            return cmd_oracle(args, overrides)
        if args.command == "gen-landscape":
            _reject_overrides(overrides)
            return cmd_gen_landscape(args)
        if args.command == "analyze":
            _reject_overrides(overrides)
            return cmd_analyze(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except SpaceTooLarge as exc:
        print(f"space too large: {exc}", file=sys.stderr)
        return EXIT_SPACE
    except ProtocolError as exc:
        print(f"evaluator failure: {exc}", file=sys.stderr)
        return EXIT_EVALUATOR
    except (ConfigError, FileNotFoundError, json.JSONDecodeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


# -- override plumbing -------------------------------------------------------------


def parse_override_tokens(tokens: list[str]) -> dict[str, object]:
    """--a.b.c=value (or --a.b.c value) pairs into a flat {dotted path: value} map."""
    overrides: dict[str, object] = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        body = tok[2:]
        if "=" in body:
            path, raw = body.split("=", 1)
            i += 1
        else:
            path = body
            if i + 1 >= len(tokens):
                raise ConfigError(f"flag --{path} is missing a value")
            raw = tokens[i + 1]
            i += 2
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        overrides[path] = value
    return overrides


def apply_overrides(config: dict, overrides: dict[str, object]) -> dict:
    for path, value in overrides.items():
        parts = path.split(".")
        node = config
        for part in parts[:-1]:
            nxt = node.get(part)
            if nxt is None:
                nxt = {}
                node[part] = nxt
            if not isinstance(nxt, dict):
                raise ConfigError(f"cannot override {path!r}: {part!r} is not a section")
            node = nxt
        node[parts[-1]] = value
    return config


def _reject_overrides(overrides: dict) -> None:
    if overrides:
        raise ConfigError(f"unknown flags: {sorted('--' + k for k in overrides)}")


def _load_config(path: str, overrides: dict, known: set[str]) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise ConfigError("configuration root must be a JSON object")
    config = apply_overrides(config, overrides)
    unknown = set(config) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    return config


def _env_seed() -> int | None:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"${SEED_ENV} must be an integer, got {raw!r}") from exc


# -- subcommands --------------------------------------------------------------------


def cmd_search(args, overrides) -> int:
    config = _load_config(
        args.config, overrides, known={"objective", "search", "clock", "out_dir", "oracle_cap"}
    )
    if "objective" not in config or "search" not in config:
        raise ConfigError("search config needs 'objective' and 'search' sections")
    search_section = dict(config["search"])
    env_seed = _env_seed()
    if "seed" not in search_section and env_seed is not None:
        search_section["seed"] = env_seed  # lowest precedence: below config and flags
    clock = config.get("clock", "wall")
    search_cfg = SearchConfig.from_dict(search_section)
    objective = build_objective(config["objective"], clock_kind=clock)

    out_dir = args.out or config.get("out_dir")
    result = run_search(search_cfg, objective)
    effective = {
        "objective": config["objective"],
        "search": search_cfg.to_dict(),
        "clock": clock,
        "out_dir": out_dir,
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        payload = {"config": effective, "result": result.to_dict()}
        (out / "result.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        result.write_steps(out / "steps.jsonl")
        objective.write_trace(out / "evals.jsonl")
    print(f"{mask_key(result.mask)} loss={result.loss!r}")
    return EXIT_OK


def cmd_sweep(args, overrides) -> int:
    config = _load_config(
        args.config,
        overrides,
        known={"objectives", "algorithms", "ks", "seeds", "search", "clock", "out_dir", "resume", "workers"},
    )
    out_dir = args.out or config.pop("out_dir", None)
    if out_dir is None:
        raise ConfigError("sweep needs an output directory (--out or out_dir)")
    resume = bool(args.resume or config.pop("resume", False))
    workers = args.workers if args.workers is not None else int(config.pop("workers", 1) or 1)
    plan = SweepPlan.from_dict(config)

    from .analysis import build_sweep

    report = build_sweep(plan, out_dir=out_dir, resume=resume, workers=workers)
    files = write_report_bundle(report, out_dir)
    (Path(out_dir) / "sweep_config.json").write_text(
        json.dumps({**plan.to_dict(), "out_dir": out_dir, "resume": resume, "workers": workers}, indent=2)
        + "\n",
        encoding="utf-8",
    )
    failed = [c for c in report.cells if not c.get("ok")]
    print(f"sweep complete: {len(report.cells)} cells ({len(failed)} failed), bundle: {', '.join(files)}")
    return EXIT_OK


def cmd_oracle(args, overrides) -> int:
    config = _load_config(args.config, overrides, known={"objective", "k", "oracle_cap", "clock", "out_dir"})
    if "objective" not in config or "k" not in config:
        raise ConfigError("oracle config needs 'objective' and 'k'")
    clock = config.get("clock", "wall")
    objective = build_objective(config["objective"], clock_kind=clock)
    cap = int(config.get("oracle_cap", DEFAULT_CAP))
    keep_table = bool(args.keep_table)
    result = brute_force(objective, int(config["k"]), keep_table=keep_table, cap=cap)

    out_dir = args.out or config.get("out_dir")
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        payload = {"config": {**config, "out_dir": out_dir}, "result": result.to_dict()}
        (out / "oracle.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        if keep_table:
            result.write_table(out / "oracle_table.csv")
    print(f"{mask_key(result.mask)} loss={result.loss!r} enumerated={result.enumerated}")
    return EXIT_OK


def cmd_gen_landscape(args) -> int:
    seed = args.seed
    if seed is None:
        seed = _env_seed() or 0
    spec = generate_landscape(seed=seed, depth=args.depth, pair_density=args.density, gamma=args.gamma)
    spec.save(args.out)
    print(f"wrote landscape depth={args.depth} seed={seed} to {args.out}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    if (args.report is None) == (args.table is None):
        raise ConfigError("analyze needs exactly one of --report or --table")
    if args.report is not None:
        report_path = Path(args.report) / "report.json"
        data = json.loads(report_path.read_text(encoding="utf-8"))
        cells = sort_cells(data["cells"])
        report = SweepReport(
            depth=int(data["depth"]),
            plan=data.get("plan", {}),
            cells=cells,
            derived=derive_statistics(int(data["depth"]), cells),
        )
        out_dir = args.out or args.report
        files = write_report_bundle(report, out_dir)
        print(f"recomputed statistics for {len(cells)} cells, bundle: {', '.join(files)}")
        return EXIT_OK

    if args.x is None or args.y is None:
        raise ConfigError("--table needs --x and --y column names")
    xs, ys = [], []
    with open(args.table, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or args.x not in reader.fieldnames or args.y not in reader.fieldnames:
            raise ConfigError(f"table must contain columns {args.x!r} and {args.y!r}")
        for row in reader:
            xs.append(float(row[args.x]))
            ys.append(float(row[args.y]))
    rho = spearman(xs, ys)
    payload = {
        "n": len(xs),
        "x": args.x,
        "y": args.y,
        "spearman_rho": rho,
        "variance_x": inter_method_variance(xs),
        "variance_y": inter_method_variance(ys),
    }
    text = json.dumps(payload, indent=2)
    if args.out is not None:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
