"""Command line entry point ``adq``.

    adq <experiment> [--param key=value]... [--config FILE] [--manifest FILE]
        [--seed S] --out DIR

Values from ``--config`` (key=value lines) are applied first, ``--param``
flags override them.  ``--manifest`` replays the seed and parameters of an
earlier run.  Every run writes ``<experiment>.csv``,
``<experiment>.summary.json`` and ``manifest.json`` into DIR.
"""
import argparse
import csv
import hashlib
import io
import json
import math
from pathlib import Path
import sys

import numpy as np

from . import config as cfgmod
from .config import UsageError
from .experiments import REGISTRY

SCHEMA_VERSION = 1


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def render_csv(columns, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def _dump_json(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def build_parser():
    parser = argparse.ArgumentParser(prog="adq", description="Run a reproducible experiment.")
    parser.add_argument("experiment", choices=sorted(REGISTRY), help="experiment name")
    parser.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                        help="override one parameter (repeatable)")
    parser.add_argument("--config", metavar="FILE", help="key=value parameter file")
    parser.add_argument("--manifest", metavar="FILE", help="replay the seed and parameters of a run")
    parser.add_argument("--seed", type=int, default=None, help="root seed (default 0)")
    parser.add_argument("--out", required=True, metavar="DIR", help="output directory")
    return parser


def resolve_run(args):
    exp = REGISTRY[args.experiment]
    layers = []
    seed = 0
    if args.manifest:
        try:
            man = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read manifest: {exc}") from None
        if man.get("experiment") != exp.name:
            raise UsageError(f"manifest is for {man.get('experiment')!r}, not {exp.name!r}")
        seed = int(man.get("seed", 0))
        layers.append(list(man.get("params", {}).items()))
    if args.config:
        try:
            layers.append(cfgmod.read_config_file(args.config))
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
    layers.append([cfgmod.parse_assignment(item) for item in args.param])
    params = cfgmod.resolve(exp.defaults, *layers)
    if args.seed is not None:
        seed = args.seed
    return exp, params, seed


def run(exp, params, seed, out_dir):
    """Run one experiment and write its files; returns the manifest dict."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = exp.run(params, seed)
    csv_text = render_csv(result.columns, result.rows)
    summary = {"schema_version": SCHEMA_VERSION, "experiment": exp.name, "seed": seed,
               "rows": len(result.rows), "columns": list(result.columns), "results": result.summary}
    files = {f"{exp.name}.csv": csv_text, f"{exp.name}.summary.json": _dump_json(summary)}
    for name, text in files.items():
        with open(out / name, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "experiment": exp.name,
        "seed": seed,
        "params": {k: cfgmod.format_value(v) for k, v in sorted(params.items())},
        "outputs": {name: hashlib.sha256(text.encode("utf-8")).hexdigest() for name, text in files.items()},
    }
    with open(out / "manifest.json", "w", encoding="utf-8", newline="") as fh:
        fh.write(_dump_json(manifest))
    return manifest


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the message
        return int(exc.code or 0)
    try:
        exp, params, seed = resolve_run(args)
    except UsageError as exc:
        print(f"adq: error: {exc}", file=sys.stderr)
        return 2
    manifest = run(exp, params, seed, args.out)
    print(f"{exp.name}: wrote {', '.join(manifest['outputs'])} and manifest.json to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
