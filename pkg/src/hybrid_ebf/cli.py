"""Command-line front end: ``hebf run | list-presets | validate``."""
from __future__ import annotations

import argparse
import sys

from .config import ConfigError, parse_config
from .experiments import PRESET_NAMES, format_rows, preset, run_sweep, write_meta

EXIT_USAGE = 2
EXIT_FAILURE = 1


def _pairs(extra: list[str]) -> dict[str, str]:
    """Turn ``--key value`` and ``--key=value`` leftovers into a dict."""
    out: dict[str, str] = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise ConfigError(tok, "expected --key value")
        if "=" in tok:
            k, v = tok[2:].split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ConfigError(tok[2:], "missing value")
            k, v = tok[2:], extra[i + 1]
            i += 2
        out[k] = v
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hebf", description="Hybrid energy beamforming simulator")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a preset sweep and write CSV + metadata",
                         epilog="Any scenario field can be overridden with --<field> <value>, e.g. --distance 25.")
    run.add_argument("--preset")
    run.add_argument("--config")
    run.add_argument("--out")
    run.add_argument("--trials")
    run.add_argument("--seed")
    run.add_argument("--workers")
    sub.add_parser("list-presets", help="print the preset names")
    val = sub.add_parser("validate", help="check a config file without running")
    val.add_argument("--config", required=True)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args, extra = ap.parse_known_args(argv)
    if args.command == "list-presets":
        for name in PRESET_NAMES:
            spec = preset(name)
            print(f"{name}\t{spec.variable.value}\t{len(spec.values)} values\t{len(spec.modes)} modes")
        return 0
    try:
        if args.command == "validate":
            if extra:
                ap.error(f"unrecognized arguments: {' '.join(extra)}")
            cfg = parse_config(None, args.config)
            spec = cfg.sweep()
            print(f"ok: preset={cfg.preset} values={len(spec.values)} modes={len(spec.modes)} trials={cfg.trials}")
            return 0
        overrides = _pairs(extra)
        for key in ("preset", "out", "trials", "seed", "workers"):
            if getattr(args, key) is not None:
                overrides[key] = getattr(args, key)
        cfg = parse_config(overrides, args.config)
    except ConfigError as exc:
        print(f"hebf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    spec = cfg.sweep()
    try:
        rows = run_sweep(spec, workers=cfg.workers)
    except Exception as exc:  # fail fast: any trial error aborts the run
        print(f"hebf: run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    try:
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = cfg.out_dir / f"{cfg.preset}.csv"
        csv_path.write_text(format_rows(rows))
        write_meta(cfg.metadata(), cfg.out_dir / f"{cfg.preset}.meta")
    except OSError as exc:
        print(f"hebf: cannot write results: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"wrote {csv_path} ({len(rows)} rows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
