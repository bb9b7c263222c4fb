"""``qspec <subcommand> --config <path> [--out <dir>] [--seed <u64>] [--threads <n>]``"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, parse_config
from .errors import QSpecError
from .estimation import monte_carlo
from .scans import (
    cross_section_rows,
    find_extrema,
    regret_scan_rows,
    select_angles,
    spectrum_rows,
    tradeoff_check,
    variance_map_rows,
)

log = logging.getLogger("qspec")

COMMANDS = ("spectrum", "cross-section", "variance-map", "regret-scan", "tradeoff-check", "montecarlo")


def fmt(v) -> str:
    """17 significant digits; integers stay integers."""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return "%.17g" % float(v)


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def write_json(path: Path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, allow_nan=True)
        fh.write("\n")


def _angles(rc: RunConfig, cfg=None):
    return select_angles(cfg or rc.optical, rc.lambda_signal, rc.angle_mode, rc.anchors, rc.extrema_window)


def run_command(cmd: str, rc: RunConfig, out: Path, threads: int = 1) -> list[Path]:
    """Execute one subcommand and return the files written."""
    out.mkdir(parents=True, exist_ok=True)
    cfg = rc.optical
    written = []
    if cmd == "spectrum":
        lams = np.linspace(rc.lambda_min_nm, rc.lambda_max_nm, rc.lambda_steps) * 1e-9
        ths = np.linspace(rc.theta_min_mrad, rc.theta_max_mrad, rc.theta_steps) * 1e-3
        path = out / "spectrum.csv"
        write_csv(path, ["lambda_s_nm", "theta_mrad", "intensity"], spectrum_rows(cfg, lams, ths))
        written.append(path)
    elif cmd == "cross-section":
        ths = np.linspace(rc.theta_min_mrad, rc.theta_max_mrad, rc.theta_steps) * 1e-3
        path = out / "cross_section.csv"
        write_csv(path, ["theta_mrad", "intensity", "delta_rad", "delta_m_rad"],
                  cross_section_rows(cfg, rc.lambda_signal, ths))
        ext = find_extrema(cfg, rc.lambda_signal, (ths[0], ths[-1]))
        side = out / "cross_section_extrema.json"
        write_json(side, {
            "lambda_s_nm": rc.lambda_signal_nm,
            "extrema": [{"theta_mrad": round(e.angle * 1e3, 6), "kind": e.kind, "intensity": e.intensity}
                        for e in ext],
        })
        written += [path, side]
    elif cmd == "variance-map":
        angles = _angles(rc)
        ns = np.linspace(rc.n_min, rc.n_max, rc.n_steps)
        alphas = np.linspace(rc.alpha_min_per_cm, rc.alpha_max_per_cm, rc.alpha_steps)
        path = out / "variance_map.csv"
        write_csv(path, ["n_i_m", "alpha_per_cm", "var_n", "var_alpha", "cov", "singular_flag"],
                  variance_map_rows(cfg, rc.lambda_signal, angles, ns, alphas, cfg.shots, threads))
        written.append(path)
    elif cmd == "regret-scan":
        angles = _angles(rc)
        if rc.scan_parameter == "n_i_m":
            values = np.linspace(rc.n_min, rc.n_max, rc.n_steps)
        else:
            values = np.linspace(rc.alpha_min_per_cm, rc.alpha_max_per_cm, rc.alpha_steps)
        path = out / "regret_scan.csv"
        write_csv(path, ["scan_value", "delta_n", "delta_alpha", "delta_n_approx",
                         "delta_alpha_approx", "sum", "sum_approx"],
                  regret_scan_rows(cfg, rc.lambda_signal, angles, rc.scan_parameter, values, threads))
        written.append(path)
    elif cmd == "tradeoff-check":
        path = out / "tradeoff_check.json"
        write_json(path, tradeoff_check(cfg, rc.lambda_signal, rc.anchors, rc.extrema_window))
        written.append(path)
    elif cmd == "montecarlo":
        angles = _angles(rc)
        summary = monte_carlo(cfg, rc.lambda_signal, angles, cfg.shots, rc.trials, seed=rc.seed,
                              threads=threads)
        path = out / "montecarlo.json"
        rec = summary.as_dict()
        rec["angles_mrad"] = [a * 1e3 for a in angles]
        rec["shots"] = cfg.shots
        rec["seed"] = rc.seed
        write_json(path, rec)
        written.append(path)
    else:
        raise ValueError(f"unknown command {cmd!r}")
    return written


def _threads(arg):
    if arg is not None:
        return arg
    env = os.environ.get("QSPEC_THREADS")
    return int(env) if env else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qspec", description=__doc__)
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path, help="key = value run configuration (defaults if omitted)")
    ap.add_argument("--out", type=Path, help="output directory (overrides `output`)")
    ap.add_argument("--seed", type=int, help="RNG seed (overrides `seed`)")
    ap.add_argument("--threads", type=int, help="worker threads (fallback: QSPEC_THREADS)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
        rc = parse_config(text)
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 2**64:
                raise QSpecError("--seed must be an unsigned 64-bit integer")
            rc = dataclasses.replace(rc, seed=args.seed)
        out = args.out if args.out is not None else Path(rc.output)
        files = run_command(args.command, rc, out, threads=_threads(args.threads))
    except (QSpecError, OSError, ValueError) as exc:
        rec = exc.record() if isinstance(exc, QSpecError) else {"error": type(exc).__name__, "message": str(exc)}
        rec["command"] = args.command
        print(json.dumps(rec), file=sys.stderr)
        return 1
    for f in files:
        log.info("wrote %s", f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
