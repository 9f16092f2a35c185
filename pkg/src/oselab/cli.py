"""Command line front end: ``oselab <command> [options]``.

Exit status is 0 on success, 1 when a check or verdict fails and 2 on bad
input (unreadable or malformed config, invalid parameters).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import harness
from .errors import ConfigError, OselabError
from .harness import ExperimentConfig, dump_report, rows_csv

COMMANDS = ("exponents", "splitting", "block", "verify-lemma", "holder", "report")


def _global_flags(parser: argparse.ArgumentParser) -> None:
    s = argparse.SUPPRESS
    parser.add_argument("--config", default=s,
                        help="config file path or bundled config name (%s)"
                        % ", ".join(harness.bundled_config_names()))
    parser.add_argument("--seed", type=int, default=s, help="override the config seed")
    parser.add_argument("--out", default=s, help="directory for CSV and report files")
    parser.add_argument("--threads", type=int, default=s, help="worker threads")
    parser.add_argument("--format", choices=("csv", "json"), default=s, help="stdout format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oselab", description=__doc__.splitlines()[0])
    _global_flags(parser)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common)

    sub.add_parser("exponents", parents=[common], help="Lyapunov spectrum at a reference point")
    sp = sub.add_parser("splitting", parents=[common],
                        help="Oseledets splitting (or filtration) at a reference point")
    sp.add_argument("--horizon", type=int, default=None, help="window length (default: automatic)")
    bp = sub.add_parser("block", parents=[common], help="regular-block passing fractions")
    bp.add_argument("--samples", type=int, default=None, help="number of sample points")
    vp = sub.add_parser("verify-lemma", parents=[common], help="randomized estimate sweep")
    vp.add_argument("lemma", choices=("pair", "triple", "metric", "iterate"))
    vp.add_argument("--instances", type=int, default=None,
                    help="accepted instances (pairs for iterate)")
    sub.add_parser("holder", parents=[common], help="sample block pairs and fit the exponent")
    sub.add_parser("report", parents=[common], help="full experiment: pairs CSV and report")
    return parser


def _load(args) -> ExperimentConfig:
    ref = getattr(args, "config", None)
    if ref is None:
        cfg = ExperimentConfig()
    elif Path(ref).is_file():
        cfg = harness.load_config(ref)
    else:
        cfg = harness.bundled_config(ref)
    return cfg.with_overrides(seed=getattr(args, "seed", None), threads=getattr(args, "threads", None),
                              out=getattr(args, "out", None))


def _emit(args, payload: dict, csv_text: str | None = None) -> None:
    fmt = getattr(args, "format", "json")
    if fmt == "csv" and csv_text is not None:
        sys.stdout.write(csv_text)
    else:
        sys.stdout.write(dump_report(payload))


def _write(args, cfg: ExperimentConfig, payload: dict, csv_text: str | None, stem: str) -> None:
    if getattr(args, "out", None) is None:
        return
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{stem}.json").write_text(dump_report(payload))
    if csv_text is not None:
        (out / f"{stem}.csv").write_text(csv_text)


def cmd_exponents(args, cfg):
    from .systems import make_system

    spec = harness.estimate_spectrum(make_system(cfg.system), cfg)
    rows = [(i + 1, c, m) for i, (c, m) in enumerate(zip(spec.exponents, spec.multiplicities))]
    payload = {"spectrum": spec.to_dict(), "versions": harness.versions()}
    return payload, rows_csv(("index", "exponent", "multiplicity"), rows), 0


def cmd_splitting(args, cfg):
    from .oseledets import default_window, filtration_data, splitting
    from .systems import make_system

    sys_ = make_system(cfg.system)
    spec = harness.estimate_spectrum(sys_, cfg)
    x0 = sys_.sample(np.random.default_rng([cfg.seed, 1]), 1)[0]
    n = args.horizon or default_window(spec)
    if sys_.invertible and spec.k > 1:
        data = splitting(sys_, x0, n, spec, gap_tol=cfg.gap_tol)
        spaces, label = data.splitting, "E"
    else:
        data = filtration_data(sys_, x0, n, spec, gap_tol=cfg.gap_tol)
        spaces, label = data.flags, "F"
    rows = []
    for i, S in enumerate(spaces, start=1):
        for col in S.frame.T:
            rows.append((f"{label}^{i}", *col.tolist()))
    payload = {
        "point": x0.tolist(),
        "window": n,
        "spectrum": spec.to_dict(),
        "subspaces": {f"{label}^{i}": S.frame.tolist() for i, S in enumerate(spaces, start=1)},
        "flag_residual": data.flag_residual(),
        "equivariance_defect": data.equivariance_defect,
        "versions": harness.versions(),
    }
    header = ("subspace",) + tuple(f"v{j}" for j in range(sys_.dim))
    return payload, rows_csv(header, rows), 0


def cmd_block(args, cfg):
    from .systems import make_system

    if args.samples is not None:
        cfg = cfg.with_overrides(sample_count=args.samples)
    sys_ = make_system(cfg.system)
    spec = harness.estimate_spectrum(sys_, cfg)
    points, _ = harness.draw_candidates(sys_, cfg)
    prof = harness.profile_points(sys_, points, spec, cfg)
    rows = [(ell, h, prof.fraction(ell, h)) for ell in sorted(cfg.ell_sweep)
            for h in sorted(set(cfg.horizon_sweep) | {cfg.horizon})]
    payload = {"spectrum": spec.to_dict(), "n_samples": len(prof),
               "fractions": [{"ell": e, "horizon": h, "fraction": f} for e, h, f in rows],
               "versions": harness.versions()}
    return payload, rows_csv(("ell", "horizon", "fraction"), rows), 0


def cmd_verify_lemma(args, cfg):
    cfg = cfg.with_overrides(experiment="lemma_sweep", lemma=args.lemma, instances=args.instances)
    report, csv_text = harness.lemma_sweep_experiment(cfg)
    return report, csv_text, 0 if report["verdict"]["status"] == "pass" else 1


def cmd_holder(args, cfg):
    report, sample = harness.holder_experiment(cfg)
    payload = {k: report[k] for k in ("spectrum", "block_summary", "fit", "prediction", "verdict",
                                      "versions")}
    return payload, harness.pairs_csv(sample), _verdict_code(report)


def _verdict_code(report) -> int:
    return 1 if report["verdict"]["status"] == "fail" else 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load(args)
        if args.command == "report":
            res = harness.run_experiment(cfg, out=cfg.out)
            _emit(args, res.report, res.csv_text)
            print(f"wrote {res.paths['csv']} and {res.paths['report']}", file=sys.stderr)
            return _verdict_code(res.report)
        handler = {
            "exponents": cmd_exponents,
            "splitting": cmd_splitting,
            "block": cmd_block,
            "verify-lemma": cmd_verify_lemma,
            "holder": cmd_holder,
        }[args.command]
        payload, csv_text, code = handler(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OselabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(args, payload, csv_text)
    stem = args.command if args.command != "verify-lemma" else f"lemma_{args.lemma}"
    _write(args, cfg, payload, csv_text, stem)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
