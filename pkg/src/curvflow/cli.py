"""Command-line entry point: check, flow, sphere, rescale and verify."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .flow import ClassificationError, check_classification, run_flow, sphere_tracking
from .geometry import ConvexityError
from .oracles import run_verify
from .writers import _write_text, dumps, fmt, rescale_saved_run, write_outputs

EXIT_OK, EXIT_CONFIG, EXIT_CLASSIFICATION, EXIT_CONVEXITY, EXIT_VERIFY = 0, 2, 3, 4, 5


def _cmd_check(args):
    cfg = load_config(args.config, args.overrides)
    fr, pr, cls = check_classification(cfg)
    sys.stdout.write(dumps({"f_report": fr, "phi_report": pr, "classification": cls}))
    return EXIT_OK


def _cmd_flow(args):
    cfg = load_config(args.config, args.overrides)
    result = run_flow(cfg)
    write_outputs(result, args.output)
    print(f"T_est={fmt(result.T_est)} p_est={fmt(result.p_est)} "
          f"steps={result.extra['steps']} reason={result.termination_reason}")
    return EXIT_OK


def _cmd_sphere(args):
    cfg = load_config(args.config, args.overrides)
    if cfg.shape.get("kind") != "sphere":
        raise ConfigError("the sphere subcommand needs a sphere shape", "/shape/kind")
    if cfg.r_stop is None:
        cfg.r_stop = 0.05 * float(cfg.shape.get("R", 1.0))
    result = run_flow(cfg)
    track = sphere_tracking(result)
    out = Path(args.output)
    write_outputs(result, out)
    lines = ["t,u_min,u_max,theta,rel_dev"] + [",".join(fmt(v) for v in row) for row in track.rows]
    _write_text(out / "sphere.csv", "\n".join(lines) + "\n")
    summary = {"T_oracle": track.T_oracle, "T_est": result.T_est, "max_rel_dev": track.max_rel_dev}
    _write_text(out / "sphere.json", dumps(summary))
    sys.stdout.write(dumps(summary))
    return EXIT_OK


def _cmd_rescale(args):
    rescale_saved_run(args.run_dir, args.T_est)
    return EXIT_OK


def _cmd_verify(args):
    report = run_verify(seed=args.seed, fd_samples=args.fd_samples, suite_samples=args.samples)
    text = dumps(report)
    if args.output:
        _write_text(Path(args.output), text)
    sys.stdout.write(text)
    return EXIT_OK if report["passed"] else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="curvflow", description="Axially symmetric curvature flows.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(name, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("config", help="JSON run configuration")
        s.add_argument("overrides", nargs="*", metavar="key=value", help="dotted-key overrides")
        return s

    with_config("check", "print condition reports and the case classification").set_defaults(func=_cmd_check)
    s = with_config("flow", "run a flow and write outputs")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=_cmd_flow)
    s = with_config("sphere", "run a sphere and compare with the exact radius")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=_cmd_sphere)

    s = sub.add_parser("rescale", help="recompute rescaled columns of a saved run")
    s.add_argument("run_dir")
    s.add_argument("--T-est", type=float, default=None, dest="T_est")
    s.set_defaults(func=_cmd_rescale)

    s = sub.add_parser("verify", help="run the oracle suites")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--samples", type=int, default=10_000)
    s.add_argument("--fd-samples", type=int, default=1000)
    s.add_argument("-o", "--output", default=None)
    s.set_defaults(func=_cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args, rest = parser.parse_known_args(argv)
    # overrides may also follow the options
    stray = [r for r in rest if "=" not in r or r.startswith("-")]
    if stray or (rest and not hasattr(args, "overrides")):
        parser.error(f"unrecognized arguments: {' '.join(stray or rest)}")
    if rest:
        args.overrides = list(args.overrides) + rest
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ClassificationError as exc:
        print(f"classification: {exc}", file=sys.stderr)
        return EXIT_CLASSIFICATION
    except ConvexityError as exc:
        print(f"convexity: {exc}", file=sys.stderr)
        return EXIT_CONVEXITY
    except (ValueError, KeyError) as exc:
        # bad shape parameters and the like surface while building the run
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
