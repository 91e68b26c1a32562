"""Command-line tool: gen / run / inspect / bench.

Exit codes: 0 success, 2 validation or config error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .core import PRIMARY, EngineConfig
from .errors import EngineError, TraceIOError, ValidationError
from .partition import PROTECTED
from .pipeline import Engine
from .report import render_report, run_trace, write_report
from .scenarios import SCENARIOS, ScenarioSpec, generate_scene
from .traceio import read_trace, write_trace

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3


def load_config(path):
    """Parse a flat key=value config file; unknown keys are fatal."""
    mapping = {}
    for lineno, line in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        mapping[key.strip()] = value.strip()
    return EngineConfig.from_mapping(mapping)


def cmd_gen(args):
    spec = ScenarioSpec(scenario=args.scenario, frame_count=args.frames)
    header, frames = generate_scene(spec, args.seed)
    write_trace(args.out, header, frames)
    print(f"wrote {args.frames}-frame {args.scenario} trace to {args.out}")
    return EXIT_OK


def cmd_run(args):
    config = load_config(args.config) if args.config else EngineConfig()
    header, frames = read_trace(args.trace)
    report = run_trace(config, header, frames)
    write_report(report, args.report, figures=not args.no_figures)
    agg = report.aggregates
    print(f"frames={agg['frames']} mean_rho={agg['mean_rho']:.4f} "
          f"steady_retained={agg['steady_state_retained']} "
          f"speedup={agg['predicted_speedup']:.3f}x")
    return EXIT_OK


def cmd_inspect(args):
    header, frames = read_trace(args.trace)
    if not (0 <= args.frame < len(frames)):
        raise ValidationError(
            f"frame {args.frame} outside trace of {len(frames)} frames")
    engine = Engine(EngineConfig(), header.cameras, header.chunk_len)
    outputs = None
    for frame in frames[:args.frame + 1]:
        outputs = engine.step(frame)
    primary = outputs[PRIMARY]
    lines = [f"{i} {int(primary.unmerge_map[i])}"
             for i in range(primary.unmerge_map.size)]
    Path(args.dump_merge_map).write_text("\n".join(lines) + "\n",
                                         encoding="utf-8")
    print(f"frame {args.frame}: retained={primary.stats['retained']} "
          f"rho={primary.stats['rho']:.4f}")
    if args.dump_region_pgm:
        _write_region_pgm(engine, header, args.dump_region_pgm)
    return EXIT_OK


def _write_region_pgm(engine, header, path):
    if engine.partition is None:
        raise ValidationError("no partition yet (still in warmup)")
    spec = header.cameras[PRIMARY]
    labels = engine.partition.labels.reshape(spec.grid_h, spec.grid_w)
    k = max(engine.partition.effective_k, 1)
    gray = np.where(labels == PROTECTED, 255,
                    (labels * (200 // k)).clip(0, 254))
    lines = [f"P2", f"{spec.grid_w} {spec.grid_h}", "255"]
    for row in gray:
        lines.append(" ".join(str(int(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_bench(args):
    header, frames = read_trace(args.trace)
    names, reports = [], []
    for config_path in args.configs.split(","):
        config_path = config_path.strip()
        config = load_config(config_path)
        names.append(Path(config_path).stem)
        reports.append(run_trace(config, header, frames))
    width = max(len(n) for n in names) + 2
    print(f"{'config':<{width}}{'mean_rho':>10}{'steady_R':>10}"
          f"{'speedup':>10}{'restores':>10}{'reinits':>9}")
    for name, rep in zip(names, reports):
        agg = rep.aggregates
        print(f"{name:<{width}}{agg['mean_rho']:>10.4f}"
              f"{agg['steady_state_retained']:>10}"
              f"{agg['predicted_speedup']:>10.3f}"
              f"{agg['restore_events']:>10}{agg['reinit_events']:>9}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="depthmerge",
        description="Depth-guided progressive visual token merging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a synthetic trace")
    p_gen.add_argument("--scenario", choices=SCENARIOS, required=True)
    p_gen.add_argument("--frames", type=int, default=50)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=cmd_gen)

    p_run = sub.add_parser("run", help="run the engine over a trace")
    p_run.add_argument("--trace", required=True)
    p_run.add_argument("--config", default=None)
    p_run.add_argument("--report", required=True)
    p_run.add_argument("--no-figures", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_inspect = sub.add_parser("inspect", help="dump merge map at a frame")
    p_inspect.add_argument("--trace", required=True)
    p_inspect.add_argument("--frame", type=int, required=True)
    p_inspect.add_argument("--dump-merge-map", required=True)
    p_inspect.add_argument("--dump-region-pgm", default=None)
    p_inspect.set_defaults(func=cmd_inspect)

    p_bench = sub.add_parser("bench", help="compare configs on one trace")
    p_bench.add_argument("--trace", required=True)
    p_bench.add_argument("--configs", required=True,
                         help="comma-separated config files")
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TraceIOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (EngineError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
