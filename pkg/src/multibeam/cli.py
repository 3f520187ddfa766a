"""Command line entry point.

Subcommands: ``dof``, ``convergence``, ``sweep-theta``, ``sweep-power`` and
``optimize``.  Each takes ``--config PATH`` plus optional ``--seed``,
``--out`` and ``--assoc`` overrides, writes CSV into the output directory
and exits 0 on success, nonzero with a message on any error.
"""

import argparse
import os
import sys
from dataclasses import replace

from . import channel, harness
from .association import parse_association
from .config import ConfigError, load_config

DEFAULT_CONFIG = os.path.join(os.path.dirname(__file__), "data", "default.toml")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multibeam",
        description="Multi-beam UAV uplink experiments: DoF tables, "
                    "beamforming optimisation and benchmark sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("dof", "maximum DoF versus UAV antenna count"),
        ("convergence", "sum-rate trace of one beamforming optimisation"),
        ("sweep-theta", "sum rate versus interference temperature"),
        ("sweep-power", "sum rate versus transmit power"),
        ("optimize", "association search plus beam optimisation"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=DEFAULT_CONFIG,
                       help="scenario/experiment config (TOML)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the first experiment seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--assoc", default=None,
                       help="association literal, e.g. [[4,7],[5,8],[6]]")
        if name == "optimize":
            p.add_argument("--dump-channels", default=None, metavar="PATH",
                           help="also write the channel realisation as CSV")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario, experiment, sca_cfg = load_config(args.config)
        if args.seed is not None:
            experiment = replace(experiment, seeds=(args.seed,)
                                 + tuple(s for s in experiment.seeds if s != args.seed))
        if args.out is not None:
            experiment = replace(experiment, out_dir=args.out)
        if args.assoc is not None:
            experiment = replace(experiment,
                                 associations=(parse_association(args.assoc),))
        out = experiment.out_dir
        os.makedirs(out, exist_ok=True)

        if args.command == "dof":
            rows = harness.run_dof_vs_m(scenario, experiment)
            harness.write_csv(os.path.join(out, "dof_vs_m.csv"),
                              ["m", "coop_dof", "comp_dof", "cognitive_dof"], rows)
            for row in rows:
                print("M=%d  coop=%d  comp=%d  cognitive=%d" % row)

        elif args.command == "convergence":
            rows, trace = harness.run_convergence(scenario, experiment, sca_cfg)
            harness.write_csv(os.path.join(out, "convergence.csv"),
                              ["iteration", "sum_rate_bps_hz", "max_violation"], rows)
            print(f"converged={trace.converged} iterations={trace.iterations} "
                  f"sum_rate={trace.final_sum_rate:.4f} bps/Hz")

        elif args.command == "sweep-theta":
            header, rows, _ = harness.run_sweep_theta(scenario, experiment, sca_cfg)
            harness.write_csv(os.path.join(out, "sweep_theta.csv"), header, rows)
            print(f"wrote {len(rows)} grid points over {len(experiment.seeds)} seeds")

        elif args.command == "sweep-power":
            header, rows, _ = harness.run_sweep_power(scenario, experiment, sca_cfg)
            harness.write_csv(os.path.join(out, "sweep_power.csv"), header, rows)
            print(f"wrote {len(rows)} grid points over {len(experiment.seeds)} seeds")

        elif args.command == "optimize":
            if args.dump_channels:
                realisation = channel.sample_from_scenario(
                    scenario, seed=experiment.seeds[0])
                channel.write_csv(realisation, args.dump_channels)
            best, trace, rows = harness.run_optimize(scenario, experiment, sca_cfg)
            harness.write_csv(os.path.join(out, "optimize_summary.csv"),
                              ["association", "sum_rate_bps_hz", "converged",
                               "iterations"], rows)
            harness.write_csv(os.path.join(out, "optimize_solution.csv"),
                              ["stream", "antenna", "re", "im", "rate_bps_hz"],
                              harness.solution_rows(trace))
            harness.write_csv(
                os.path.join(out, "optimize_trace.csv"),
                ["iteration", "sum_rate_bps_hz", "max_violation"],
                [(q, r, v) for q, (r, v) in
                 enumerate(zip(trace.sum_rates, trace.max_violations))])
            print(f"best association: {best}  "
                  f"sum_rate={trace.final_sum_rate:.4f} bps/Hz")

        return 0
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # solver/domain failures: message, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
