"""Command line interface: ``ieqdg run | mms-study | beta-star``."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from .basis import DGSpace
from .config import parse_config, preset_names, preset_path
from .driver import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, run_simulation
from .errors import ConfigurationError, IEQDGError
from .forms import estimate_beta_star
from .mesh import uniform_mesh
from .mms import get_case
from .output import CsvWriter
from .study import spatial_study

log = logging.getLogger("ieqdg")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ieqdg", description="IEQ-DG solver for the Cahn-Hilliard equation")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a simulation from a TOML configuration")
    r.add_argument("config", help="TOML file, or the name of a bundled preset")
    r.add_argument("--seed", type=int, help="override the configuration seed")
    r.add_argument("--output", type=Path, help="override output.directory")

    m = sub.add_parser("mms-study", help="spatial convergence study on a manufactured solution")
    m.add_argument("--case", required=True, help="dw-1d, dw-2d, fh-2d or deg-fh-2d")
    m.add_argument("--degrees", type=_int_list, default=[1, 2, 3])
    m.add_argument("--meshes", type=_int_list, default=[10, 20, 40, 80])
    m.add_argument("--dt", type=_float_list, help="one step for all degrees or one per degree")
    m.add_argument("--bc", choices=("periodic", "neumann"), default="periodic")
    m.add_argument("--scheme", choices=("ieq1", "ieq2"))
    m.add_argument("--T", dest="final_time", type=float, help="final time (default per case)")
    m.add_argument("--family", choices=("Q", "P"), default="Q", help="tensor (Q) or total-degree (P) space")
    m.add_argument("--output", type=Path, help="also write the table as CSV")
    m.add_argument("--seed", type=int, help="accepted for symmetry; the study is deterministic")

    b = sub.add_parser("beta-star", help="coercivity threshold estimate on a uniform periodic mesh")
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--dim", type=int, choices=(1, 2), default=1)
    b.add_argument("--family", choices=("Q", "P"), default="Q")
    b.add_argument("--seed", type=int, help="unused; accepted for symmetry")
    return p


def _cmd_run(args) -> int:
    path = Path(args.config)
    if not path.exists() and args.config in preset_names():
        path = preset_path(args.config)
    cfg = parse_config(path)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.output is not None:
        cfg = replace(cfg, output_dir=args.output)
    t0 = time.perf_counter()
    res = run_simulation(cfg)
    print(f"{res.summary()} wall={time.perf_counter() - t0:.1f}s output={cfg.output_dir}")
    for msg in res.messages[:10]:
        print(f"  monitor: {msg}")
    return res.status


def _cmd_mms(args) -> int:
    case = get_case(args.case, args.bc)
    dts = None
    if args.dt:
        if len(args.dt) == 1:
            dts = {k: args.dt[0] for k in args.degrees}
        elif len(args.dt) == len(args.degrees):
            dts = dict(zip(args.degrees, args.dt))
        else:
            raise ConfigurationError("--dt needs one value or one per degree")
    header = ("k", "N", "dt", "l2", "order_l2", "linf", "order_linf", "seconds")
    print(f"case {case.case_id} ({case.bc}), scheme {args.scheme or case.scheme}, "
          f"T={args.final_time or case.final_time}, space {args.family}^k")
    print("{:>2} {:>5} {:>9} {:>12} {:>6} {:>12} {:>6} {:>8}".format(*header))
    study = spatial_study(case.case_id, args.degrees, args.meshes, dts, bc=args.bc, scheme=args.scheme,
                          final_time=args.final_time, family=args.family)
    writer = CsvWriter(args.output, header) if args.output else None
    try:
        for k, rows in study.items():
            for row in rows:
                r = row.run

                def o(v):
                    return "-" if v is None else f"{v:.2f}"

                print(f"{k:>2} {r.cells:>5} {r.dt:>9.2e} {r.l2:>12.5e} {o(row.order_l2):>6} "
                      f"{r.linf:>12.5e} {o(row.order_linf):>6} {r.seconds:>8.2f}")
                if writer:
                    nan = float("nan")
                    writer.write((k, r.cells, r.dt, r.l2, nan if row.order_l2 is None else row.order_l2,
                                  r.linf, nan if row.order_linf is None else row.order_linf, r.seconds))
    finally:
        if writer:
            writer.close()
    return EXIT_OK


def _cmd_beta(args) -> int:
    mesh = uniform_mesh([(0.0, 1.0)] * args.dim, args.n, "periodic")
    est = estimate_beta_star(DGSpace(mesh, args.k, family=args.family))
    print(f"beta* estimate k={args.k} N={args.n} dim={args.dim}: {est:.12g} (bound k^2 = {args.k ** 2})")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "mms-study":
            return _cmd_mms(args)
        return _cmd_beta(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IEQDGError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
