"""cosmoweyl command-line entry point.

Usage:
    python -m cosmoweyl table1 [--r 1e4] [--u-star 0.5]
    python -m cosmoweyl penrose [--coords kruskal|ef] [--radii 2,5,10]
    python -m cosmoweyl audit --foliation sds_ef|de_sitter|ellipsoid [--eps E --phi P]
    python -m cosmoweyl verify energy|decay|sobolev|hodge|weyl
    python -m cosmoweyl dump coeffs|weyl|flux

Options (all subcommands):
    --lambda, --m   Schwarzschild-de Sitter parameters
    --profile       Run profile in cosmoweyl/profiles (default: default.json)
    --config        key = value file applied on top of the profile
    --output        Output directory (default: out)
    --eps0, --c0    Audit thresholds
    --log-level     DEBUG, INFO, WARNING (default) or ERROR

Exit status is 0 iff every check of the subcommand passes; summary.json is
written to the output directory in every case.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .controller import DUMP_TARGETS, FOLIATIONS, VERIFY_TARGETS, Controller, RunRequest


def _radii(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("at least one radius is required")
    return values


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="Cosmological constant.")
    p.add_argument("--m", type=float, default=None, help="Mass parameter.")
    p.add_argument("--profile", type=str, default=None, help="Profile filename (default: default.json).")
    p.add_argument("--config", type=str, default=None, help="key = value config file.")
    p.add_argument("--output", dest="output_dir", type=str, default=None, help="Output directory.")
    p.add_argument("--gauge", type=str, default=None, help="SdS gauge: ef, kruskal or initial_data.")
    p.add_argument("--n-theta", dest="n_theta", type=int, default=None, help="Polar quadrature nodes.")
    p.add_argument("--n-phi", dest="n_phi", type=int, default=None, help="Azimuthal quadrature nodes.")
    p.add_argument("--n-u", dest="n_u", type=int, default=None, help="Radial / u samples.")
    p.add_argument("--fd-scale", dest="fd_scale", type=float, default=None, help="Finite-difference step scale.")
    p.add_argument("--tolerance", type=float, default=None, help="Check tolerance.")
    p.add_argument("--eps0", type=float, default=None, help="Smallness threshold epsilon_0.")
    p.add_argument("--c0", type=float, default=None, help="Bound threshold C_0.")
    p.add_argument("--threads", type=int, default=None, help="Worker threads (capped by COSMOWEYL_THREADS).")
    p.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default="WARNING",
        help="Logging level (default: WARNING).",
    )


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cosmoweyl",
        description="Double-null geometry and Weyl decay checks for (Schwarzschild-)de Sitter.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("table1", help="Asymptotic coefficient values in the three SdS gauges.")
    t.add_argument("--r", type=float, default=1e4, help="Area radius of Sigma_r (default: 1e4).")
    t.add_argument("--u-star", dest="u_star", type=float, default=0.5, help="u* along Sigma_r (default: 0.5).")
    _common(t)

    pen = sub.add_parser("penrose", help="Penrose diagram polylines (SVG and CSV).")
    pen.add_argument("--coords", choices=["kruskal", "ef"], default="kruskal")
    pen.add_argument("--radii", type=_radii, default=(2.0, 5.0, 10.0))
    _common(pen)

    a = sub.add_parser("audit", help="Bootstrap-assumption audit of a foliation.")
    a.add_argument("--foliation", choices=FOLIATIONS, default="sds_ef")
    a.add_argument("--eps", type=float, default=0.06, help="Ellipsoid level parameter.")
    a.add_argument("--phi", type=float, default=0.05, help="Ellipsoid displacement angle.")
    a.add_argument("--radii", type=_radii, default=(5.0, 10.0, 20.0, 50.0, 100.0))
    _common(a)

    v = sub.add_parser("verify", help="Acceptance suites.")
    v.add_argument("target", choices=VERIFY_TARGETS)
    _common(v)

    d = sub.add_parser("dump", help="CSV dumps over a radial grid.")
    d.add_argument("target", choices=DUMP_TARGETS)
    d.add_argument("--radii", type=_radii, default=(5.0, 100.0), help="Radial range (min,max).")
    _common(d)
    return p


_CONFIG_FLAGS = (
    "lam", "m", "output_dir", "gauge", "n_theta", "n_phi", "n_u",
    "fd_scale", "tolerance", "eps0", "c0", "threads",
)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    controller = Controller()
    try:
        loader = controller.profile_loader
        config = loader.load(args.profile)
        if args.config:
            config = loader.load_config_file(args.config, config)
        config = config.merged({k: getattr(args, k) for k in _CONFIG_FLAGS})
        request = RunRequest(
            command=args.command,
            target=getattr(args, "target", None),
            config=config,
            r=getattr(args, "r", 1e4),
            u_star=getattr(args, "u_star", 0.5),
            radii=getattr(args, "radii", RunRequest.radii),
            foliation=getattr(args, "foliation", "sds_ef"),
            eps=getattr(args, "eps", 0.06),
            phi=getattr(args, "phi", 0.05),
            coords=getattr(args, "coords", "kruskal"),
        )
        result = controller.run(request)
    except (RuntimeError, KeyError, ValueError) as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 1

    # Report
    for check in result.checks:
        mark = "✓" if check.passed else "✗"
        print(f"{mark} {check.name}: {check.measured:.6e} (threshold {check.threshold:.6e})")
    for path in result.output_paths:
        print(f"  wrote {path}")
    if result.warnings:
        print("  Warnings:")
        for w in result.warnings:
            print(f"    ⚠ {w}")

    return 0 if result.ok else 1


if __name__ == "__main__":
    sys.exit(main())
