"""Command-line front end: scenario file in, plot-ready CSV out.

Subcommands
-----------
conditional-sweep  conditional GML versus alpha_d (exact, bounds, approximations)
dist               analytical PDF/CDF of h_g with the Monte Carlo ECDF
outage             outage probability versus transmit SNR
rate               ergodic rate versus transmit SNR
validate           self-check suite; exit status 0 iff every check passes
"""

from __future__ import annotations

import argparse
import io
import math
import sys

import numpy as np

from .conditional_gml import gml_approx, gml_approx_params, gml_bounds, gml_exact
from .fluctuation_models import Hoyt, UniformU
from .geometry import BeamParallelError, MeanState, Position3, footprint_center
from .gml_statistics import cdf_hg, pdf_hg
from .link_performance import (
    critical_snr,
    ergodic_rate,
    ergodic_rate_asymptotic,
    outage,
    outage_asymptotic,
)
from .monte_carlo import empirical_outage, empirical_rate, run
from .scenario import MODES, Scenario, ScenarioError, load, parse_angle, presets

FMT = "{:.16e}"


def _fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return FMT.format(x)


def _header(cmd: str, sc: Scenario, extra: dict | None = None) -> list[str]:
    g = sc.dist
    lines = [
        f"# uavfso {cmd}",
        f"# scenario={sc.name} sha256={sc.source_hash or 'builtin'}",
        f"# seed={sc.sim.seed} trials={sc.sim.n_trials} mode={sc.sim.mode}",
        f"# w_L={_fmt(sc.w_L)} r0={_fmt(sc.beam.lens_radius)} h_p={_fmt(sc.h_p)}"
        f" gamma_thr={_fmt(sc.gamma_thr)}",
        f"# A0={_fmt(g.a0)} t={_fmt(sc.approx.t)} varpi={_fmt(g.varpi)} q={_fmt(g.q)}"
        f" Omega={_fmt(g.omega_total)} h1={_fmt(g.h1 if isinstance(g.mis, UniformU) else math.nan)}",
        f"# q_varpi={_fmt(g.q * g.varpi if isinstance(g.mis, Hoyt) else math.nan)}"
        f" law={type(g.mis).__name__}",
    ]
    for k, v in (extra or {}).items():
        lines.append(f"# {k}={v}")
    return lines


def _write(rows, columns, header, out):
    buf = io.StringIO()
    for line in header:
        buf.write(line + "\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(x) for x in row) + "\n")
    text = buf.getvalue()
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)


def _range(spec: str, angles: bool = False):
    """``START:STOP:N`` (angles, inclusive linspace) or ``START:STOP:STEP`` (dB)."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid {spec!r} must look like START:STOP:{'N' if angles else 'STEP'}")
    if angles:
        lo, hi = (parse_angle(p, "--grid") for p in parts[:2])
        return np.linspace(lo, hi, int(parts[2]))
    lo, hi, step = (float(p) for p in parts)
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def _apply_overrides(sc: Scenario, args) -> Scenario:
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        changes["n_trials"] = args.trials
    if getattr(args, "mode", None) is not None:
        changes["mode"] = args.mode
    return sc.with_sim(**changes) if changes else sc


def cmd_conditional_sweep(sc: Scenario, alpha_grid, offsets, out=None):
    """Conditional GML over ``alpha_d`` at the scenario's ``beta_d``.

    For each footprint offset ``(b_y, b_z)`` the UAV is displaced from the
    mean position so that the beam, kept at the mean orientation, lands at
    that offset. A beam parallel to the lens yields 0 in every column.
    """
    w_L, r0 = sc.w_L, sc.beam.lens_radius
    rows = []
    for by, bz in offsets:
        for alpha in alpha_grid:
            try:
                mean = MeanState.from_spherical(sc.L, float(alpha), sc.beta_d)
                r = mean.mu_r + Position3(0.0, by, bz)
                omega = mean.mu_omega
                exact = gml_exact(r, omega, w_L, r0)
                low, upp = gml_bounds(r, omega, w_L, r0)
                u = footprint_center(r, omega).u
                ar = gml_approx(u, gml_approx_params(omega, w_L, r0, "arith"))
                ge = gml_approx(u, gml_approx_params(omega, w_L, r0, "geom"))
            except BeamParallelError:
                exact = low = upp = ar = ge = 0.0
            rows.append((by, bz, alpha, exact, low, upp, ar, ge))
    cols = ["b_y", "b_z", "alpha_d", "h_exact", "h_low", "h_upp",
            "h_approx_arith", "h_approx_geom"]
    _write(rows, cols, _header("conditional-sweep", sc), out)
    return rows


def cmd_dist(sc: Scenario, n_points: int = 200, out=None, samples=None):
    """Analytical PDF/CDF of ``h_g`` on a uniform grid plus the simulated ECDF."""
    g = sc.dist
    emp = run(sc)
    if samples:
        emp.write_binary(samples)
    # span (0, A0] so a bounded law shows its zero-probability gap below h1
    h = g.a0 * np.arange(1, n_points + 1) / n_points
    pdf = np.asarray(pdf_hg(g, h)) if g.h_lo < g.a0 else np.zeros_like(h)
    rows = zip(h, pdf, np.asarray(cdf_hg(g, h)), np.asarray(emp.ecdf(h)))
    extra = {"beam_parallel_trials": emp.n_parallel}
    _write(list(rows), ["h", "pdf_analytic", "cdf_analytic", "ecdf_mc"],
           _header("dist", sc, extra), out)


def _gg_scenario(sc: Scenario) -> Scenario:
    return sc.with_sim(include_turbulence=True)


def cmd_outage(sc: Scenario, grid_db=None, out=None):
    g = sc.dist
    grid_db = sc.gamma_bar_db if grid_db is None else grid_db
    plain = run(sc.with_sim(include_turbulence=False))
    faded = run(_gg_scenario(sc))
    rows = []
    for db in grid_db:
        lb = sc.link(float(db))
        p = outage(g, lb).p_out
        try:
            asym = outage_asymptotic(g, lb)
        except ValueError:
            asym = math.nan
        rows.append((db, p, asym, empirical_outage(plain, lb), empirical_outage(faded, lb)))
    extra = {}
    if isinstance(g.mis, UniformU):
        extra["gamma_crt_dB"] = _fmt(10 * math.log10(critical_snr(g, sc.link(0.0))))
    _write(rows, ["gamma_bar_dB", "analytic", "asymptotic", "mc", "mc_with_gg"],
           _header("outage", sc, extra), out)
    return rows


def cmd_rate(sc: Scenario, grid_db=None, out=None):
    g = sc.dist
    grid_db = sc.gamma_bar_db if grid_db is None else grid_db
    plain = run(sc.with_sim(include_turbulence=False))
    faded = run(_gg_scenario(sc))
    rows = []
    for db in grid_db:
        lb = sc.link(float(db))
        r_max, dr = ergodic_rate_asymptotic(g, lb)
        rows.append((db, ergodic_rate(g, lb), r_max - dr,
                     empirical_rate(plain, lb)[0], empirical_rate(faded, lb)[0]))
    _, dr = ergodic_rate_asymptotic(g, sc.link(0.0))
    _write(rows, ["gamma_bar_dB", "analytic", "asymptotic", "mc", "mc_with_gg"],
           _header("rate", sc, {"delta_r": _fmt(dr)}), out)
    return rows


def cmd_validate(mutation=None, n_trials=1_000_000, stream=None) -> int:
    from .validation import run_suite

    stream = stream or sys.stdout
    checks = run_suite(mutation, n_trials)
    for c in checks:
        stream.write(c.line() + "\n")
    failed = sum(not c.passed for c in checks)
    stream.write(f"{len(checks) - failed}/{len(checks)} checks passed\n")
    return 0 if failed == 0 else 1


def _offsets(spec: str):
    out = []
    for pair in spec.split(";"):
        y, z = (float(x) for x in pair.split(","))
        out.append((y, z))
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavfso",
        description="Statistical channel model for UAV-to-ground FSO links",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, sim=True):
        p.add_argument("--scenario", required=True,
                       help=f"scenario JSON file or bundled preset ({', '.join(presets())})")
        p.add_argument("--out", default=None, help="CSV output path (default: stdout)")
        p.add_argument("--grid", default=None,
                       help="conditional-sweep: START:STOP:N angles (default -90deg:90deg:37); "
                            "dist: number of h points (default 200); "
                            "outage/rate: START:STOP:STEP in dB")
        if sim:
            p.add_argument("--seed", type=int, default=None)
            p.add_argument("--trials", type=int, default=None)
            p.add_argument("--mode", choices=MODES, default=None)

    p = sub.add_parser("conditional-sweep", help="conditional GML versus alpha_d")
    common(p, sim=False)
    p.add_argument("--offset", default="0,0;0.1,0.1",
                   help="footprint offsets 'b_y,b_z;...' in metres (default '0,0;0.1,0.1')")

    p = sub.add_parser("dist", help="PDF/CDF of the GML with the Monte Carlo ECDF")
    common(p)
    p.add_argument("--samples", default=None,
                   help="also write raw samples as little-endian float64")

    for name, helptext in (("outage", "outage probability versus SNR"),
                           ("rate", "ergodic rate versus SNR")):
        p = sub.add_parser(name, help=helptext)
        common(p)

    p = sub.add_parser("validate", help="run the self-check suite")
    p.add_argument("--mutate", default=None,
                   help="corrupt one building block to exercise the suite")
    p.add_argument("--trials", type=int, default=1_000_000)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return cmd_validate(args.mutate, args.trials)
        sc = _apply_overrides(load(args.scenario), args)
        if args.command == "conditional-sweep":
            grid = _range(args.grid or "-90deg:90deg:37", angles=True)
            cmd_conditional_sweep(sc, grid, _offsets(args.offset), args.out)
        elif args.command == "dist":
            cmd_dist(sc, int(args.grid) if args.grid else 200, args.out, args.samples)
        elif args.command == "outage":
            cmd_outage(sc, _range(args.grid) if args.grid else None, args.out)
        elif args.command == "rate":
            cmd_rate(sc, _range(args.grid) if args.grid else None, args.out)
    except (ScenarioError, ValueError) as exc:
        print(f"uavfso: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
