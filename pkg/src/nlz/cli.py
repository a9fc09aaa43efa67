"""Command-line front end.

Each subcommand writes a CSV data file (``--out``) and prints a JSON run
summary on stdout.  Exit codes: 0 success, 2 invalid parameters,
3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from typing import Any, Callable

import numpy as np

from . import __version__
from .adiabatic import (
    gamma_ad_large_ratio,
    gamma_ad_leading_order,
    gamma_ad_small_delta,
    gamma_adiabatic,
    homoclinic,
    homoclinic_trace,
)
from .classical import fixed_points, portrait
from .errors import NumericalError, ParameterError
from .levels import gamma_c, level_curve
from .model import SweepSpec, SystemParams, wrap_angle
from .nonadiabatic import (
    SWEEP_ATOL,
    SWEEP_RTOL,
    critical_scaling_fit,
    lz_linear,
    q_factor,
    strong_comparison,
    subcritical_exponent_fit,
    sweep_simulate,
)
from .numerics import DEFAULT_ATOL, DEFAULT_QUAD_TOL, DEFAULT_RTOL

EXIT_OK, EXIT_PARAM, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def fmt(x: Any) -> str:
    """17 significant digits for floats; empty string for None."""
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def parse_grid(text: str) -> list[float]:
    """``lo:hi:count`` (inclusive), a comma list, or a single number."""
    text = str(text).strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
            if n < 1:
                raise ParameterError(f"grid count must be >= 1 in {text!r}")
            if n == 1:
                return [lo]
            return [float(v) for v in np.linspace(lo, hi, n)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ParameterError(f"bad grid {text!r}; expected lo:hi:count or a comma list") from None


def _params(args) -> SystemParams:
    if args.V is None:
        raise ParameterError("--V is required")
    if getattr(args, "C", None) is not None and getattr(args, "ratio", None) is not None:
        raise ParameterError("give either --C or --ratio, not both")
    if getattr(args, "ratio", None) is not None:
        return SystemParams.from_ratio(float(args.ratio), V=float(args.V))
    C = args.C if args.C is not None else 0.0
    return SystemParams(V=float(args.V), C=float(C))


def _write_csv(path: str, header: list[str], rows) -> int:
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
            n += 1
    return n


# subcommands --------------------------------------------------------------------


def cmd_levels(args) -> dict:
    p = _params(args)
    grid = parse_grid(args.gamma)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ParameterError("--gamma grid must be strictly ascending")
    sets = level_curve(p, grid)
    rows = [
        (ls.gamma, br, e, st.a.real, st.b.real)
        for ls in sets
        for br, e, st in zip(ls.branches, ls.energies, ls.states)
    ]
    n = _write_csv(args.out, ["gamma", "branch_label", "epsilon", "a_re", "b_re"], rows)
    res: dict = {"rows": n, "gamma_points": len(grid)}
    if p.C > p.V:
        res["gamma_c"] = gamma_c(p)
    return res


def cmd_portrait(args) -> dict:
    p = _params(args)
    thetas = np.linspace(-math.pi, math.pi, args.theta_points)
    header = ["gamma", "orbit_id", "theta", "s", "energy", "kind", "stability", "label"]
    rows = []
    counts = []
    if args.homoclinic:
        data = homoclinic(p)
        tr = homoclinic_trace(p, np.linspace(0.0, 2.0 * math.pi, args.theta_points))
        for q in tr.points:
            rows.append((data.gamma_c, 0, q.theta, q.s, data.E_c, tr.kind, None, None))
        fps = fixed_points(p, data.gamma_c)
        counts.append(len(fps))
        for fp in fps:
            rows.append((data.gamma_c, "fp", wrap_angle(fp.theta_star), fp.s_star, None, "fixed_point", fp.stability, fp.label))
        extra = {"gamma_c": data.gamma_c, "s_c": data.s_c, "E_c": data.E_c, "orbits": 1}
    else:
        gammas = parse_grid(args.gamma)
        energies = [] if args.fixed_only or not args.energies else parse_grid(args.energies)
        n_orbits = 0
        for g in gammas:
            pt = portrait(p, g, energies, thetas)
            counts.append(len(pt.fixed_points))
            for k, tr in enumerate(pt.orbits):
                for q in tr.points:
                    rows.append((g, n_orbits + k, q.theta, q.s, tr.energy, tr.kind, None, None))
            n_orbits += len(pt.orbits)
            for fp in pt.fixed_points:
                rows.append((g, "fp", wrap_angle(fp.theta_star), fp.s_star, None, "fixed_point", fp.stability, fp.label))
        extra = {"orbits": n_orbits}
    n = _write_csv(args.out, header, rows)
    return {"rows": n, "fixed_point_counts": counts, **extra}


def cmd_adiabatic(args) -> dict:
    V = float(args.V) if args.V is not None else 1.0
    ratios = parse_grid(args.ratio)
    params = [SystemParams.from_ratio(r, V=V) for r in ratios]
    rows = []
    for r, p in zip(ratios, params):
        g = gamma_adiabatic(p)
        if r > 1.0:
            rows.append((r, g, gamma_ad_small_delta(r - 1.0), gamma_ad_large_ratio(p), gamma_ad_leading_order(r - 1.0)))
        else:
            rows.append((r, g, None, None, None))
    header = ["ratio", "gamma_ad_action", "gamma_ad_small_delta", "gamma_ad_large_ratio", "gamma_ad_leading_order"]
    n = _write_csv(args.out, header, rows)
    return {"rows": n}


def cmd_sweep(args) -> dict:
    p = _params(args)
    if args.alpha is None:
        raise ParameterError("--alpha is required")
    spec = SweepSpec.for_params(p, float(args.alpha), args.gamma_max, allow_short=args.allow_short)
    if args.samples < 2:
        raise ParameterError("--samples must be >= 2")
    r = sweep_simulate(p, spec, rtol=args.rtol, atol=args.atol, n_samples=args.samples)
    sol = r.trajectory
    st = sol.states
    a2 = st[:, 0] ** 2 + st[:, 1] ** 2
    b2 = st[:, 2] ** 2 + st[:, 3] ** 2
    ab = (st[:, 0] - 1j * st[:, 1]) * (st[:, 2] + 1j * st[:, 3])
    theta = np.angle(ab)
    rows = zip(sol.times, spec.alpha * sol.times, b2 - a2, theta, np.abs(a2 + b2 - 1.0))
    n = _write_csv(args.out, ["t", "gamma", "s", "theta", "norm_error"], rows)
    out = {
        "rows": n,
        "gamma_prob": r.gamma_prob,
        "s_final_mean": r.s_final_mean,
        "s_final_osc_amplitude": r.s_final_osc_amplitude,
        "s_window_mean": r.s_window_mean,
        "gamma_endpoint": r.gamma_endpoint,
        "final_action": r.final_action,
        "accepted_steps": r.steps,
        "rejected_steps": r.rejected_steps,
        "max_norm_error": r.max_norm_error,
        "gamma_max": r.gamma_max,
    }
    if p.C == 0.0:
        out["lz_linear"] = lz_linear(p.V, spec.alpha)
    return out


def cmd_scaling(args) -> dict:
    alphas = parse_grid(args.alpha) if args.alpha else None
    kw = dict(gamma_max=args.gamma_max, rtol=args.rtol, atol=args.atol)
    if args.V is None:
        raise ParameterError("--V is required")
    V = float(args.V)
    if args.regime == "critical":
        if args.C is not None and args.C != V or args.ratio is not None and args.ratio != 1.0:
            raise ParameterError("critical regime forces C = V")
        rep = critical_scaling_fit(V, alphas, **kw)
        a = rep.alphas
        # the 3/4 law with its prefactor set by the data
        pref = math.exp(float(np.mean(np.log(rep.gammas) - 0.75 * np.log(a))))
        theory = [pref * x**0.75 for x in a]
        res = {"exponent": rep.summary["exponent"], "exponent_theory": 0.75,
               "max_abs_log_residual": rep.fit.max_abs_residual, "monotone": rep.summary["monotone"]}
    elif args.regime == "subcritical":
        p = _params(args)
        rep = subcritical_exponent_fit(p, alphas, **kw)
        theory = list(rep.theory)
        res = {k: rep.summary[k] for k in ("q_hat", "q_theory", "relative_deviation", "points_used")}
    else:
        p = _params(args)
        rep = strong_comparison(p, alphas, **kw)
        theory = list(rep.theory)
        res = {k: rep.summary[k] for k in ("max_discrepancy", "sudden_discrepancy", "adiabatic_discrepancy")}
    rows = [(a, g, t) for (a, g), t in zip(rep.points, theory)]
    n = _write_csv(args.out, ["alpha", "gamma_sim", "gamma_theory"], rows)
    return {"rows": n, "regime": args.regime, **res}


def cmd_qfactor(args) -> dict:
    ratios = parse_grid(args.ratio)
    bad = [r for r in ratios if not 0.0 <= r < 1.0]
    if bad:
        raise ParameterError(f"q is defined for 0 <= C/V < 1; got {bad}")
    V = float(args.V) if args.V is not None else 1.0
    qs = [q_factor(SystemParams.from_ratio(r, V=V)) for r in ratios]
    n = _write_csv(args.out, ["ratio", "q"], zip(ratios, qs))
    order = np.argsort(ratios)
    mono = bool(np.all(np.diff(np.asarray(qs)[order]) < 0))
    return {"rows": n, "strictly_decreasing": mono}


# parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlz", description="Nonlinear Landau-Zener tunneling toolkit")
    ap.add_argument("--version", action="version", version=f"nlz {__version__}")
    ap.add_argument("--config", help="JSON file of option values; command-line flags take precedence")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, need_ratio=False):
        sp.add_argument("--V", type=float, help="coupling V > 0")
        sp.add_argument("--C", type=float, help="nonlinearity C >= 0")
        if not need_ratio:
            sp.add_argument("--ratio", type=float, help="C/V instead of --C")
        sp.add_argument("--out", required=False, help="CSV output path")

    sp = sub.add_parser("levels", help="adiabatic energy levels over a bias grid")
    common(sp)
    sp.add_argument("--gamma", help="bias grid lo:hi:count")
    sp.set_defaults(func=cmd_levels)

    sp = sub.add_parser("portrait", help="fixed points and level curves of H_e")
    common(sp)
    sp.add_argument("--gamma", default="0", help="bias value(s)")
    sp.add_argument("--energies", help="energy grid for orbit traces")
    sp.add_argument("--fixed-only", action="store_true", help="emit fixed points only")
    sp.add_argument("--homoclinic", action="store_true", help="trace the homoclinic orbit at gamma_c")
    sp.add_argument("--theta-points", type=int, default=361)
    sp.set_defaults(func=cmd_portrait)

    sp = sub.add_parser("adiabatic", help="adiabatic tunneling probability vs C/V")
    sp.add_argument("--ratio", help="C/V grid")
    sp.add_argument("--V", type=float, default=None)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_adiabatic)

    sp = sub.add_parser("sweep", help="simulate one linear sweep")
    common(sp)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--gamma-max", type=float, default=None)
    sp.add_argument("--allow-short", action="store_true", help="accept gamma_max < 20 max(V, C)")
    sp.add_argument("--samples", type=int, default=2001, help="time-series rows")
    sp.add_argument("--rtol", type=float, default=SWEEP_RTOL)
    sp.add_argument("--atol", type=float, default=SWEEP_ATOL)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("scaling", help="scaling laws over an alpha grid")
    common(sp)
    sp.add_argument("--regime", choices=["critical", "subcritical", "strong"], required=False)
    sp.add_argument("--alpha", help="alpha grid (default: regime-specific)")
    sp.add_argument("--gamma-max", type=float, default=None)
    sp.add_argument("--rtol", type=float, default=SWEEP_RTOL)
    sp.add_argument("--atol", type=float, default=SWEEP_ATOL)
    sp.set_defaults(func=cmd_scaling)

    sp = sub.add_parser("qfactor", help="subcritical exponent factor q vs C/V")
    sp.add_argument("--ratio", help="C/V grid in [0, 1)")
    sp.add_argument("--V", type=float, default=None)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_qfactor)
    return ap


_REQUIRED = {
    "levels": ["out", "gamma"],
    "portrait": ["out"],
    "adiabatic": ["out", "ratio"],
    "sweep": ["out", "alpha"],
    "scaling": ["out", "regime"],
    "qfactor": ["out", "ratio"],
}


def _subparser(ap: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in ap._subparsers._group_actions:  # noqa: SLF001
        if isinstance(action, argparse._SubParsersAction):  # noqa: SLF001
            return action.choices[name]
    raise KeyError(name)


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError:
        raise
    except json.JSONDecodeError as exc:
        raise ParameterError(f"config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ParameterError("config must be a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def _bind_negative_values(argv: list[str]) -> list[str]:
    """Join ``--opt -4:4:9`` into ``--opt=-4:4:9`` so grids may start negative."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else ""
        if tok.startswith("--") and "=" not in tok and len(nxt) > 1 and nxt[0] == "-" and (nxt[1].isdigit() or nxt[1] == "."):
            out.append(f"{tok}={nxt}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def _resolve(argv) -> argparse.Namespace:
    argv = _bind_negative_values(list(sys.argv[1:] if argv is None else argv))
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.config:
        cfg = _load_config(args.config)
        sp = _subparser(ap, args.command)
        known = {a.dest for a in sp._actions}  # noqa: SLF001
        unknown = sorted(set(cfg) - known - {"command", "config"})
        if unknown:
            raise ParameterError(f"unknown config keys: {unknown}")
        cfg = {k: (",".join(map(str, v)) if isinstance(v, list) else v) for k, v in cfg.items() if k in known}
        sp.set_defaults(**cfg)
        args = ap.parse_args(argv)
    missing = [k for k in _REQUIRED[args.command] if getattr(args, k, None) in (None, "")]
    if missing:
        raise ParameterError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))
    return args


def main(argv=None) -> int:
    t_start = time.perf_counter()
    try:
        args = _resolve(argv)
    except ParameterError as exc:
        print(f"nlz: error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except OSError as exc:
        print(f"nlz: error: {exc}", file=sys.stderr)
        return EXIT_IO
    func: Callable = args.func
    try:
        results = func(args)
    except ParameterError as exc:
        print(f"nlz: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except (NumericalError, ArithmeticError) as exc:
        print(f"nlz: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"nlz: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    params = {k: v for k, v in vars(args).items() if k not in ("func",)}
    summary = {
        "tool": "nlz",
        "version": __version__,
        "command": args.command,
        "parameters": params,
        "tolerances": {
            "ode_rtol": DEFAULT_RTOL,
            "ode_atol": DEFAULT_ATOL,
            "quad_tol": DEFAULT_QUAD_TOL,
            "sweep_rtol": getattr(args, "rtol", SWEEP_RTOL),
            "sweep_atol": getattr(args, "atol", SWEEP_ATOL),
        },
        "wall_time_s": time.perf_counter() - t_start,
        "results": results,
    }
    print(json.dumps(summary, indent=2, default=float))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
