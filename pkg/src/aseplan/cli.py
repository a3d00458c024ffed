"""Command-line front end: point evaluations, parameter sweeps, planning, simulation.

Point commands print ``key=value`` lines; ``sweep`` emits CSV (default) or
JSON tables whose headers carry the quantity, its units, and every fixed
parameter, so outputs are self-describing and re-runs are byte-identical.

Exit codes: 0 success, 1 domain/usage error, 2 solver non-convergence.
All rates are nats-based: nats/s/Hz, nats/s/Hz/km^2, nats/s/Hz/W; NEC is
W/km^2.  The environment variable ASEPLAN_OUTPUT_DIR prefixes relative
sweep output paths.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import ase_optimizer, energy_planner, mc_sim, rate_model
from .numerics import BracketError, ConvergenceError, DomainError

_QUANTITY_UNITS = {
    "rate_exact": "nats/s/Hz",
    "rate_lb": "nats/s/Hz",
    "ase_exact": "nats/s/Hz/km^2",
    "ase_lb": "nats/s/Hz/km^2",
    "nec": "W/km^2",
    "ee": "nats/s/Hz/W",
}
_AXES = ("M", "K", "u", "lambda_b", "t_target")
_PROFILE_KEYS = {"p_dbm", "p_watts", "eta", "pc", "ppre", "p0"}


class _CliUsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _CliUsageError(message)


@dataclass(frozen=True)
class SweepRequest:
    quantity: str
    axis: str
    start: float
    stop: float
    step: float
    fixed: dict = field(default_factory=dict)
    output_path: str | None = None
    fmt: str = "csv"

    def __post_init__(self):
        if self.quantity not in _QUANTITY_UNITS:
            raise DomainError(f"unknown sweep quantity {self.quantity!r}")
        if self.axis not in _AXES:
            raise DomainError(f"unknown sweep axis {self.axis!r}")
        if not self.step > 0:
            raise DomainError("sweep step must be positive")
        if not self.start < self.stop:
            raise DomainError("sweep start must be below stop")
        if self.fmt not in ("csv", "json"):
            raise DomainError(f"unknown sweep format {self.fmt!r}")

    def values(self) -> list[float]:
        vals = []
        v = self.start
        # inclusive stop, guarded against accumulation error
        while v <= self.stop + 1e-9 * self.step:
            vals.append(round(v, 12))
            v = self.start + len(vals) * self.step
        return vals


def load_profile(name_or_path: str) -> energy_planner.BsPowerProfile:
    """Built-in profile by name, or a flat key=value file.

    File keys: exactly one of p_dbm / p_watts, plus eta, pc, ppre, p0.
    Lines starting with '#' are comments.
    """
    if name_or_path in energy_planner.BUILTIN_PROFILES:
        return energy_planner.BUILTIN_PROFILES[name_or_path]
    path = Path(name_or_path)
    if not path.is_file():
        raise DomainError(
            f"profile {name_or_path!r} is not a built-in "
            f"({', '.join(sorted(energy_planner.BUILTIN_PROFILES))}) or a readable file")
    fields: dict[str, float] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        if key not in _PROFILE_KEYS:
            raise DomainError(f"{path}:{lineno}: unknown profile field {key!r}")
        if key in fields:
            raise DomainError(f"{path}:{lineno}: duplicate field {key!r}")
        try:
            fields[key] = float(value.strip())
        except ValueError as exc:
            raise DomainError(f"{path}:{lineno}: non-numeric value for {key!r}") from exc
    has_dbm, has_watts = "p_dbm" in fields, "p_watts" in fields
    if has_dbm == has_watts:
        raise DomainError("profile file needs exactly one of p_dbm / p_watts")
    missing = {"eta", "pc", "ppre", "p0"} - fields.keys()
    if missing:
        raise DomainError(f"profile file is missing fields: {sorted(missing)}")
    p_watts = fields["p_watts"] if has_watts else energy_planner.dbm_to_watts(fields["p_dbm"])
    return energy_planner.BsPowerProfile(
        p_watts=p_watts, eta=fields["eta"], pc=fields["pc"],
        ppre=fields["ppre"], p0=fields["p0"])


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    if isinstance(value, energy_planner.PlanningMethod):
        return value.value
    return str(value)


def _emit(pairs, out) -> None:
    for key, value in pairs:
        print(f"{key}={_fmt(value)}", file=out)


def _parse_fixed(text: str | None) -> dict:
    fixed: dict = {}
    if not text:
        return fixed
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise DomainError(f"--fixed entries must be key=value, got {item!r}")
        key, _, value = item.partition("=")
        key = key.strip()
        value = value.strip()
        try:
            fixed[key] = int(value)
        except ValueError:
            try:
                fixed[key] = float(value)
            except ValueError:
                fixed[key] = value
    return fixed


def _require(fixed: dict, *names):
    missing = [n for n in names if n not in fixed]
    if missing:
        raise DomainError(f"sweep needs fixed parameters: {', '.join(missing)}")


def _sweep_point(req: SweepRequest, axis_value: float) -> float:
    q = req.quantity
    p = dict(req.fixed)
    alpha = float(p.get("alpha", 4.0))
    if req.axis in ("M", "K", "lambda_b", "t_target"):
        p[req.axis] = axis_value

    if q in ("rate_exact", "rate_lb", "ase_exact", "ase_lb"):
        lam = float(p.get("lambda_b", 1.0))
        if req.axis == "u":
            # bound quantities take the real loading directly; the exact
            # family needs an integer user count, rounded from u * M
            if q == "ase_lb":
                _require(p, "M")
            if q == "rate_exact" or q == "ase_exact":
                _require(p, "M")
                m = float(p["M"])
                k = min(max(round(axis_value * m), 1), int(m))
            else:
                m = float(p.get("M", 1.0))
                k = axis_value * m
        else:
            _require(p, "M", "K")
            m, k = float(p["M"]), p["K"]
        if q == "rate_exact":
            return rate_model.mean_rate_exact(m, k, alpha)
        if q == "rate_lb":
            return rate_model.mean_rate_lower_bound(m, float(k), alpha)
        if q == "ase_exact":
            return lam * k * rate_model.mean_rate_exact(m, k, alpha)
        return lam * float(k) * rate_model.mean_rate_lower_bound(m, float(k), alpha)

    _require(p, "profile")
    profile = load_profile(str(p["profile"]))
    if q == "nec":
        if req.axis != "t_target":
            raise DomainError("nec sweeps support only the t_target axis")
        method = str(p.get("method", "optimal"))
        problem = energy_planner.PlanningProblem(
            profile=profile, alpha=alpha, t_target=float(p["t_target"]))
        if method == "optimal":
            return energy_planner.plan_optimal(problem).nec
        if method == "suboptimal":
            return energy_planner.plan_suboptimal(problem).nec
        if method in ("su_mimo", "single_antenna"):
            return energy_planner.plan_baseline(problem, method).nec
        raise DomainError(f"unknown nec method {method!r}")
    # ee
    if req.axis not in ("M", "K"):
        raise DomainError("ee sweeps support only the M and K axes")
    _require(p, "M", "K")
    return energy_planner.energy_efficiency(profile, int(p["M"]), int(p["K"]), alpha)


def run_sweep(req: SweepRequest, out) -> None:
    values = req.values()
    points = [(v, _sweep_point(req, v)) for v in values]
    units = _QUANTITY_UNITS[req.quantity]
    fixed_desc = " ".join(f"{k}={_fmt(v)}" for k, v in sorted(req.fixed.items()))

    if req.output_path:
        base = Path(os.environ.get("ASEPLAN_OUTPUT_DIR", "."))
        path = Path(req.output_path)
        target = path if path.is_absolute() else base / path
        target.parent.mkdir(parents=True, exist_ok=True)
        fh = target.open("w", newline="")
    else:
        fh = None
    sink = fh if fh is not None else out
    try:
        if req.fmt == "csv":
            print(f"# quantity={req.quantity} units={units} axis={req.axis} "
                  f"fixed: {fixed_desc}", file=sink)
            print(f"{req.axis},{req.quantity}", file=sink)
            for v, y in points:
                print(f"{_fmt(v)},{_fmt(y)}", file=sink)
        else:
            doc = {
                "quantity": req.quantity,
                "units": units,
                "axis": req.axis,
                "fixed": {k: req.fixed[k] for k in sorted(req.fixed)},
                "points": [{req.axis: v, "value": y} for v, y in points],
            }
            json.dump(doc, sink, indent=2, sort_keys=True)
            print(file=sink)
    finally:
        if fh is not None:
            fh.close()


def _build_parser() -> _Parser:
    parser = _Parser(prog="aseplan",
                     description="ASE analysis and energy-minimal planning for "
                                 "Poisson ZF MU-MIMO networks")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        return p

    p = add("rate", "mean per-user rate (nats/s/Hz)")
    p.add_argument("--m", type=float, required=True, help="antennas per BS")
    p.add_argument("--k", type=float, required=True, help="active users per BS")
    p.add_argument("--alpha", type=float, default=4.0)
    p.add_argument("--lower-bound", action="store_true")

    p = add("ase", "area spectral efficiency (nats/s/Hz/km^2)")
    p.add_argument("--lambda-b", type=float, required=True, help="BS/km^2")
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--alpha", type=float, default=4.0)
    p.add_argument("--lower-bound", action="store_true")

    p = add("optimal-k", "ASE-optimal number of active users for a given M")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--alpha", type=float, default=4.0)
    p.add_argument("--method", choices=("exact", "lower-bound"), default="exact")

    p = add("gapa", "optimal loading fraction and gain on ASE per antenna")
    p.add_argument("--alpha", type=float, default=4.0)

    for name in ("plan", "plan-sub"):
        p = add(name, "energy-minimal deployment planning"
                      + (" (lower-bound alternation)" if name == "plan-sub" else ""))
        p.add_argument("--profile", required=True,
                       help="built-in name (macro/micro/pico) or key=value file")
        p.add_argument("--target", type=float, required=True,
                       help="ASE target, nats/s/Hz/km^2")
        p.add_argument("--alpha", type=float, default=4.0)
        p.add_argument("--k-max", type=int, default=64)
        p.add_argument("--m-max", type=int, default=512)
        if name == "plan-sub":
            p.add_argument("--initial-k", type=float, default=1.0)
            p.add_argument("--tolerance", type=float, default=0.5)
            p.add_argument("--max-iterations", type=int, default=50)

    p = add("baseline", "SU-MIMO or single-antenna reference plan")
    p.add_argument("--profile", required=True)
    p.add_argument("--target", type=float, required=True)
    p.add_argument("--alpha", type=float, default=4.0)
    p.add_argument("--kind", choices=("su_mimo", "single_antenna"), required=True)

    p = add("simulate", "Monte Carlo mean-rate estimate")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--alpha", type=float, default=4.0)
    p.add_argument("--lambda-b", type=float, default=1.0)
    p.add_argument("--radius", type=float, default=None, help="window radius, km")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("full_zf", "gamma_approx"), default="full_zf")
    p.add_argument("--power", type=float, default=1.0,
                   help="transmit power, W (must not change the result)")
    p.add_argument("--samples-csv", default=None,
                   help="write raw per-trial samples (trial,sir,rate,n_bs,r0)")

    p = add("validate-approx", "compare honest ZF against the Gamma approximation")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--alpha", type=float, default=4.0)
    p.add_argument("--lambda-b", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)

    p = add("sweep", "tabulate a quantity along an axis (CSV/JSON)")
    p.add_argument("--quantity", choices=sorted(_QUANTITY_UNITS), required=True)
    p.add_argument("--axis", choices=_AXES, required=True)
    p.add_argument("--range", required=True, metavar="START:STOP:STEP",
                   help="inclusive axis range")
    p.add_argument("--fixed", default="", help="comma-separated key=value pairs")
    p.add_argument("--output", default=None,
                   help="output file (relative paths land in $ASEPLAN_OUTPUT_DIR)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def _dispatch(args, out) -> None:
    cmd = args.command
    if cmd == "rate":
        cfg = rate_model.NetworkConfig(lambda_b=1.0, M=args.m, K=args.k,
                                       alpha=args.alpha)
        res = rate_model.mean_rate_result(cfg, lower_bound=args.lower_bound)
        _emit([("mean_rate", res.mean_rate),
               ("is_lower_bound", res.is_lower_bound),
               ("quadrature_error_estimate", res.quadrature_error_estimate)], out)
    elif cmd == "ase":
        cfg = rate_model.NetworkConfig(lambda_b=args.lambda_b, M=args.m,
                                       K=args.k, alpha=args.alpha)
        value = (rate_model.ase_lower_bound(cfg) if args.lower_bound
                 else rate_model.ase_exact(cfg))
        _emit([("ase", value)], out)
    elif cmd == "optimal-k":
        k = (ase_optimizer.optimal_k_exact(args.m, args.alpha)
             if args.method == "exact"
             else ase_optimizer.optimal_k_lower_bound(args.m, args.alpha))
        _emit([("k_star", k), ("method", args.method)], out)
    elif cmd == "gapa":
        sol = ase_optimizer.optimal_user_fraction(args.alpha)
        _emit([("u_star", sol.u_star), ("gapa", sol.gapa)], out)
    elif cmd in ("plan", "plan-sub"):
        problem = energy_planner.PlanningProblem(
            profile=load_profile(args.profile), alpha=args.alpha,
            t_target=args.target, k_search_max=args.k_max,
            m_search_max=args.m_max)
        if cmd == "plan":
            sol = energy_planner.plan_optimal(problem)
        else:
            sol = energy_planner.plan_suboptimal(
                problem, initial_k=args.initial_k, tolerance=args.tolerance,
                max_iterations=args.max_iterations)
        _emit([("m_star", sol.m_star), ("k_star", sol.k_star),
               ("lambda_b_star", sol.lambda_b_star), ("nec", sol.nec),
               ("energy_efficiency", sol.energy_efficiency),
               ("iterations", sol.iterations), ("method", sol.method),
               ("converged", sol.converged)], out)
    elif cmd == "baseline":
        problem = energy_planner.PlanningProblem(
            profile=load_profile(args.profile), alpha=args.alpha,
            t_target=args.target)
        sol = energy_planner.plan_baseline(problem, args.kind)
        _emit([("m_star", sol.m_star), ("k_star", sol.k_star),
               ("lambda_b_star", sol.lambda_b_star), ("nec", sol.nec),
               ("energy_efficiency", sol.energy_efficiency),
               ("method", sol.method)], out)
    elif cmd == "simulate":
        cfg = mc_sim.SimulationConfig(
            M=args.m, K=args.k, trials=args.trials, lambda_b=args.lambda_b,
            alpha=args.alpha, window_radius=args.radius, seed=args.seed,
            mode=args.mode, transmit_power=args.power)
        res = mc_sim.simulate_typical_user(cfg, samples_csv=args.samples_csv)
        pairs = [("mean_rate", res.mean_rate), ("std_error", res.std_error),
                 ("trials_used", res.trials_used)]
        pairs += [(f"sir_q{q:02d}", v) for q, v in res.sir_samples_summary.items()]
        pairs += [("g00_mean", res.g00_moments[0]),
                  ("g00_variance", res.g00_moments[1]),
                  ("gi0_mean", res.gi0_moments[0]),
                  ("gi0_variance", res.gi0_moments[1])]
        _emit(pairs, out)
    elif cmd == "validate-approx":
        cfg = mc_sim.SimulationConfig(
            M=args.m, K=args.k, trials=args.trials, lambda_b=args.lambda_b,
            alpha=args.alpha, seed=args.seed, mode="full_zf")
        rep = mc_sim.validate_gamma_approx(cfg)
        _emit([(name, getattr(rep, name)) for name in (
            "K", "gi0_mean", "gi0_variance", "gi0_mean_expected",
            "gi0_variance_expected", "gi0_mean_rel_dev", "gi0_variance_rel_dev",
            "full_zf_rate", "full_zf_std_error", "gamma_approx_rate",
            "gamma_approx_std_error", "rate_gap_relative")], out)
    else:  # sweep
        try:
            start, stop, step = (float(x) for x in args.range.split(":"))
        except ValueError as exc:
            raise DomainError(f"--range must be START:STOP:STEP, got {args.range!r}") from exc
        req = SweepRequest(quantity=args.quantity, axis=args.axis,
                           start=start, stop=stop, step=step,
                           fixed=_parse_fixed(args.fixed),
                           output_path=args.output, fmt=args.format)
        run_sweep(req, out)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        _dispatch(args, sys.stdout)
    except _CliUsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConvergenceError, BracketError) as exc:
        print(f"error: solver did not converge: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:   # argparse --help
        return int(exc.code or 0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
