"""Command-line front end.

Every command writes its resolved configuration (``config.txt``, flat
``key = value`` lines) next to its outputs; passing that file back through
``--config`` reproduces the run.

Exit codes: 0 success, 2 bad arguments, 3 failed internal invariant check.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import mc, parrondo, stationary, stats, walk
from .model import RatchetParams, drift_mu, parse_rational, ratchet_invariant_density, sawtooth_V

log = logging.getLogger("ratchetlab")

EXIT_USAGE = 2
EXIT_INVARIANT = 3


class InvariantViolation(RuntimeError):
    pass


class UsageError(ValueError):
    pass


def read_config(path) -> dict[str, str]:
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}: malformed line {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def write_config(args: argparse.Namespace, out_dir: Path) -> None:
    skip = {"func", "config", "out", "threads", "verbose", "command"}
    lines = [f"command = {args.command}"]
    for key, value in sorted(vars(args).items()):
        if key in skip or value is None:
            continue
        if isinstance(value, bool):
            value = str(value).lower()
        elif isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    (out_dir / "config.txt").write_text("\n".join(lines) + "\n")


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get("RATCHETLAB_THREADS")
    return int(env) if env else (os.cpu_count() or 1)


def _params(args) -> RatchetParams:
    alpha = parse_rational(args.alpha)
    lam = args.lam
    if lam is None:
        if getattr(args, "gamma", None) is None:
            raise UsageError("give --lambda or --gamma")
        lam = 2.0 * args.gamma / (1.0 - float(alpha))
    try:
        return RatchetParams.from_alpha(alpha, args.L, lam, args.tau1, args.tau2)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _schedule(params: RatchetParams, n: int) -> walk.FlashingSchedule:
    try:
        return walk.FlashingSchedule.for_params(params, n)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _check(cond: bool, what: str) -> None:
    if not cond:
        raise InvariantViolation(what)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def cmd_potential(args, out: Path) -> None:
    if not args.points >= 1 or not args.to > args.from_:
        raise UsageError("need --to > --from and --points >= 1")
    p = _params(args)
    xs = np.linspace(args.from_, args.to, args.points)
    V = sawtooth_V(xs, p)
    mu = drift_mu(xs, p)
    dens = ratchet_invariant_density(xs, p)
    with open(out / "potential.csv", "w") as fh:
        fh.write("x,V,mu,invariant_density\n")
        for row in zip(xs, V, mu, dens):
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    print(f"wrote {args.points} rows to {out / 'potential.csv'}")


def cmd_parrondo(args, out: Path) -> None:
    try:
        spec = parrondo.GameBSpec(args.l, args.L, float(parse_rational(args.rho)))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    pi = parrondo.invariant_measure_B(spec)
    report = {
        "rho": spec.rho, "l": spec.l, "L": spec.L_period,
        "p0": spec.p0, "p1": spec.p1,
        "invariant_measure_B": pi.tolist(),
        "profit_A": parrondo.mean_profit_single(parrondo.game_a_chain(spec.L_period)),
        "profit_B": parrondo.mean_profit_single(spec.chain()),
    }
    if args.mix is not None:
        try:
            report["mixture_c"] = args.mix
            report["profit_mixture"] = parrondo.mean_profit_mixture(args.mix, spec)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    if args.pattern is not None:
        r, s = args.pattern
        if r < 1 or s < 1:
            raise UsageError("pattern exponents must be >= 1")
        total = parrondo.mean_profit_pattern(r, s, spec)
        report["pattern"] = [r, s]
        report["profit_pattern_per_period"] = total
        report["profit_pattern_per_play"] = total / (r + s)
    (out / "parrondo.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"p0 = {spec.p0:.10g}, p1 = {spec.p1:.10g}")
    print("invariant measure of B:", ", ".join(f"{x:.10g}" for x in pi))
    print(f"mean profit A = {report['profit_A']:.3g}, B = {report['profit_B']:.3g}")
    if "profit_mixture" in report:
        print(f"mixture c={args.mix}: mean profit {report['profit_mixture']:.10g}")
    if "pattern" in report:
        print(f"pattern A^{r} B^{s}: profit per period {total:.10g}")


def _initial(args, n: int) -> walk.LatticeDistribution:
    if args.resume:
        d = walk.load_checkpoint(args.resume)
        if d.n_scale != n:
            raise UsageError(f"checkpoint has n={d.n_scale}, expected {n}")
        return d
    if args.input:
        return walk.read_csv(args.input, n)
    site = parse_rational(args.start) * n
    if site.denominator != 1:
        raise UsageError(f"--start {args.start} is not a lattice point at n={n}")
    return walk.LatticeDistribution.point_mass(int(site), n)


def _stats_json(s: stats.PeakStats) -> dict:
    return {"areas": list(s.areas), "heights": list(s.heights), "mean": s.mean}


def cmd_evolve(args, out: Path) -> None:
    p = _params(args)
    sched = _schedule(p, args.n)
    if (args.steps is None) == (args.time is None):
        raise UsageError("give exactly one of --steps / --time")
    try:
        steps = args.steps if args.steps is not None else sched.steps_for_time(args.time)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if steps < 0:
        raise UsageError("step count must be >= 0")
    init = _initial(args, args.n)
    mass0 = init.total_mass()
    dist = walk.evolve_flashing(init, p, sched, steps)
    _check(abs(dist.total_mass() - mass0) <= 1e-12 * max(1.0, mass0), "mass not conserved")
    _check(dist.wrong_parity_mass() == 0.0, "mass on wrong-parity sites")
    walk.write_csv(dist, out / "distribution.csv")
    if args.checkpoint:
        walk.save_checkpoint(dist, args.checkpoint)
    s = stats.peak_stats(dist, p)
    payload = _stats_json(s) | {"steps_taken": dist.steps_taken, "total_mass": dist.total_mass()}
    (out / "stats.json").write_text(json.dumps(payload, indent=2) + "\n")
    print(f"steps {dist.steps_taken}, mean displacement {s.mean:.6f}")


def cmd_stationary(args, out: Path) -> None:
    p = _params(args)
    sched = _schedule(p, args.n)
    res = stationary.stationary_analysis(p, sched, args.extra_step)
    mat = res.matrix
    _check(mat.row_sum_defect() < 1e-10, "cycle matrix is not stochastic")
    _check(mat.is_irreducible(), "cycle matrix is reducible")
    residual = float(np.abs(res.pibar @ mat.entries - res.pibar).max())
    _check(residual < 1e-10, f"stationary residual {residual:.3g}")
    stationary.write_stationary_csv(res, p, args.n, out / "stationary.csv")
    for name, d in zip(("panel1_start", "panel2_after_off", "panel3_after_cycle"),
                       stationary.cycle_snapshots(res, p, sched)):
        walk.write_csv(d, out / f"{name}.csv")
    if args.matrix:
        stationary.save_matrix(mat, out / "cycle_matrix.bin")
    rate = res.mubar / float(p.tau1 + p.tau2)
    report = {"mubar": res.mubar, "rate": rate, "cycle_steps": mat.cycle_steps,
              "extra_step": mat.extra_step, "size": mat.size, "residual": residual}
    (out / "stationary.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"mubar = {res.mubar:.6f}  (per unit time {rate:.6f}; cycle of {mat.cycle_steps} steps)")


def _parse_values(text: str) -> list[float]:
    vals = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            a, b, c = (float(x) for x in part.split(":"))
            k = int(math.floor((b - a) / c + 1e-9))
            vals.extend(a + i * c for i in range(k + 1))
        elif part:
            vals.append(float(part))
    if not vals:
        raise UsageError("empty value list")
    return vals


def _as_key(v: float):
    return int(v) if float(v).is_integer() else v


def cmd_sweep(args, out: Path) -> None:
    threads = _threads(args)
    if args.kind == "tau":
        if not args.grid:
            raise UsageError("sweep tau needs --grid")
        p = _params(args)
        grid = []
        for line in Path(args.grid).read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#") or line.lower().startswith("tau1"):
                continue
            a, b = (x.strip() for x in line.split(","))
            grid.append((parse_rational(a), parse_rational(b)))
        try:
            opt = stats.optimize_tau(p, grid, args.n, n_floor=args.n_floor, max_n=args.max_n, threads=threads)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        with open(out / "tau_table.csv", "w") as fh:
            fh.write("tau1,tau2,n,mubar,rate,skipped\n")
            for c in opt.table:
                fh.write(f"{c.tau1},{c.tau2},{c.n or ''},"
                         f"{'' if c.mubar is None else _fmt(c.mubar)},"
                         f"{'' if c.rate is None else _fmt(c.rate)},{c.skipped or ''}\n")
        b = opt.best
        print(f"best: tau1={b.tau1}, tau2={b.tau2}, n={b.n}, mubar={b.mubar:.6f}, rate={b.rate:.6f}")
        return
    values = _parse_values(args.values)
    p = _params(args)
    if args.kind == "lambda":
        keys = [_as_key(v) for v in values]
        table = stats.lambda_sweep(values, p, args.n, threads=threads)
        name = "lambda"
    else:
        keys = [int(v) for v in values]
        try:
            table = stats.n_sweep(keys, p, threads=threads)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        name = "n"
    stats.write_table_csv(keys, table, out / f"sweep_{name}.csv")
    text = stats.format_table(keys, table, name)
    (out / f"sweep_{name}.txt").write_text(text + "\n")
    print(text)


def cmd_mc(args, out: Path) -> None:
    p = _params(args)
    try:
        cfg = mc.McConfig(args.paths, args.dt, args.seed, args.wrap)
        if args.pure:
            samples = mc.simulate_ratchet(p, cfg, args.time, float(parse_rational(args.start)))
        else:
            samples = mc.simulate_flashing(p, cfg, args.time, float(parse_rational(args.start)))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    mc.write_samples_csv(samples, out / "samples.csv")
    mc.write_histogram_csv(samples, out / "histogram.csv", bins=args.bins)
    report = {"paths": cfg.paths, "dt": cfg.dt, "seed": cfg.seed, "mean": float(samples.mean()),
              "std": float(samples.std(ddof=1)) if samples.size > 1 else 0.0}
    if args.compare:
        if args.n is None:
            raise UsageError("--compare needs --n for the exact distribution")
        exact = walk.read_csv(args.compare, args.n)
        report["ks"] = mc.ks_distance(samples, exact)
        report["ks_critical_1pct"] = mc.ks_critical(samples.size)
        report["exact_mean"] = exact.mean()
    (out / "mc_report.json").write_text(json.dumps(report, indent=2) + "\n")
    line = f"mean {report['mean']:.6f} over {cfg.paths} paths"
    if "ks" in report:
        line += f"; KS vs exact {report['ks']:.4f}"
    print(line)


def _add_model(sp, need_lambda=True):
    sp.add_argument("--alpha", default="1/4", help="rational, e.g. 1/4")
    sp.add_argument("--L", type=int, default=4)
    sp.add_argument("--lambda", dest="lam", type=float, default=5.0 if need_lambda else None)
    sp.add_argument("--tau1", default="2.4")
    sp.add_argument("--tau2", default="2.4")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ratchetlab", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="key = value file supplying defaults")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--threads", type=int, help="worker threads (env RATCHETLAB_THREADS)")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("potential", help="sample V, mu and the invariant density")
    _add_model(sp, need_lambda=False)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--from", dest="from_", type=float, default=-6.0)
    sp.add_argument("--to", type=float, default=6.0)
    sp.add_argument("--points", type=int, default=1201)
    sp.set_defaults(func=cmd_potential)

    sp = sub.add_parser("parrondo", help="games A/B: probabilities, invariant measure, profits")
    sp.add_argument("--rho", default="1/3")
    sp.add_argument("--l", type=int, default=1)
    sp.add_argument("--L", type=int, default=3)
    sp.add_argument("--mix", type=float)
    sp.add_argument("--pattern", type=int, nargs=2, metavar=("R", "S"))
    sp.set_defaults(func=cmd_parrondo)

    sp = sub.add_parser("evolve", help="exact flashing-walk distribution")
    _add_model(sp)
    sp.add_argument("--n", type=int, default=100)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--time")
    sp.add_argument("--start", default="0", help="physical start position")
    sp.add_argument("--input", help="distribution CSV to start from")
    sp.add_argument("--resume", help="binary checkpoint to start from")
    sp.add_argument("--checkpoint", help="write a binary checkpoint here")
    sp.set_defaults(func=cmd_evolve)

    sp = sub.add_parser("stationary", help="wrapped cycle chain, stationary law and mubar")
    _add_model(sp)
    sp.add_argument("--n", type=int, default=100)
    sp.add_argument("--extra-step", choices=[stationary.EXTRA_SYMMETRIC, stationary.EXTRA_RATCHET],
                    default=stationary.EXTRA_SYMMETRIC)
    sp.add_argument("--matrix", action="store_true", help="also export the cycle matrix")
    sp.set_defaults(func=cmd_stationary)

    sp = sub.add_parser("sweep", help="Table-style sweeps over lambda or n, or a tau grid search")
    sp.add_argument("kind", choices=["lambda", "n", "tau"])
    _add_model(sp)
    sp.add_argument("--values", default="1,2,3,4,5,10,15,20,25,50")
    sp.add_argument("--n", type=int, default=100)
    sp.add_argument("--grid", help="CSV of tau1,tau2 rows")
    sp.add_argument("--n-floor", type=int)
    sp.add_argument("--max-n", type=int, default=400)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("mc", help="Euler-Maruyama simulation")
    _add_model(sp)
    sp.add_argument("--paths", type=int, default=100_000)
    sp.add_argument("--dt", type=float, default=1e-4)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--time", default="4.8")
    sp.add_argument("--start", default="0")
    sp.add_argument("--wrap", action="store_true")
    sp.add_argument("--pure", action="store_true", help="pure ratchet instead of flashing")
    sp.add_argument("--bins", type=int, default=200)
    sp.add_argument("--compare", help="exact distribution CSV (from evolve)")
    sp.add_argument("--n", type=int, help="lattice scale of --compare")
    sp.set_defaults(func=cmd_mc)
    return ap


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    cfg = read_config(args.config)
    cfg.pop("command", None)
    # config values act as defaults; explicit flags still win
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in cfg.items():
        action = known.get(key)
        if action is None:
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        if action.nargs == 0:
            defaults[key] = raw.lower() == "true"
        elif action.nargs in (2, "+", "*"):
            defaults[key] = [action.type(v) if action.type else v for v in raw.split(",")]
        else:
            defaults[key] = action.type(raw) if action.type else raw
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _apply_config(parser, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        args.func(args, out)
        write_config(args, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except SystemExit as exc:
        return int(exc.code or 0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
