"""Command-line entry point: ``nlgqkd <command> [options]``.

Table commands write CSV, or JSON with ``--format json``; simulate always
writes JSON. Output goes to stdout or ``--out``. CSV output starts with one
comment line recording the full configuration and package version, then a
header row. Exit codes: 0 success, 2 configuration
error, 3 infeasible parameters.
"""

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .entropy import (
    LOWER,
    UPPER,
    CurveTableError,
    example_table_path,
    load_bound_curve,
    tangent_of_curve,
)
from .games import (
    CHSH_OMEGA3_APPROX,
    MSG_OMEGA3,
    apply_depolarizing,
    chsh_game,
    chsh_honest_strategy,
    classical_value,
    load_game_file,
    msg_game,
    msg_honest_strategy,
    msg_win_prob_closed_form,
    quantum_win_prob,
)
from .keyrate import (
    CurveFamily,
    MoeFamily,
    ProtocolParams,
    SecurityBudget,
    asymptotic_rate,
    optimize_finite_rate,
    positivity_region,
)
from .protocol import (
    LinearCode,
    honest_devices,
    make_streams,
    monte_carlo_completeness,
    monte_carlo_correctness,
    run_protocol,
)

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 2, 3


class ConfigError(Exception):
    pass


def _floats(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "nan" if v != v else "-inf")
    return str(v)


def _config_line(args):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config", "out")}
    return f"# nlgqkd {__version__} config={json.dumps(cfg, sort_keys=True, default=str)}"


def _write_csv(args, header, rows):
    if getattr(args, "format", "csv") == "json":
        cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config", "out")}
        doc = {
            "version": __version__,
            "config": json.loads(json.dumps(cfg, default=str)),
            "rows": [dict(zip(header, (_fmt(v) for v in row))) for row in rows],
        }
        _emit(args, json.dumps(doc, sort_keys=True) + "\n")
        return
    buf = io.StringIO()
    buf.write(_config_line(args) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    _emit(args, buf.getvalue())


def _emit(args, text):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_game(spec):
    """``msg``, ``chsh`` or ``custom:path``; returns (game, honest strategy or None, omega3 guess)."""
    if spec == "msg":
        return msg_game(), msg_honest_strategy(), MSG_OMEGA3
    if spec == "chsh":
        return chsh_game(), chsh_honest_strategy(), CHSH_OMEGA3_APPROX
    if spec.startswith("custom:"):
        try:
            game, strat = load_game_file(spec.split(":", 1)[1])
        except (OSError, ValueError, KeyError) as e:
            raise ConfigError(f"bad game file: {e}") from None
        return game, strat, None
    raise ConfigError(f"unknown game {spec!r}; use msg, chsh or custom:PATH")


def _noisy(strat, q):
    per_pair = strat.pairs is not None and len(strat.pairs) > 1
    return apply_depolarizing(strat, q, per_pair=per_pair)


def _load_curve(spec):
    """``table:PATH`` or ``example:KIND``."""
    try:
        if spec.startswith("table:"):
            return load_bound_curve(spec.split(":", 1)[1])
        if spec.startswith("example:"):
            kind = {"upper": UPPER, "vn": LOWER}.get(spec.split(":", 1)[1], spec.split(":", 1)[1])
            return load_bound_curve(example_table_path(kind))
    except CurveTableError as e:
        raise ConfigError(f"malformed bound table: {e}") from None
    except (OSError, KeyError) as e:
        raise ConfigError(f"cannot read bound table: {e}") from None
    raise ConfigError(f"unknown bound source {spec!r}")


def cmd_game_value(args):
    game, strat, _ = _load_game(args.game)
    cv = classical_value(game)
    rows = []
    for q in _floats(args.q):
        qv = "" if strat is None else quantum_win_prob(game, _noisy(strat, q))
        rows.append((game.name, q, str(cv), qv))
    _write_csv(args, ("game", "q", "classical", "quantum"), rows)
    return EXIT_OK


def _family(args):
    if args.bound == "affine":
        return MoeFamily(1.0, args.omega3)
    return CurveFamily(_load_curve(args.bound))


def cmd_keyrate(args):
    ns = sorted(int(float(v)) for v in _floats(args.n))
    qs = sorted(_floats(args.q))
    try:
        budget = SecurityBudget.pedagogical(
            args.eps_sec, eps_corr=args.eps_corr, eps_com_pe=args.eps_com, eps_com_ec=args.eps_com
        )
    except ValueError as e:
        raise ConfigError(str(e)) from None
    rows = []
    any_feasible = False
    for q in qs:
        w = msg_win_prob_closed_form(q)
        fam = _family(args)
        for n in ns:
            params = ProtocolParams.standard(n, w, args.eps_com, args.eps_corr, args.xi)
            r = optimize_finite_rate(fam, params, budget, conservative=args.conservative, n_eps=args.eps_points)
            any_feasible |= r.feasible
            rows.append((q, n, r.rate, r.l_key, r.d1, r.d0, r.beta, r.eps_s, r.feasible))
        g = fam.bound(fam.clip(w))
        rows.append((q, "inf", asymptotic_rate(g, w, xi=args.xi), "", "", "", fam.clip(w), "", True))
    _write_csv(args, ("q", "n", "rate", "l_key", "d1", "d0", "beta", "eps_s", "feasible"), rows)
    return EXIT_OK if any_feasible or not ns else EXIT_INFEASIBLE


def cmd_region(args):
    w2 = np.linspace(args.omega_min, 1.0, args.steps)
    w3 = np.linspace(args.omega_min, 1.0, args.steps)
    extra = [(1.0, 8 / 9), ((2 + math.sqrt(2)) / 4, 0.75)] if args.mark_games else []
    cells = positivity_region(w2, w3, args.xi)
    rows = [(c.omega2, c.omega3, c.positive, c.rate) for c in cells]
    for a, b in extra:
        c = positivity_region([a], [b], args.xi)[0]
        rows.append((c.omega2, c.omega3, c.positive, c.rate))
    rows.sort(key=lambda r: (r[0], r[1]))
    _write_csv(args, ("omega2", "omega3", "positive", "rate"), rows)
    return EXIT_OK


def cmd_simulate(args):
    if args.force_mismatch:
        r = monte_carlo_correctness(args.length, args.l_ec, args.trials, seed=args.seed)
        summary = {
            "mode": "force-mismatch",
            "trials": r.trials,
            "hash_passes": r.events,
            "pass_rate": r.rate,
            "ci95": [r.ci_low, r.ci_high],
            "bound": 2.0**-args.l_ec,
        }
        _emit(args, json.dumps(summary, sort_keys=True) + "\n")
        return EXIT_OK
    game, strat, _ = _load_game(args.game)
    if strat is None:
        raise ConfigError("simulation needs a quantum strategy in the game file")
    noisy = _noisy(strat, args.q)
    w = quantum_win_prob(game, noisy)
    try:
        params = ProtocolParams.standard(args.n, w, args.eps_com, args.eps_corr, args.xi)
        if args.gamma is not None or args.delta_tol is not None:
            params = ProtocolParams(
                params.n,
                args.gamma if args.gamma is not None else params.gamma,
                args.delta_tol if args.delta_tol is not None else params.delta_tol,
                w,
                params.lambda_ec,
                params.l_ec,
                params.xi,
            )
    except ValueError as e:
        raise ConfigError(str(e)) from None
    code = None
    if args.ec_rows > 0:
        code = LinearCode.random(args.ec_block, args.ec_rows, args.ec_radius, make_streams(args.seed)["code"])
    if args.trials > 1:
        r = monte_carlo_completeness(
            game, lambda: honest_devices(game, noisy), params, args.trials, seed=args.seed, ec=code, l_key=args.l_key
        )
        summary = {
            "mode": "completeness",
            "trials": r.trials,
            "aborts": r.events,
            "abort_rate": r.rate,
            "ci95": [r.ci_low, r.ci_high],
            **r.detail,
            "gamma": params.gamma,
            "delta_tol": params.delta_tol,
            "omega_exp": w,
        }
        _emit(args, json.dumps(summary, sort_keys=True) + "\n")
        return EXIT_OK
    da, db = honest_devices(game, noisy)
    try:
        t = run_protocol(game, da, db, params, ec=code, seed=args.seed, l_key=args.l_key)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    if args.transcript:
        Path(args.transcript).write_text(t.to_json(indent=1) + "\n")
    summary = {
        "mode": "single",
        "F_PE": t.F_PE,
        "F_EC": t.F_EC,
        "aborted": t.aborted,
        "keys_match": t.keys_match,
        "pe_failures": t.pe_failures,
        "pe_threshold": t.pe_threshold,
        "l_key": t.l_key,
    }
    _emit(args, json.dumps(summary, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_bounds(args):
    curve = _load_curve(args.table)
    lo, hi = curve.domain
    if not lo <= args.beta <= hi:
        raise ConfigError(f"beta={args.beta} outside the table domain [{lo}, {hi}]")
    tan = tangent_of_curve(curve, args.beta)
    xs = np.union1d(np.linspace(lo, hi, args.samples), curve.xs)
    rows = [(float(x), float(curve(x)), float(tan(x)), bool(np.isin(x, curve.xs))) for x in xs]
    _write_csv(args, ("omega_ab", "curve", "tangent", "is_point"), rows)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="nlgqkd", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"nlgqkd {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file whose keys replace option defaults")
        sp.add_argument("--out", help="write output here instead of stdout")
        sp.add_argument("--format", choices=("csv", "json"), default="csv", help="table output format")

    sp = sub.add_parser("game-value", help="classical and honest quantum values")
    common(sp)
    sp.add_argument("--game", default="msg")
    sp.add_argument("--q", default="0", help="comma-separated noise levels")
    sp.set_defaults(func=cmd_game_value)

    sp = sub.add_parser("keyrate", help="optimised finite key rates over a range of n")
    common(sp)
    sp.add_argument("--q", default="0")
    sp.add_argument("--n", default=",".join(f"1e{k}" for k in range(6, 15)))
    sp.add_argument("--eps-sec", type=float, default=1e-6)
    sp.add_argument("--eps-corr", type=float, default=1e-6)
    sp.add_argument("--eps-com", type=float, default=1e-2)
    sp.add_argument("--xi", type=float, default=1.1)
    sp.add_argument("--omega3", type=float, default=MSG_OMEGA3)
    sp.add_argument("--bound", default="affine", help="affine, table:PATH, example:upper or example:vn")
    sp.add_argument("--eps-points", type=int, default=60)
    sp.add_argument("--conservative", action="store_true")
    sp.set_defaults(func=cmd_keyrate)

    sp = sub.add_parser("region", help="asymptotic positivity over (omega2, omega3)")
    common(sp)
    sp.add_argument("--steps", type=int, default=51)
    sp.add_argument("--omega-min", type=float, default=0.5)
    sp.add_argument("--xi", type=float, default=1.1)
    sp.add_argument("--mark-games", action="store_true", help="add the MSG and CHSH cells")
    sp.set_defaults(func=cmd_region)

    sp = sub.add_parser("simulate", help="run the protocol or its Monte Carlo harnesses")
    common(sp)
    sp.add_argument("--game", default="msg")
    sp.add_argument("--q", type=float, default=0.0)
    sp.add_argument("--n", type=int, default=2000)
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--eps-com", type=float, default=1e-2)
    sp.add_argument("--eps-corr", type=float, default=1e-6)
    sp.add_argument("--xi", type=float, default=1.1)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--delta-tol", type=float)
    sp.add_argument("--l-key", type=int, default=256)
    sp.add_argument("--ec-block", type=int, default=64)
    sp.add_argument("--ec-rows", type=int, default=0, help="syndrome bits per block; 0 disables the code")
    sp.add_argument("--ec-radius", type=int, default=3)
    sp.add_argument("--transcript", help="write the transcript JSON here")
    sp.add_argument("--force-mismatch", action="store_true")
    sp.add_argument("--length", type=int, default=64, help="string length for --force-mismatch")
    sp.add_argument("--l-ec", type=int, default=16)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("bounds", help="sample a tabulated bound and its tangent")
    common(sp)
    sp.add_argument("--table", default="example:upper")
    sp.add_argument("--beta", type=float, default=0.98)
    sp.add_argument("--samples", type=int, default=101)
    sp.set_defaults(func=cmd_bounds)
    return p


def _apply_config(parser, argv):
    """Re-parse with defaults taken from ``--config`` so explicit flags still win."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, ValueError) as e:
        raise ConfigError(f"cannot read config: {e}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    sp = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sp._actions}
    unknown = sorted(k.replace("-", "_") for k in cfg if k.replace("-", "_") not in known)
    if unknown:
        raise ConfigError(f"unknown config keys {unknown}")
    sp.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
    return parser.parse_args(argv)


def main(argv=None):
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        return args.func(args)
    except ConfigError as e:
        print(f"nlgqkd: error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as e:
        return EXIT_CONFIG if e.code not in (0, None) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
