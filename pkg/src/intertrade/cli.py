"""Command-line interface: ``intertrade <command> [options]``.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .distfit import fit_qexp_nls, fit_weibull_mle
from .errors import ConfigError, DataError, IntertradeError
from .fileio import array_hash, atomic_write, dumps_json, read_series, read_table, table_csv
from .intraday import intraday_pattern
from .multifractal import is_concave, legendre_spectrum, multifractal_analysis
from .pipeline import q_grid, run_study, summarize
from .scaling import default_scales, estimate_hurst
from .stats import log_binned_pdf, scale_by_std
from .synth import SyntheticSpec, generate, shuffle
from .tickdata import (SessionConfig, TickSchema, extract_durations, parse_tick_files,
                       zero_fraction)

log = logging.getLogger("intertrade")


class UsageParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _globals(p, suppress):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="YAML config (study file, or per-command defaults)")
    p.add_argument("--seed", type=int, default=d if suppress else 0, help="random seed (default 0)")
    p.add_argument("--out-dir", default=d if suppress else ".", help="directory for output files")
    p.add_argument("--threads", type=int, default=d if suppress else 1,
                   help="worker threads for scale sweeps and file parsing")


def _ticks_args(p):
    p.add_argument("ticks", nargs="+", help="tick CSV file(s)")
    p.add_argument("--equity", help="keep only this equity id")
    p.add_argument("--sessions", nargs="+", default=None, metavar="HH:MM-HH:MM",
                   help="trading sessions (default 09:30-11:30 13:00-15:00)")
    p.add_argument("--date-col", default="date")
    p.add_argument("--time-col", default="time")
    p.add_argument("--equity-col", default="equity")
    p.add_argument("--delimiter", default=",")


def _scaling_args(p, method, multi=False):
    if method == "dfa":
        p.add_argument("--order", type=int, default=1, help="detrending polynomial order m")
    else:
        p.add_argument("--theta", type=float, default=0.0,
                       help="moving-average position: 0 backward, 0.5 centered, 1 forward")
    p.add_argument("--scales", type=int, nargs="+", help="explicit box sizes")
    p.add_argument("--s-min", type=int, default=20)
    p.add_argument("--n-scales", type=int, default=30)
    p.add_argument("--no-demean", dest="demean", action="store_false",
                   help="profile is the raw cumulative sum (for nonnegative measures)")
    if multi:
        p.add_argument("--q-min", type=float, default=-4.0)
        p.add_argument("--q-max", type=float, default=4.0)
        p.add_argument("--q-step", type=float, default=0.2)


def build_parser() -> argparse.ArgumentParser:
    parser = UsageParser(prog="intertrade", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    _globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=UsageParser)
    sub.required = True

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        _globals(p, suppress=True)
        return p

    p = add("ingest", "parse tick files, report malformed/rejected rows, write sorted ticks.csv")
    _ticks_args(p)
    p = add("durations", "extract intertrade durations (durations.csv)")
    _ticks_args(p)
    p = add("pdf", "log-binned density of scaled durations (pdf.csv)")
    p.add_argument("series")
    p.add_argument("--zero-policy", choices=("include", "exclude"), default="include")
    p.add_argument("--bins-per-decade", type=int, default=10)
    p = add("fit-weibull", "Weibull MLE on scaled durations (weibull.json)")
    p.add_argument("series")
    p.add_argument("--zero-policy", choices=("include", "exclude"), default="exclude")
    p.add_argument("--min-size", type=int, default=100)
    p = add("fit-qexp", "shifted power-law regression on the log-binned density (qexp.json)")
    p.add_argument("series")
    p.add_argument("--zero-policy", choices=("include", "exclude"), default="include")
    p.add_argument("--bins-per-decade", type=int, default=10)
    p.add_argument("--weighting", choices=("counts", "uniform"), default="counts")
    p = add("intraday", "mean duration per intraday interval (intraday.csv)")
    _ticks_args(p)
    p.add_argument("--interval", type=int, default=60, help="interval length in seconds")
    p.add_argument("--zero-policy", choices=("include", "exclude"), default="include")
    for name, method, multi in (("dfa", "dfa", False), ("dma", "dma", False),
                                ("mfdfa", "dfa", True), ("mfdma", "dma", True)):
        p = add(name, f"{name.upper()} of a one-column series ({name}.csv + {name}.json)")
        p.add_argument("series")
        _scaling_args(p, method, multi)
    p = add("spectrum", "Legendre spectrum from a q,h or q,tau table (spectrum.csv)")
    p.add_argument("table", help="CSV with columns q and h (or q and tau), e.g. mfdfa.csv")
    p = add("shuffle", "random permutation surrogate (shuffled.csv)")
    p.add_argument("series")
    p = add("generate", "synthetic series with a '# spec=' header (<kind>.csv)")
    p.add_argument("kind", choices=("fgn", "binomial-cascade", "iid-exponential", "iid-weibull",
                                    "iid-qexp", "iid-gaussian"))
    p.add_argument("-n", "--length", type=int, default=1 << 16)
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                   help="generator parameter, e.g. H=0.8, p=0.3, alpha=1.22")
    p = add("study", "run a configured study and write a manifest (needs --config)")
    return parser


def _sessions(args):
    if getattr(args, "sessions", None):
        return SessionConfig.from_strings(args.sessions)
    return SessionConfig()


def _load_ticks(args):
    cfg = _sessions(args)
    schema = TickSchema(args.date_col, args.time_col, args.equity_col, args.delimiter)
    for path in args.ticks:
        if not Path(path).is_file():
            raise DataError(f"no such file: {path}")
    ticks, report = parse_tick_files(args.ticks, schema, cfg, args.threads)
    if args.equity:
        ticks = ticks.for_equity(args.equity)
    return ticks, report, cfg


def _series(path):
    values, meta = read_series(path)
    if values.size == 0:
        raise DataError(f"{path}: empty series")
    return values, meta


def _write(args, name, text):
    path = Path(args.out_dir) / name
    atomic_write(path, text)
    log.info("wrote %s", path)
    return path


def _emit(obj):
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def cmd_ingest(args):
    ticks, report, _ = _load_ticks(args)
    _write(args, "ticks.csv", ticks.to_csv())
    info = {**report.as_dict(), "equities": ticks.equities()}
    _write(args, "ingest.json", dumps_json(info))
    _emit({k: info[k] for k in ("rows", "records", "malformed", "rejected")})


def cmd_durations(args):
    ticks, report, cfg = _load_ticks(args)
    d = extract_durations(ticks, cfg)
    if d.empty:
        raise DataError("no durations: fewer than two trades in every session")
    meta = {**d.meta(), "zero_fraction": repr(zero_fraction(d)), "malformed": report.malformed,
            "rejected": report.rejected}
    _write(args, "durations.csv", table_csv(["duration"], [d.values], meta))
    _emit({"n": len(d), "zero_fraction": zero_fraction(d), "n_days": d.n_days})


def cmd_pdf(args):
    values, _ = _series(args.series)
    pdf = log_binned_pdf(scale_by_std(values, args.zero_policy), args.bins_per_decade)
    _write(args, "pdf.csv", pdf.to_csv())
    _emit({"bins": int(pdf.nonempty().sum()), "atom_mass": pdf.atom_mass})


def cmd_fit_weibull(args):
    values, _ = _series(args.series)
    sample = scale_by_std(values, args.zero_policy)
    fit = fit_weibull_mle(sample, args.min_size)
    out = {**fit.to_dict(), "zero_policy": args.zero_policy, "sigma": sample.sigma,
           "input_hash": array_hash(values)}
    _write(args, "weibull.json", dumps_json(out))
    _emit({"alpha": fit.alpha, "beta": fit.beta})


def cmd_fit_qexp(args):
    values, _ = _series(args.series)
    sample = scale_by_std(values, args.zero_policy)
    fit = fit_qexp_nls(log_binned_pdf(sample, args.bins_per_decade), args.weighting)
    out = {**fit.to_dict(), "zero_policy": args.zero_policy, "sigma": sample.sigma,
           "input_hash": array_hash(values)}
    _write(args, "qexp.json", dumps_json(out))
    _emit({"g0": fit.g0, "gamma": fit.gamma, "a": fit.a})


def cmd_intraday(args):
    ticks, _, cfg = _load_ticks(args)
    pat = intraday_pattern(ticks, cfg, args.interval, args.zero_policy)
    _write(args, "intraday.csv", pat.to_csv())
    _emit({"intervals": len(pat), "n_days": pat.n_days})


def _scales(args, n, method):
    if args.scales:
        return np.asarray(args.scales, dtype=np.int64)
    return default_scales(n, method, args.n_scales, args.s_min)


def _scaling(args, method):
    values, _ = _series(args.series)
    curve = estimate_hurst(values, method, _scales(args, len(values), method),
                           order=getattr(args, "order", 1), theta=getattr(args, "theta", 0.0),
                           demean=args.demean, threads=args.threads)
    _write(args, f"{args.command}.csv", curve.to_csv())
    _write(args, f"{args.command}.json", dumps_json(curve.sidecar()))
    _emit({"H": curve.H, "H_ci": curve.H_ci, "E_rms": curve.E_rms, "method": curve.tag})


def _multifractal(args, method):
    values, _ = _series(args.series)
    qs = q_grid({"q_min": args.q_min, "q_max": args.q_max, "q_step": args.q_step})
    res = multifractal_analysis(values, method, _scales(args, len(values), method), qs,
                                order=getattr(args, "order", 1), theta=getattr(args, "theta", 0.0),
                                demean=args.demean, threads=args.threads)
    _write(args, f"{args.command}.csv", res.to_csv())
    _write(args, f"{args.command}_spectrum.csv", res.spectrum_csv())
    _write(args, f"{args.command}.json", dumps_json(res.sidecar()))
    _emit({"h2": res.h_at(2.0), "width": res.width, **res.flags})


def cmd_spectrum(args):
    try:
        cols, _ = read_table(args.table)
    except ValueError as exc:
        raise DataError(f"{args.table}: {exc}") from None
    if "q" not in cols or not ({"h", "tau"} & cols.keys()):
        raise DataError(f"{args.table}: need columns q and h (or tau)")
    q = cols["q"]
    tau = cols["tau"] if "tau" in cols else q * cols["h"] - 1.0
    alpha, f = legendre_spectrum(tau, q)
    order = np.argsort(alpha, kind="stable")
    _write(args, "spectrum.csv", table_csv(["alpha", "f"], [alpha[order], f[order]]))
    _emit({"width": float(alpha.max() - alpha.min()), "f_max": float(f.max()),
           "tau_concave": is_concave(tau, q)})


def cmd_shuffle(args):
    values, meta = _series(args.series)
    out = shuffle(values, args.seed)
    _write(args, "shuffled.csv", table_csv(["value"], [out], {"seed": str(args.seed),
                                                                "source_hash": array_hash(values)}))
    _emit({"n": int(out.size)})


def _param(text):
    key, sep, value = text.partition("=")
    if not sep:
        raise ConfigError(f"--param expects KEY=VALUE, got {text!r}")
    try:
        return key.strip(), yaml.safe_load(value)
    except yaml.YAMLError:
        return key.strip(), value


def cmd_generate(args):
    spec = SyntheticSpec(args.kind, args.length, args.seed, dict(_param(t) for t in args.param))
    try:
        x = generate(spec)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"missing or bad parameter for {args.kind}: {exc}") from None
    _write(args, f"{args.kind}.csv", table_csv(["value"], [x], {"spec": spec.to_json()}))
    _emit({"n": int(x.size), "mean": float(x.mean()), "std": float(x.std())})


def cmd_study(args):
    if not args.config:
        raise ConfigError("study needs --config")
    seed = args.seed if args.seed_given else None
    manifest = run_study(args.config, args.out_dir, args.threads, seed)
    sys.stdout.write(summarize(manifest) + "\n")
    return manifest.exit_code


COMMANDS = {
    "ingest": cmd_ingest, "durations": cmd_durations, "pdf": cmd_pdf,
    "fit-weibull": cmd_fit_weibull, "fit-qexp": cmd_fit_qexp, "intraday": cmd_intraday,
    "dfa": lambda a: _scaling(a, "dfa"), "dma": lambda a: _scaling(a, "dma"),
    "mfdfa": lambda a: _multifractal(a, "dfa"), "mfdma": lambda a: _multifractal(a, "dma"),
    "spectrum": cmd_spectrum, "shuffle": cmd_shuffle, "generate": cmd_generate, "study": cmd_study,
}


def _apply_config_defaults(parser, argv, args):
    """Per-command defaults from ``--config``: a mapping ``{command: {option: value}}``."""
    try:
        doc = yaml.safe_load(Path(args.config).read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    section = doc.get(args.command, {}) if isinstance(doc, dict) else None
    if not isinstance(section, dict):
        raise ConfigError(f"config section {args.command!r} must be a mapping")
    known = vars(args)
    vals = {}
    for key, value in section.items():
        dest = str(key).replace("-", "_")
        if dest not in known:
            raise ConfigError(f"unknown option {key!r} for {args.command}")
        vals[dest] = value
    sub = parser._subparsers._group_actions[0].choices[args.command]
    sub.set_defaults(**vals)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors (1), --help/--version (0)
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s: %(message)s")
    args.seed_given = any(a == "--seed" or a.startswith("--seed=") for a in argv)
    try:
        if args.config and args.command != "study":
            try:
                args = _apply_config_defaults(parser, argv, args)
            except SystemExit as exc:
                return int(exc.code or 0)
            args.seed_given = any(a == "--seed" or a.startswith("--seed=") for a in argv)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        code = COMMANDS[args.command](args)
        return int(code or 0)
    except IntertradeError as exc:
        sys.stderr.write(f"intertrade {args.command}: {exc}\n")
        return exc.exit_code
    except OSError as exc:
        sys.stderr.write(f"intertrade {args.command}: {exc}\n")
        return DataError.exit_code
    except FloatingPointError as exc:
        sys.stderr.write(f"intertrade {args.command}: numerical failure: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
