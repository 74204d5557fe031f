"""End-to-end studies driven by a declarative config, with a reproducible run manifest.

A study config (YAML or JSON) names one input (tick files, a one-column
series, or a synthetic spec) and a set of analyses. Every parameter is
resolved to an explicit value before anything runs; the resolved config,
input hashes and artifact hashes go into ``manifest.json``. Feeding a
manifest back to :func:`run_study` reproduces every artifact byte for byte.
"""
from __future__ import annotations

import json
import logging
import platform
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from . import __version__, kernels
from .distfit import compare_fits, fit_qexp_nls, fit_weibull_mle
from .errors import ConfigError, DataError, IntertradeError
from .fileio import array_hash, atomic_write, dumps_json, sha256_bytes, sha256_file, read_series, table_csv
from .intraday import intraday_pattern
from .multifractal import multifractal_analysis, validate_q_grid
from .scaling import default_scales, estimate_hurst
from .stats import log_binned_pdf, scale_by_std
from .synth import SyntheticSpec, generate, shuffle
from .tickdata import (DurationSeries, SessionConfig, TickSchema, TickTable, aggregate_per_minute,
                       extract_durations, parse_tick_files, zero_fraction)

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1

DEFAULTS = {
    "durations": {},
    "pdf": {"zero_policy": "include", "bins_per_decade": 10, "period_partition": 0},
    "fit-weibull": {"zero_policy": "exclude", "min_size": 100},
    "fit-qexp": {"zero_policy": "include", "bins_per_decade": 10, "weighting": "counts",
                 "min_bins": 10},
    "intraday": {"zero_policy": "include", "interval_seconds": 60},
    "dfa": {"order": 1, "scales": None, "n_scales": 30, "s_min": 20, "demean": True},
    "dma": {"theta": 0.0, "scales": None, "n_scales": 30, "s_min": 20, "demean": True},
    "mfdfa": {"order": 1, "scales": None, "n_scales": 30, "s_min": 20, "demean": True,
              "q_min": -4.0, "q_max": 4.0, "q_step": 0.2},
    "mfdma": {"theta": 0.0, "scales": None, "n_scales": 30, "s_min": 20, "demean": True,
              "q_min": -4.0, "q_max": 4.0, "q_step": 0.2},
    "shuffle": {"methods": ["dfa"]},
}
ANALYSIS_ORDER = tuple(DEFAULTS)


def load_schema() -> dict:
    text = resources.files("intertrade").joinpath("schema/study.schema.json").read_text("utf-8")
    return json.loads(text)


def load_config(path) -> dict:
    """Read a YAML/JSON study config, or the resolved config inside a manifest."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    if "manifest_version" in doc:
        return doc["config"]
    return _rebase_paths(doc, path.parent)


def _rebase_paths(cfg, base: Path):
    inp = cfg.get("input")
    if isinstance(inp, dict):
        inp = dict(inp)
        if isinstance(inp.get("ticks"), list):
            inp["ticks"] = [str((base / p).resolve()) for p in inp["ticks"]]
        if isinstance(inp.get("series"), str):
            inp["series"] = str((base / inp["series"]).resolve())
        cfg = {**cfg, "input": inp}
    return cfg


def validate_config(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None


def resolve_config(cfg: dict, seed: int | None = None) -> dict:
    """Validate and fill every default so the manifest states all parameters."""
    validate_config(cfg)
    inp = dict(cfg["input"])
    if "ticks" in inp:
        inp["ticks"] = [str(Path(p).resolve()) for p in inp["ticks"]]
        inp["schema"] = {**{"date": "date", "time": "time", "equity": "equity", "delimiter": ","},
                         **inp.get("schema", {})}
    if "series" in inp:
        inp["series"] = str(Path(inp["series"]).resolve())
    out = {
        "input": inp,
        "sessions": list(cfg.get("sessions", ["09:30:00-11:30:00", "13:00:00-15:00:00"])),
        "seed": int(seed if seed is not None else cfg.get("seed", 0)),
        "series": cfg.get("series", "raw"),
        "per_minute_fill": cfg.get("per_minute_fill", "previous"),
        "analyses": {},
    }
    if "synthetic" in inp:
        syn = inp["synthetic"]
        inp["synthetic"] = {"kind": syn["kind"], "n": int(syn.get("n", 1 << 16)),
                            "seed": int(syn.get("seed", out["seed"])),
                            "params": dict(syn.get("params", {}))}
    for name in ANALYSIS_ORDER:
        if name in cfg["analyses"]:
            out["analyses"][name] = {**DEFAULTS[name], **(cfg["analyses"][name] or {})}
    if "shuffle" in out["analyses"]:
        out["analyses"]["shuffle"].setdefault("seed", out["seed"])
    for name in ("mfdfa", "mfdma"):
        if name in out["analyses"]:
            q_grid(out["analyses"][name])
    SessionConfig.from_strings(out["sessions"])
    return out


def q_grid(opts: dict) -> np.ndarray:
    lo, hi, step = float(opts["q_min"]), float(opts["q_max"]), float(opts["q_step"])
    count = int(round((hi - lo) / step)) + 1
    if count < 5 or abs(lo + (count - 1) * step - hi) > 1e-9:
        raise ConfigError("q grid: (q_max - q_min) must be a multiple of q_step with >= 5 points")
    return validate_q_grid(np.round(np.linspace(lo, hi, count), 12))


def partition_periods(ticks: TickTable, k: int):
    """Split ticks into ``k`` contiguous day ranges whose day counts differ by at most one.

    The first ``n_days % k`` periods get the extra day.
    """
    if k < 2:
        raise ConfigError("period partition needs k >= 2")
    days = ticks.trading_days()
    if len(days) < k:
        raise DataError(f"cannot split {len(days)} trading days into {k} periods")
    sizes = [len(days) // k + (1 if i < len(days) % k else 0) for i in range(k)]
    bounds = np.cumsum([0] + sizes)
    return [ticks[(ticks.day >= days[bounds[i]]) & (ticks.day <= days[bounds[i + 1] - 1])]
            for i in range(k)]


def period_collapse(pdfs):
    """Largest pairwise density gap over shared bins, and the binning noise it is judged against.

    The noise of one bin is ``sqrt(count) / (n * width)``; a pair's noise is the
    root sum of squares of its two bins. Only bins with at least 10 counts in
    both periods enter. Returns ``(sup_distance, noise)`` where ``noise`` is the
    largest pair noise over the same bins.
    """
    keyed = []
    for p in pdfs:
        keys = np.round(np.log10(p.bin_edges[:-1]) * 1e6).astype(np.int64)
        keyed.append(dict(zip(keys.tolist(), zip(p.densities, p.counts, p.widths, [p.n] * len(keys)))))
    dist, noise = 0.0, 0.0
    for i in range(len(keyed)):
        for j in range(i + 1, len(keyed)):
            for key in keyed[i].keys() & keyed[j].keys():
                di, ci, wi, ni = keyed[i][key]
                dj, cj, wj, nj = keyed[j][key]
                if ci < 10 or cj < 10:
                    continue
                dist = max(dist, abs(di - dj))
                noise = max(noise, float(np.hypot(np.sqrt(ci) / (ni * wi), np.sqrt(cj) / (nj * wj))))
    return dist, noise


@dataclass
class RunManifest:
    config: dict
    inputs: list = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)
    analyses: dict = field(default_factory=dict)
    ingest: dict = field(default_factory=dict)
    tool: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        codes = [a.get("exit_code", 0) for a in self.analyses.values()]
        return max(codes, default=0)

    def to_dict(self):
        return {"manifest_version": MANIFEST_VERSION, "config": self.config, "inputs": self.inputs,
                "artifacts": self.artifacts, "analyses": self.analyses, "ingest": self.ingest,
                "tool": self.tool}

    def to_json(self) -> str:
        return dumps_json(self.to_dict())


class _Study:
    """Loaded inputs shared by the analyses of one run."""

    def __init__(self, cfg: dict, threads: int):
        self.cfg = cfg
        self.threads = threads
        self.sessions = SessionConfig.from_strings(cfg["sessions"])
        self.ticks = None
        self.durations = None
        self.inputs = []
        self.ingest = {}
        inp = cfg["input"]
        if "ticks" in inp:
            self._load_ticks(inp)
        elif "series" in inp:
            values, meta = read_series(inp["series"])
            self.inputs.append({"path": inp["series"], "sha256": sha256_file(inp["series"])})
            self.values = values.astype(np.float64)
            if np.all(values >= 0):
                self.durations = DurationSeries(values, meta.get("equity_id"))
        else:
            spec = SyntheticSpec.from_dict(inp["synthetic"])
            self.values = generate(spec)
            self.inputs.append({"synthetic": json.loads(spec.to_json()),
                                "sha256": array_hash(self.values)})
            if np.all(self.values >= 0):
                self.durations = DurationSeries(self.values)

    def _load_ticks(self, inp):
        schema = TickSchema(**inp["schema"])
        for p in inp["ticks"]:
            self.inputs.append({"path": p, "sha256": sha256_file(p)})
        ticks, report = parse_tick_files(inp["ticks"], schema, self.sessions, self.threads)
        if "equity" in inp:
            ticks = ticks.for_equity(inp["equity"])
        self.ticks = ticks
        self.ingest = {**report.as_dict(), "equities": ticks.equities()}
        self.durations = extract_durations(ticks, self.sessions)
        self.values = self.durations.values.astype(np.float64)
        self.ingest["zero_fraction"] = zero_fraction(self.durations) if len(self.durations) else None

    def need_durations(self):
        if self.durations is None:
            raise DataError("analysis needs a nonnegative duration series")
        if self.durations.empty:
            raise DataError("duration series is empty")
        return self.durations

    def need_ticks(self):
        if self.ticks is None:
            raise DataError("analysis needs tick input")
        return self.ticks

    def scaling_series(self):
        if self.cfg["series"] == "per-minute":
            return aggregate_per_minute(self.need_ticks(), self.sessions, self.cfg["per_minute_fill"])
        return self.values

    def scales(self, opts, n, method):
        if opts["scales"] is not None:
            return np.asarray(opts["scales"], dtype=np.int64)
        return default_scales(n, method, opts["n_scales"], opts["s_min"])

    # analyses: each returns {artifact name: text}

    def a_durations(self, opts):
        d = self.need_durations()
        meta = {**d.meta(), "zero_fraction": repr(zero_fraction(d))}
        return {"durations.csv": table_csv(["duration"], [d.values], meta)}

    def a_pdf(self, opts):
        d = self.need_durations()
        out = {"pdf.csv": log_binned_pdf(scale_by_std(d, opts["zero_policy"]),
                                         opts["bins_per_decade"]).to_csv()}
        k = opts["period_partition"]
        if k:
            for i, part in enumerate(partition_periods(self.need_ticks(), k), 1):
                series = extract_durations(part, self.sessions)
                pdf = log_binned_pdf(scale_by_std(series, opts["zero_policy"]), opts["bins_per_decade"])
                days = part.trading_days()
                text = pdf.to_csv()
                head = f"# period={i}/{k}\n# first_day={days[0]}\n# last_day={days[-1]}\n"
                out[f"pdf_period{i}.csv"] = head + text
        return out

    def a_fit_weibull(self, opts):
        d = self.need_durations()
        sample = scale_by_std(d, opts["zero_policy"])
        fit = fit_weibull_mle(sample, opts["min_size"])
        return {"weibull.json": dumps_json({**fit.to_dict(), "zero_policy": opts["zero_policy"],
                                            "sigma": sample.sigma, "input_hash": array_hash(d.values)})}

    def a_fit_qexp(self, opts):
        d = self.need_durations()
        sample = scale_by_std(d, opts["zero_policy"])
        pdf = log_binned_pdf(sample, opts["bins_per_decade"])
        fit = fit_qexp_nls(pdf, opts["weighting"], opts["min_bins"])
        out = {"qexp.json": dumps_json({**fit.to_dict(), "zero_policy": opts["zero_policy"],
                                        "sigma": sample.sigma, "input_hash": array_hash(d.values)})}
        if "fit-weibull" in self.cfg["analyses"]:
            wopts = self.cfg["analyses"]["fit-weibull"]
            try:
                wfit = fit_weibull_mle(scale_by_std(d, wopts["zero_policy"]), wopts["min_size"])
            except IntertradeError:
                return out
            cmp = compare_fits(sample, wfit, fit, opts["bins_per_decade"])
            out["fit_comparison.json"] = dumps_json(cmp.to_dict())
        return out

    def a_intraday(self, opts):
        pat = intraday_pattern(self.need_ticks(), self.sessions, opts["interval_seconds"],
                               opts["zero_policy"])
        return {"intraday.csv": pat.to_csv()}

    def _scaling(self, name, method, opts, series=None, prefix=""):
        x = self.scaling_series() if series is None else series
        curve = estimate_hurst(x, method, self.scales(opts, len(x), method), order=opts.get("order", 1),
                               theta=opts.get("theta", 0.0), demean=opts["demean"],
                               threads=self.threads)
        return {f"{prefix}{name}.csv": curve.to_csv(), f"{prefix}{name}.json": dumps_json(curve.sidecar())}

    def a_dfa(self, opts):
        return self._scaling("dfa", "dfa", opts)

    def a_dma(self, opts):
        return self._scaling("dma", "dma", opts)

    def _multifractal(self, name, method, opts):
        x = self.scaling_series()
        res = multifractal_analysis(x, method, self.scales(opts, len(x), method), q_grid(opts),
                                    order=opts.get("order", 1), theta=opts.get("theta", 0.0),
                                    demean=opts["demean"], threads=self.threads)
        return {f"{name}.csv": res.to_csv(), f"{name}_spectrum.csv": res.spectrum_csv(),
                f"{name}.json": dumps_json(res.sidecar())}

    def a_mfdfa(self, opts):
        return self._multifractal("mfdfa", "dfa", opts)

    def a_mfdma(self, opts):
        return self._multifractal("mfdma", "dma", opts)

    def a_shuffle(self, opts):
        x = shuffle(self.scaling_series(), opts["seed"])
        out = {"shuffled.csv": table_csv(["value"], [x], {"seed": str(opts["seed"])})}
        for method in opts["methods"]:
            mopts = self.cfg["analyses"].get(method, DEFAULTS[method])
            out.update(self._scaling(method, method, mopts, series=x, prefix="shuffled_"))
        return out


def tool_info() -> dict:
    return {"name": "intertrade", "version": __version__, "backend": kernels.backend_name(),
            "numpy": np.__version__, "python": platform.python_version()}


def run_study(config, out_dir, threads: int = 1, seed: int | None = None) -> RunManifest:
    """Run every configured analysis and write artifacts plus ``manifest.json``.

    ``config`` is a path or a config mapping. A failing analysis is recorded
    with its error and exit code; the others still run.
    """
    raw = load_config(config) if isinstance(config, (str, Path)) else config
    cfg = resolve_config(raw, seed)
    out_dir = Path(out_dir)
    study = _Study(cfg, max(1, int(threads)))
    manifest = RunManifest(config=cfg, inputs=study.inputs, ingest=study.ingest, tool=tool_info())
    for name, opts in cfg["analyses"].items():
        runner = getattr(study, "a_" + name.replace("-", "_"))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            try:
                files = runner(opts)
            except IntertradeError as exc:
                log.error("%s failed: %s", name, exc)
                manifest.analyses[name] = {"status": "failed", "error": str(exc),
                                           "exit_code": exc.exit_code}
                continue
        entry = {"status": "ok", "artifacts": sorted(files)}
        msgs = sorted({str(w.message) for w in caught})
        if msgs:
            entry["warnings"] = msgs
        manifest.analyses[name] = entry
        for fname in sorted(files):
            data = files[fname].encode("utf-8")
            atomic_write(out_dir / fname, data)
            manifest.artifacts[fname] = sha256_bytes(data)
    atomic_write(out_dir / MANIFEST_NAME, manifest.to_json())
    return manifest


def summarize(manifest: RunManifest) -> str:
    lines = []
    for name, entry in manifest.analyses.items():
        if entry["status"] == "ok":
            lines.append(f"{name}: ok ({', '.join(entry['artifacts'])})")
        else:
            lines.append(f"{name}: FAILED ({entry['error']})")
    return "\n".join(lines)


__all__ = ["RunManifest", "load_config", "resolve_config", "validate_config", "run_study",
           "partition_periods", "period_collapse", "q_grid"]
