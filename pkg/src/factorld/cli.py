"""Command-line entry point: ``factorld {approx,simulate,compare,levy}``.

Runs are described by INI files. A static-model file looks like::

    [model]
    kind = static
    d = 10
    loadings = deterministic
    loading_values = 1, 1, 1, 1, 1, 1, 1, 1, 1, 1

    [factor]
    alpha = 5
    scale = 1

    [idio]
    alpha = 3
    scale = 1

    [mu]
    kind = axis

    [grid]
    n = 1000, 10000, 100000
    x = 0.1, 1, 10
    lambda_exponent = 2

    [run]
    iters = 10000
    seed = 0

Exit status is 0 on success, 1 for invalid configuration or arguments and
2 when a computation fails.
"""

import argparse
import configparser
import csv
from dataclasses import dataclass, field, replace
import importlib.resources
import io
import json
import math
import os
import sys
from typing import Optional, Union

from . import __version__
from .cond_mc import compare_table, estimate_tail_cmc_many, estimate_tail_naive_many
from .errors import RegimeError, ValidationError
from .factor_model import BoundedIID, Deterministic, FactorModelSpec
from .ld_approx import AxisIID, UserScalar, ld_tail_approx
from .levy_paths import (
    LevyFactorSpec,
    critical_lambda,
    estimate_marginal_tail_many,
    limit_measure_terms,
    one_jump_diagnostic,
    sample_paths,
)
from .rv_dist import Constant, LogSV, RegVarDist

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
FLOAT_FMT = "{:.4e}"


class ConfigError(ValidationError):
    pass


@dataclass(frozen=True)
class LevyOptions:
    t: float = 1.0
    diagnostic_n: int = 100
    paths: int = 1_000_000
    threshold_x: float = 1.0
    threshold: Optional[float] = None


@dataclass(frozen=True)
class RunConfig:
    model: Union[FactorModelSpec, LevyFactorSpec]
    mu: Union[AxisIID, UserScalar]
    n_list: tuple
    x_list: tuple
    lambda_exponent: Optional[float]  # None means the critical exponent
    iters: int = 10_000
    seed: int = 0
    workers: int = 1
    output: str = "-"
    format: str = "csv"
    levy: LevyOptions = field(default_factory=LevyOptions)

    @property
    def kind(self):
        return "levy" if isinstance(self.model, LevyFactorSpec) else "static"


# ---------------------------------------------------------------- parsing


def _floats(text, name):
    try:
        vals = tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"expected a list of numbers, got {text!r}", name) from None
    if not vals:
        raise ConfigError("list must not be empty", name)
    return vals


def _positive_ints(text, name):
    vals = _floats(text, name)
    if any(v != int(v) or v < 1 for v in vals):
        raise ConfigError(f"expected positive integers, got {text!r}", name)
    return tuple(int(v) for v in vals)


def _get(section, key, conv, default=None, name=None):
    name = name or f"{section.name}.{key}"
    if key not in section:
        if default is None:
            raise ConfigError("missing required key", name)
        return default
    raw = section[key].strip()
    try:
        return conv(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"cannot parse {raw!r}", name) from None


def _section(cp, name):
    if not cp.has_section(name):
        raise ConfigError("missing section", f"[{name}]")
    return cp[name]


def _dist(cp, name):
    sec = _section(cp, name)
    alpha = _get(sec, "alpha", float)
    p = _get(sec, "p", float, 1.0)
    try:
        if "log_a" in sec:
            sv = LogSV(_get(sec, "log_a", float), _get(sec, "log_b", float))
        elif "tail_constant" in sec:
            sv = Constant(_get(sec, "tail_constant", float))
        else:
            scale = _get(sec, "scale", float, 1.0)
            if not scale > 0:
                raise ConfigError(f"scale must be positive, got {scale}", f"{name}.scale")
            sv = Constant(scale ** alpha)
        return RegVarDist(alpha=alpha, p=p, sv=sv)
    except ValidationError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e).split(": ", 1)[-1], f"{name}.{e.field}") from None


def _model(cp):
    sec = _section(cp, "model")
    kind = sec.get("kind", "static").strip()
    d = _get(sec, "d", int)
    fd, ed = _dist(cp, "factor"), _dist(cp, "idio")
    try:
        if kind == "static":
            loadings = sec.get("loadings", "deterministic").strip()
            if loadings == "deterministic":
                spec = Deterministic(_floats(_get(sec, "loading_values", str), "model.loading_values"))
            elif loadings == "uniform":
                spec = BoundedIID(
                    _floats(_get(sec, "loading_low", str), "model.loading_low"),
                    _floats(_get(sec, "loading_high", str), "model.loading_high"),
                )
            else:
                raise ConfigError(f"unknown loadings {loadings!r}; use deterministic or uniform", "model.loadings")
            return FactorModelSpec(d, fd, ed, spec)
        if kind == "levy":
            return LevyFactorSpec(
                d,
                _get(sec, "lambda_F", float),
                _get(sec, "lambda_eps", float),
                fd,
                ed,
                _floats(_get(sec, "loading_mean", str), "model.loading_mean"),
            )
    except ConfigError:
        raise
    except ValidationError as e:
        raise ConfigError(str(e).split(": ", 1)[-1], _field_name(e.field)) from None
    raise ConfigError(f"unknown model kind {kind!r}; use static or levy", "model.kind")


def _field_name(f):
    prefixes = {"factor.": "factor.", "idio.": "idio.", "jump_F.": "factor.", "jump_eps.": "idio."}
    for old, new in prefixes.items():
        if f.startswith(old):
            return new + f[len(old):]
    return f"model.{f}"


def _mu(cp, model):
    sec = cp["mu"] if cp.has_section("mu") else {}
    kind = sec.get("kind", "axis").strip()
    if kind == "scalar":
        try:
            return UserScalar(_get(cp["mu"], "value", float))
        except ValueError as e:
            raise ConfigError(str(e), "mu.value") from None
    if kind != "axis":
        raise ConfigError(f"unknown mu kind {kind!r}; use axis or scalar", "mu.kind")
    if isinstance(model, LevyFactorSpec):
        return AxisIID(model.loading_mean, model.jump_F.alpha, model.jump_F.p)
    return AxisIID.from_spec(model)


def _exponent(text):
    return None if text == "critical" else float(text)


def parse_config(text):
    """Build a :class:`RunConfig` from INI text; raises :class:`ConfigError`."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(str(e).splitlines()[0], "file") from None
    model = _model(cp)
    grid = _section(cp, "grid")
    run = cp["run"] if cp.has_section("run") else configparser.SectionProxy(cp, "run")
    n_list = _positive_ints(_get(grid, "n", str), "grid.n")
    x_list = _floats(_get(grid, "x", str), "grid.x")
    exponent = _get(grid, "lambda_exponent", _exponent, "critical")
    if exponent == "critical":
        exponent = None
    if exponent is None and not isinstance(model, LevyFactorSpec):
        exponent = model_critical(model)
    if isinstance(model, FactorModelSpec) and not exponent > 1:
        raise ConfigError(f"lambda exponent must exceed 1 for the large-deviation region, got {exponent}", "grid.lambda_exponent")
    if isinstance(model, FactorModelSpec) and any(not x > 0 for x in x_list):
        raise ConfigError("x values must be positive", "grid.x")
    levy = LevyOptions()
    if cp.has_section("levy"):
        sec = cp["levy"]
        levy = LevyOptions(
            t=_get(sec, "t", float, 1.0),
            diagnostic_n=_get(sec, "diagnostic_n", int, 100),
            paths=_get(sec, "paths", int, 1_000_000),
            threshold_x=_get(sec, "threshold_x", float, 1.0),
            threshold=_get(sec, "threshold", float, math.nan) if "threshold" in sec else None,
        )
        if not 0 <= levy.t <= 1:
            raise ConfigError(f"t must lie in [0, 1], got {levy.t}", "levy.t")
    cfg = RunConfig(
        model=model,
        mu=_mu(cp, model),
        n_list=n_list,
        x_list=x_list,
        lambda_exponent=exponent,
        iters=_get(run, "iters", int, 10_000),
        seed=_get(run, "seed", int, 0),
        workers=_get(run, "workers", int, 1),
        output=run.get("output", "-").strip() if "output" in run else "-",
        format=run.get("format", "csv").strip() if "format" in run else "csv",
        levy=levy,
    )
    return validate(cfg)


def model_critical(model):
    from .ld_approx import critical_exponents

    try:
        return critical_exponents(model.factor_dist.alpha, model.idio_dist.alpha).theta_F
    except RegimeError as e:
        raise ConfigError(f"no critical exponent: {e}", "grid.lambda_exponent") from None


def validate(cfg):
    if cfg.iters < 1:
        raise ConfigError(f"iters must be positive, got {cfg.iters}", "run.iters")
    if not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {cfg.seed}", "run.seed")
    if cfg.workers < 1:
        raise ConfigError(f"workers must be positive, got {cfg.workers}", "run.workers")
    if cfg.format not in ("csv", "table"):
        raise ConfigError(f"format must be csv or table, got {cfg.format!r}", "run.format")
    if cfg.levy.paths < 1 or cfg.levy.diagnostic_n < 1:
        raise ConfigError("paths and diagnostic_n must be positive", "levy")
    return cfg


def load_config(path):
    """Read a config file; bare names fall back to the bundled configs."""
    if not os.path.exists(path):
        bundled = importlib.resources.files("factorld") / "configs" / path
        if not bundled.is_file():
            raise ConfigError(f"no such file: {path}", "config")
        return parse_config(bundled.read_text(encoding="utf-8"))
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _num(v):
    return repr(float(v))


def _dist_lines(dist):
    lines = [f"alpha = {_num(dist.alpha)}", f"p = {_num(dist.p)}"]
    if isinstance(dist.sv, LogSV):
        lines += [f"log_a = {_num(dist.sv.a)}", f"log_b = {_num(dist.sv.b)}"]
    elif isinstance(dist.sv, Constant):
        lines.append(f"tail_constant = {_num(dist.sv.c)}")
    else:
        raise ConfigError("only constant or logarithmic slowly varying factors can be written", "sv")
    return lines


def dump_config(cfg):
    """INI text that :func:`parse_config` maps back to an equal config."""
    m = cfg.model
    out = ["[model]"]
    if isinstance(m, LevyFactorSpec):
        out += [
            "kind = levy", f"d = {m.d}", f"lambda_F = {_num(m.lambda_F)}",
            f"lambda_eps = {_num(m.lambda_eps)}",
            "loading_mean = " + ", ".join(_num(v) for v in m.loading_mean),
        ]
        fd, ed = m.jump_F, m.jump_eps
    else:
        out += ["kind = static", f"d = {m.d}"]
        ls = m.loading_spec
        if isinstance(ls, Deterministic):
            out += ["loadings = deterministic", "loading_values = " + ", ".join(_num(v) for v in ls.values)]
        else:
            out += [
                "loadings = uniform",
                "loading_low = " + ", ".join(_num(v) for v in ls.low),
                "loading_high = " + ", ".join(_num(v) for v in ls.high),
            ]
        fd, ed = m.factor_dist, m.idio_dist
    out += ["", "[factor]"] + _dist_lines(fd) + ["", "[idio]"] + _dist_lines(ed)
    out += ["", "[mu]"]
    out += ["kind = scalar", f"value = {_num(cfg.mu.value)}"] if isinstance(cfg.mu, UserScalar) else ["kind = axis"]
    exp = "critical" if cfg.lambda_exponent is None else _num(cfg.lambda_exponent)
    out += [
        "", "[grid]",
        "n = " + ", ".join(str(n) for n in cfg.n_list),
        "x = " + ", ".join(_num(x) for x in cfg.x_list),
        f"lambda_exponent = {exp}",
        "", "[run]",
        f"iters = {cfg.iters}", f"seed = {cfg.seed}", f"workers = {cfg.workers}",
        f"output = {cfg.output}", f"format = {cfg.format}",
    ]
    lv = cfg.levy
    out += [
        "", "[levy]", f"t = {_num(lv.t)}", f"diagnostic_n = {lv.diagnostic_n}",
        f"paths = {lv.paths}", f"threshold_x = {_num(lv.threshold_x)}",
    ]
    if lv.threshold is not None:
        out.append(f"threshold = {_num(lv.threshold)}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- commands


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    return FLOAT_FMT.format(v)


def _xfmt(x):
    return f"{x:g}"


def _lambda(cfg, n):
    return float(n) ** cfg.lambda_exponent


def cmd_approx(cfg):
    header = ["n", "x", "lambda_n", "ld_estimate"]
    rows = []
    for x in cfg.x_list:
        for n in cfg.n_list:
            lam = _lambda(cfg, n)
            rows.append([n, _xfmt(x), lam, ld_tail_approx(cfg.model, cfg.mu, n, lam, x)])
    return [(header, rows)]


def cmd_simulate(cfg, naive=False):
    header = ["n", "x", "lambda_n", "cmc_estimate", "std_error", "ci_low", "ci_high"]
    if naive:
        header += ["naive_estimate", "naive_std_error"]
    cells = {}
    for n in cfg.n_list:
        lam = _lambda(cfg, n)
        levels = [lam * x for x in cfg.x_list]
        cmc = estimate_tail_cmc_many(cfg.model, n, levels, cfg.iters, cfg.seed, cfg.workers)
        nv = estimate_tail_naive_many(cfg.model, n, levels, cfg.iters, cfg.seed, cfg.workers) if naive else None
        for i, x in enumerate(cfg.x_list):
            e = cmc[i]
            row = [n, _xfmt(x), lam, e.value, e.std_error, e.ci95[0], e.ci95[1]]
            if naive:
                row += [nv[i].value, nv[i].std_error]
            cells[(x, n)] = row
    return [(header, [cells[(x, n)] for x in cfg.x_list for n in cfg.n_list])]


def cmd_compare(cfg):
    header = ["n", "x", "lambda_n", "ld_estimate", "cmc_estimate", "std_error", "ratio"]
    rows = [
        [r.n, _xfmt(r.x), r.lambda_n, r.ld_value, r.cmc.value, r.cmc.std_error, r.ratio]
        for r in compare_table(
            cfg.model, cfg.mu, cfg.n_list, cfg.x_list, cfg.lambda_exponent, cfg.iters, cfg.seed, cfg.workers
        )
    ]
    return [(header, rows)]


def _levy_lambda(cfg, n):
    if cfg.lambda_exponent is None:
        return critical_lambda(cfg.model, n)
    return float(n) ** cfg.lambda_exponent


def levy_threshold(cfg, threshold=None):
    """Diagnostic threshold: explicit value, else ``lambda_n * threshold_x``."""
    if threshold is not None:
        return float(threshold)
    if cfg.levy.threshold is not None:
        return cfg.levy.threshold
    return _levy_lambda(cfg, cfg.levy.diagnostic_n) * cfg.levy.threshold_x


def cmd_levy(cfg, threshold=None, events_out=None, event_paths=10):
    spec, lv = cfg.model, cfg.levy
    marg_header = ["n", "t", "x", "lambda_n", "gamma_n", "estimate", "std_error", "m_t"]
    marg_rows = []
    for n in cfg.n_list:
        lam = _levy_lambda(cfg, n)
        ests = estimate_marginal_tail_many(spec, n, lv.t, cfg.x_list, cfg.iters, cfg.seed, cfg.workers, lam)
        for x, e in zip(cfg.x_list, ests):
            marg_rows.append([n, _xfmt(lv.t), _xfmt(x), lam, e.gamma_n, e.value, e.std_error, sum(limit_measure_terms(spec, lv.t, x))])

    thr = levy_threshold(cfg, threshold)
    s = one_jump_diagnostic(spec, lv.diagnostic_n, thr, lv.paths, cfg.seed, cfg.workers)
    a_F, a_eps = limit_measure_terms(spec, 1.0, lv.threshold_x)
    q10, q50, q90 = s.quantiles([0.1, 0.5, 0.9]) if s.exceedances else (math.nan,) * 3
    diag_header = [
        "n", "threshold", "paths", "exceedances", "exceedance_prob", "concentration_0.9",
        "ratio_q10", "ratio_median", "ratio_q90", "factor_share", "m_factor_share",
    ]
    diag_rows = [[
        lv.diagnostic_n, thr, lv.paths, s.exceedances, s.exceedance_probability, s.concentration(0.9),
        q10, q50, q90, s.factor_share, a_F / (a_F + a_eps),
    ]]
    if events_out is not None:
        write_events(spec, lv.diagnostic_n, event_paths, cfg.seed, events_out)
    return [(marg_header, marg_rows), (diag_header, diag_rows)]


def write_events(spec, n, paths, seed, fh):
    """Newline-delimited JSON, one record per event."""
    from .levy_paths import FACTOR

    path_id = 0
    for bt in sample_paths(spec, n, paths, seed):
        for p in range(bt.offsets.size - 1):
            for k in range(bt.offsets[p], bt.offsets[p + 1]):
                rec = {
                    "path": path_id,
                    "time": float(bt.times[k]),
                    "size": float(bt.sizes[k]),
                    "origin": "factor" if bt.kind[k] == FACTOR else "idio",
                    "index": int(bt.tag[k]),
                }
                fh.write(json.dumps(rec) + "\n")
            path_id += 1


# ---------------------------------------------------------------- output


def render(tables, fmt, cfg, command):
    buf = io.StringIO()
    buf.write(f"# seed={cfg.seed} iters={cfg.iters} command={command}\n")
    for i, (header, rows) in enumerate(tables):
        if i:
            buf.write("\n")
        cells = [[_fmt(v) for v in row] for row in rows]
        if fmt == "csv":
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(header)
            w.writerows(cells)
        else:
            widths = [max(len(h), *(len(r[j]) for r in cells)) if cells else len(h) for j, h in enumerate(header)]
            buf.write("  ".join(h.rjust(wd) for h, wd in zip(header, widths)) + "\n")
            for r in cells:
                buf.write("  ".join(c.rjust(wd) for c, wd in zip(r, widths)) + "\n")
    return buf.getvalue()


def build_parser():
    parser = argparse.ArgumentParser(prog="factorld", description="Tail probabilities of heavy-tailed factor models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="INI file, or the name of a bundled config")
    common.add_argument("--seed", type=int, help="override run.seed")
    common.add_argument("--iters", type=int, help="override run.iters")
    common.add_argument("--workers", type=int, help="threads; never changes the output")
    common.add_argument("--output", help="output path, '-' for stdout")
    common.add_argument("--format", choices=["csv", "table"])
    sub.add_parser("approx", parents=[common], help="closed-form approximation over the grid")
    sim = sub.add_parser("simulate", parents=[common], help="conditional Monte Carlo over the grid")
    sim.add_argument("--naive", action="store_true", help="also run the indicator estimator")
    sub.add_parser("compare", parents=[common], help="approximation against conditional Monte Carlo")
    levy = sub.add_parser("levy", parents=[common], help="compound Poisson marginal tail and one-jump diagnostic")
    levy.add_argument("--threshold", type=float, help="diagnostic threshold (default lambda_n * threshold_x)")
    levy.add_argument("--paths", type=int, help="override levy.paths")
    levy.add_argument("--events", help="write per-path event records (NDJSON) to this file")
    levy.add_argument("--event-paths", type=int, default=10, help="number of paths written with --events")
    return parser


def _apply_overrides(cfg, args):
    upd = {k: getattr(args, k) for k in ("seed", "iters", "workers", "output", "format") if getattr(args, k, None) is not None}
    cfg = replace(cfg, **upd)
    if getattr(args, "paths", None) is not None:
        cfg = replace(cfg, levy=replace(cfg.levy, paths=args.paths))
    return validate(cfg)


def run(args):
    cfg = _apply_overrides(load_config(args.config), args)
    wants_levy = args.command == "levy"
    if wants_levy != (cfg.kind == "levy"):
        raise ConfigError(f"command {args.command!r} does not apply to a {cfg.kind} model", "model.kind")
    if args.command == "approx":
        tables = cmd_approx(cfg)
    elif args.command == "simulate":
        tables = cmd_simulate(cfg, naive=args.naive)
    elif args.command == "compare":
        tables = cmd_compare(cfg)
    else:
        events = open(args.events, "w", encoding="utf-8") if args.events else None
        try:
            tables = cmd_levy(cfg, args.threshold, events, args.event_paths)
        finally:
            if events is not None:
                events.close()
    text = render(tables, cfg.format, cfg, args.command)
    if cfg.output == "-":
        sys.stdout.write(text)
    else:
        with open(cfg.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INVALID
    try:
        run(args)
    except (ValidationError, RegimeError) as e:
        print(f"factorld: invalid configuration: {e}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as e:  # noqa: BLE001 - any failure past validation is a runtime error
        print(f"factorld: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
