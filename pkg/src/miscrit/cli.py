"""Command-line front end: ``miscrit fit|select|simulate|configs``.

Exit codes: 0 success, 2 usage or input error, 3 numerical or model failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import secrets
import sys
import warnings

import numpy as np

from .criteria import DEFAULT_GAMMAS, format_gamma, score_model
from .errors import DataValidationError, MiscritError
from .family import Family
from .qmle import Dataset, fit_qmle
from .sandwich import estimate_sandwich
from .search import (
    DEFAULT_CRITERIA,
    CandidateModel,
    RawData,
    all_subsets,
    best_subset_per_size,
    build_design,
    polynomial_candidates,
    select,
)
from .simlab import SimConfig, packaged_configs, resolve_config_path, run_campaign

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class InputError(Exception):
    """Malformed user input; reported with exit code 2."""


# ---------------------------------------------------------------- CSV input


def read_csv(path: str) -> tuple[list[str], np.ndarray]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except UnicodeDecodeError as exc:
        raise InputError(f"{path} is not valid UTF-8") from exc
    rows = [r for r in rows if r]
    if len(rows) < 2:
        raise InputError(f"{path}: need a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    values = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:]):
        line = i + 2
        if len(row) != len(header):
            raise InputError(f"{path}: line {line} has {len(row)} fields, header has {len(header)}")
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise InputError(
                    f"{path}: line {line}, column {header[j]!r}: cannot parse {cell!r} as a number"
                ) from None
            if not math.isfinite(v):
                raise InputError(f"{path}: line {line}, column {header[j]!r}: value is not finite")
            values[i, j] = v
    return header, values


def _column_index(header: list[str], spec: str) -> int:
    if spec in header:
        return header.index(spec)
    try:
        idx = int(spec)
    except ValueError:
        raise InputError(f"no column named {spec!r}; columns are {header}") from None
    if not 0 <= idx < len(header):
        raise InputError(f"column index {idx} out of range for {len(header)} columns")
    return idx


def load_raw(args) -> RawData:
    header, values = read_csv(args.input)
    yi = _column_index(header, args.response)
    if args.columns:
        xi = [_column_index(header, c.strip()) for c in args.columns.split(",") if c.strip()]
    else:
        xi = [j for j in range(len(header)) if j != yi]
    if not xi:
        raise InputError("no covariate columns")
    if yi in xi:
        raise InputError("the response column cannot also be a covariate")
    return RawData(values[:, yi], values[:, xi], tuple(header[j] for j in xi))


def parse_range(text: str) -> list[int]:
    """Parse ``"1-6"`` or ``"1,2,4"`` into a list of ints."""
    out = []
    try:
        for part in text.split(","):
            part = part.strip()
            if "-" in part:
                lo, hi = part.split("-", 1)
                out.extend(range(int(lo), int(hi) + 1))
            elif part:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer range: {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty range")
    return out


def _family(args) -> Family:
    if args.family == "linear":
        return Family.linear(args.dispersion)
    if args.dispersion is not None:
        raise InputError("--dispersion only applies to the linear family")
    return Family.from_name(args.family)


def _check_responses(raw: RawData, family: Family) -> None:
    try:
        Dataset(raw.y, np.ones((raw.n, 1))).validate_responses(family)
    except DataValidationError as exc:
        row = getattr(exc, "row", None)
        where = f" (CSV line {row + 2})" if row is not None else ""
        raise InputError(f"{exc}{where}") from None


# ---------------------------------------------------------------- rendering


def _num(v) -> str:
    return format(v, ".15g") if isinstance(v, float) else str(v)


def render_table(header: list[str], rows: list[list]) -> str:
    cells = [header] + [[_num(v) for v in r] for r in rows]
    widths = [max(len(r[j]) for r in cells) for j in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def render_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue().rstrip("\n")


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2)


def _criterion_columns(gammas) -> list[tuple[str, str]]:
    cols = [("AIC", "aic"), ("BIC", "bic"), ("GAIC", "gaic"), ("GBIC", "gbic")]
    cols += [(f"SIC_{format_gamma(g)}", f"sic_{g!r}") for g in sorted(set(gammas) | {0.5})]
    return cols


# ---------------------------------------------------------------- commands


def cmd_fit(args) -> str:
    raw = load_raw(args)
    family = _family(args)
    _check_responses(raw, family)
    cand = CandidateModel(indices=tuple(range(raw.p)), include_intercept=args.intercept)
    data = build_design(raw, cand)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fit = fit_qmle(data, family)
    if fit.separated:
        raise MiscritError("logistic responses are separated; the QMLE does not exist")
    if not fit.converged:
        raise MiscritError(f"fit did not converge (score norm {fit.score_norm:.3g})")
    sw = estimate_sandwich(data, family, fit)
    report = score_model(fit.loglik, sw, data.d, data.n, args.gamma)

    names = (["(intercept)"] if args.intercept else []) + list(raw.names)
    fit_info = {
        "family": family.kind.value,
        "n": data.n,
        "d": data.d,
        "coefficients": dict(zip(names, fit.beta_hat.tolist())),
        "loglik": fit.loglik,
        "dispersion": fit.dispersion,
        "trace_H": sw.trace_H,
        "logdet_H": sw.logdet_H,
        "iterations": fit.iterations,
        "score_norm": fit.score_norm,
    }
    crit_rows = [[label, report.score(key)] for label, key in _criterion_columns(report.sic)]
    if args.format == "json":
        return dump_json(
            {
                "criteria": report.to_dict(),
                "candidates": [{"candidate": cand.to_dict(), "label": "all columns"}],
                "chosen": {c: cand.to_dict() for c in DEFAULT_CRITERIA},
                "meta": fit_info,
            }
        )
    if args.format == "csv":
        rows = [[f"beta[{k}]", v] for k, v in fit_info["coefficients"].items()]
        rows += [[k, fit_info[k]] for k in ("loglik", "dispersion", "trace_H", "logdet_H")]
        return render_csv(["quantity", "value"], rows + crit_rows)
    out = [f"family: {family.kind.value}   n = {data.n}   d = {data.d}", ""]
    out.append(render_table(["coefficient", "estimate"], [[k, v] for k, v in fit_info["coefficients"].items()]))
    out.append("")
    scalars = [["loglik", fit.loglik], ["dispersion", fit.dispersion], ["tr(H)", sw.trace_H], ["log|H|", sw.logdet_H]]
    out.append(render_table(["quantity", "value"], scalars + crit_rows))
    return "\n".join(out)


def cmd_select(args) -> str:
    raw = load_raw(args)
    family = _family(args)
    _check_responses(raw, family)
    criteria = [c.strip().lower() for c in args.criteria.split(",") if c.strip()]
    if args.orders:
        if raw.p != 1:
            raise InputError(f"--orders needs exactly one covariate column, got {raw.p}")
        cands = polynomial_candidates(args.orders, args.intercept)
    else:
        sizes = args.sizes or list(range(1, raw.p + 1))
        if args.protocol == "best-subset":
            cands = best_subset_per_size(raw, sizes, family, args.intercept)
        else:
            cands = all_subsets(raw.p, sizes, args.intercept)
        if not cands:
            raise InputError("no candidate subsets for the requested sizes")
    try:
        result = select(cands, raw, family, criteria, args.gamma)
    except KeyError as exc:
        raise InputError(f"unknown criterion {exc.args[0]!r}") from None
    result.meta.update({"columns": list(raw.names), "protocol": args.protocol if not args.orders else "orders"})

    if args.format == "json":
        return dump_json(result.to_dict())

    header = ["candidate", "size", "dim", "loglik"] + [c.upper() for c in result.criteria] + ["chosen_by"]
    rows = []
    for o in result.per_candidate:
        won = ",".join(c.upper() for c, m in result.chosen.items() if m == o.candidate)
        if o.report is None:
            rows.append([o.candidate.label, o.candidate.size, o.candidate.dim, o.loglik]
                        + ["failed: " + (o.error or "")] + [""] * (len(result.criteria) - 1) + [won])
        else:
            rows.append([o.candidate.label, o.candidate.size, o.candidate.dim, o.loglik]
                        + [o.report.score(c) for c in result.criteria] + [won])
    if args.format == "csv":
        return render_csv(header, rows)
    winners = render_table(
        ["criterion", "chosen", "size"],
        [[c.upper(), m.label, m.size] for c, m in result.chosen.items()],
    )
    return render_table(header, rows) + "\n\n" + winners


def _sim_config(args) -> SimConfig:
    try:
        with open(resolve_config_path(args.config), encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValueError("top level must be a JSON object")
        if args.seed is not None:
            raw["seed"] = args.seed
        elif "seed" not in raw:
            raw["seed"] = secrets.randbits(64)
            print(f"seed: {raw['seed']}", file=sys.stderr)
        if args.replicates is not None:
            raw["replicates"] = args.replicates
        return SimConfig.from_dict(raw)
    except FileNotFoundError as exc:
        raise InputError(str(exc)) from None
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"invalid simulation config {args.config}: {exc}") from None


def cmd_simulate(args) -> str:
    cfg = _sim_config(args)
    table = run_campaign(cfg, threads=args.threads)
    if args.format == "json":
        return dump_json(table.to_dict())
    header = ["criterion"] + [str(k) for k in table.columns] + ["failed"]
    rows = [[c.upper()] + [table.counts[c][k] for k in table.columns] + [table.failures[c]] for c in table.rows]
    if args.format == "csv":
        return render_csv(header, rows)
    kind = "order" if cfg.experiment.is_polynomial else "size"
    title = (
        f"{cfg.experiment.value}: n = {cfg.n}, {cfg.noise_key} = {cfg.noise:g}, "
        f"{cfg.replicates} replicates, seed {cfg.seed}  (columns: selected {kind})"
    )
    return title + "\n" + render_table(header, rows)


def cmd_configs(args) -> str:
    return "\n".join(packaged_configs())


# ---------------------------------------------------------------- parser


def _gamma(text: str) -> float:
    g = float(text)
    if not 0.0 <= g <= 1.0:
        raise argparse.ArgumentTypeError(f"gamma must lie in [0, 1], got {g}")
    return g


def _uint64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="miscrit", description="Model selection in possibly misspecified GLMs."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def data_args(p):
        p.add_argument("input", help="CSV file with a header row")
        p.add_argument("--response", "-y", required=True, help="response column name or 0-based index")
        p.add_argument("--columns", help="comma-separated covariate columns (default: all others)")
        p.add_argument("--family", choices=["linear", "logistic", "poisson"], default="linear")
        p.add_argument("--dispersion", type=float, help="fixed linear sigma^2 (default: estimate from RSS)")
        p.add_argument("--intercept", action=argparse.BooleanOptionalAction, default=True)
        p.add_argument("--gamma", type=_gamma, nargs="+", default=list(DEFAULT_GAMMAS),
                       help="SIC indices to report")
        p.add_argument("--format", choices=["text", "csv", "json"], default="text")

    p_fit = sub.add_parser("fit", help="fit one model and report every criterion")
    data_args(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_sel = sub.add_parser("select", help="select among polynomial orders or covariate subsets")
    data_args(p_sel)
    group = p_sel.add_mutually_exclusive_group()
    group.add_argument("--orders", type=parse_range, help="polynomial orders, e.g. 1-6")
    group.add_argument("--sizes", type=parse_range, help="subset sizes, e.g. 1-6")
    p_sel.add_argument("--protocol", choices=["all-subsets", "best-subset"], default="all-subsets",
                       help="score every subset, or only the max-loglik subset of each size")
    p_sel.add_argument("--criteria", default=",".join(DEFAULT_CRITERIA))
    p_sel.set_defaults(func=cmd_select)

    p_sim = sub.add_parser("simulate", help="run a seeded simulation campaign")
    p_sim.add_argument("--config", "-c", required=True, help="config path or packaged config name")
    p_sim.add_argument("--seed", type=_uint64)
    p_sim.add_argument("--replicates", type=int)
    p_sim.add_argument("--threads", type=int, help="worker threads (default $MISCRIT_THREADS, 0 = all CPUs)")
    p_sim.add_argument("--format", choices=["text", "csv", "json"], default="text")
    p_sim.set_defaults(func=cmd_simulate)

    p_cfg = sub.add_parser("configs", help="list packaged simulation configs")
    p_cfg.set_defaults(func=cmd_configs)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        out = args.func(args)
    except InputError as exc:
        print(f"miscrit: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except MiscritError as exc:
        print(f"miscrit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
