"""Command-line interface: ``betageom {fit,sample,simulate,describe}``.

Exit codes: 0 success, 2 usage or config error, 3 data error, 4 estimation failure.
"""

import argparse
import csv
import json
import platform
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .bayes import BetaPrior, empirical_prior, posterior
from .errors import (
    BetaGeomError,
    ConfigError,
    DegenerateDataError,
    DomainError,
    MissingMomentsError,
    MomentDoesNotExist,
    ParseError,
)
from .estimate import DEFAULT_BOOTSTRAP, WaitSample, fit_geometric, fit_mle, fit_mme
from .model import BetaGeometricLaw, bg_pmf_table, to_wg
from .sampling import DEFAULT_SEED, SeedSpec, sample_bg
from .simstudy import BAYES_PROTOCOL, StudyConfig, emit_mse_plot, emit_tables, law_label, run_study, tsv_block

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_ESTIMATION = 0, 2, 3, 4


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class IngestSpec:
    path: Optional[str]
    column: str = "0"
    max_delay_filter: Optional[int] = None
    format: Optional[str] = None


def _infer_format(path):
    suffix = Path(path).suffix.lower()
    return {".csv": "csv", ".json": "summary"}.get(suffix, "whitespace")


def _parse_int(token, line):
    try:
        value = int(token)
    except ValueError:
        raise ParseError(f"not an integer: {token!r}", line) from None
    if value < 0:
        raise ParseError(f"negative delay {value}", line)
    return value


def _rows(path, fmt):
    with open(path, encoding="utf-8", newline="") as fh:
        if fmt == "csv":
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if row and any(cell.strip() for cell in row):
                    yield lineno, [cell.strip() for cell in row]
        else:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if line:
                    yield lineno, line.split()


def read_sample(spec):
    """Load a :class:`WaitSample` plus an audit of rows read, kept and dropped."""
    fmt = spec.format or _infer_format(spec.path)
    if fmt == "summary":
        if spec.max_delay_filter is not None:
            raise UsageError("--max-delay needs individual delays, not a summary")
        try:
            doc = json.loads(Path(spec.path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
        if not isinstance(doc, dict) or "n" not in doc or "sum_x" not in doc:
            raise ParseError("summary file must hold an object with 'n' and 'sum_x'")
        sample = WaitSample.from_summary(_parse_int(str(doc["n"]), None), _parse_int(str(doc["sum_x"]), None))
        return sample, {"format": fmt, "rows_read": sample.n, "rows_kept": sample.n, "rows_dropped": 0}
    if fmt not in ("csv", "whitespace"):
        raise UsageError(f"unknown format {fmt!r}")

    delays, read, dropped = [], 0, 0
    col = None
    by_name = not spec.column.lstrip("-").isdigit()
    for k, (lineno, row) in enumerate(_rows(spec.path, fmt)):
        if k == 0:
            if by_name:
                if spec.column not in row:
                    raise ParseError(f"column {spec.column!r} not in header", lineno)
                col = row.index(spec.column)
                continue
            col = int(spec.column)
            if col >= len(row) or col < 0:
                raise ParseError(f"no column {col}", lineno)
            try:
                int(row[col])
            except ValueError:
                continue  # header row
        if col >= len(row):
            raise ParseError(f"row has no column {col}", lineno)
        value = _parse_int(row[col], lineno)
        read += 1
        if spec.max_delay_filter is not None and value > spec.max_delay_filter:
            dropped += 1
            continue
        delays.append(value)
    if not delays:
        raise ParseError("no delays left to analyse")
    audit = {"format": fmt, "rows_read": read, "rows_kept": len(delays), "rows_dropped": dropped}
    return WaitSample.from_delays(np.array(delays, dtype=np.int64)), audit


def _exit_code(exc):
    if isinstance(exc, (UsageError, ConfigError)):
        return EXIT_USAGE
    if isinstance(exc, (ParseError, MissingMomentsError, DegenerateDataError, DomainError, OSError)):
        return EXIT_DATA
    return EXIT_ESTIMATION


def _write_json(doc, out):
    text = json.dumps(doc, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_fit(args):
    if args.n is not None or args.sum_x is not None:
        if args.n is None or args.sum_x is None or args.path:
            raise UsageError("summary mode needs both --n and --sum-x and no input file")
        if args.max_delay is not None:
            raise UsageError("--max-delay needs individual delays, not a summary")
        sample = WaitSample.from_summary(args.n, args.sum_x)
        audit = {"format": "summary", "rows_read": sample.n, "rows_kept": sample.n, "rows_dropped": 0}
    else:
        if not args.path:
            raise UsageError("give an input file or --n/--sum-x")
        sample, audit = read_sample(IngestSpec(args.path, args.column, args.max_delay, args.format))

    explicit = args.mu is not None or args.nu is not None
    if explicit and (args.mu is None or args.nu is None):
        raise UsageError("an explicit prior needs both --mu and --nu")
    prior_choice = args.prior or ("explicit" if explicit else "mle")
    if prior_choice == "explicit" and not explicit:
        raise UsageError("--prior explicit needs --mu and --nu")

    wanted = []
    if args.method in ("mme", "all"):
        wanted.append("mme")
    if args.method in ("mle", "all"):
        wanted.append("mle")
    if args.method == "bayes":
        wanted.append(f"bayes_{prior_choice}")
    elif args.method == "all":
        wanted += ["bayes_mme", "bayes_mle"] + (["bayes_explicit"] if explicit else [])

    estimates = {"geometric": {"theta_hat": fit_geometric(sample).theta}}
    errors = {}
    fits = {}
    first_error = None
    seed = SeedSpec(args.seed, 0)

    def frequentist(name):
        if name not in fits:
            fits[name] = (
                fit_mme(sample, gamma=args.gamma, n_boot=args.bootstrap, seed=seed)
                if name == "mme"
                else fit_mle(sample, gamma=args.gamma)
            )
        return fits[name]

    for name in wanted:
        try:
            if name in ("mme", "mle"):
                estimates[name] = frequentist(name).to_dict()
            else:
                source = name.split("_", 1)[1]
                prior = (
                    BetaPrior(args.mu, args.nu)
                    if source == "explicit"
                    else empirical_prior(frequentist(source))
                )
                estimates[name] = posterior(prior, sample, gamma=args.gamma).to_dict()
        except BetaGeomError as exc:
            errors[name] = f"{type(exc).__name__}: {exc}"
            first_error = first_error or exc

    report = {
        "input": {
            "path": args.path,
            "max_delay": args.max_delay,
            **audit,
            "n": sample.n,
            "sum_x": sample.sum_x,
            "m1": sample.m1,
            "m2": sample.m2 if sample.has_data else None,
        },
        "gamma": args.gamma,
        "method": args.method,
        "estimates": estimates,
        "errors": errors,
    }
    if first_error is not None and len(wanted) == 1:
        raise first_error
    _write_json(report, args.out)
    if first_error is not None:
        for name, msg in errors.items():
            print(f"betageom fit: {name}: {msg}", file=sys.stderr)
        return _exit_code(first_error)
    return EXIT_OK


def _law_from_args(args):
    try:
        return BetaGeometricLaw(args.alpha, args.beta)
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def _moment_fields(law):
    try:
        mean = law.mean_delay()
    except MomentDoesNotExist:
        mean = "undefined, alpha <= 1"
    try:
        var = law.variance()
    except MomentDoesNotExist:
        var = "undefined, alpha <= 2"
    return mean, var


def cmd_sample(args):
    law = _law_from_args(args)
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    draws = sample_bg(law, SeedSpec(args.seed, 0), args.n)
    text = "\n".join(map(str, draws.tolist())) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    mean, var = _moment_fields(law)
    print(json.dumps({"alpha": law.alpha, "beta": law.beta, "mean_delay": mean, "variance": var}), file=sys.stderr)
    return EXIT_OK


def cmd_describe(args):
    law = _law_from_args(args)
    if args.x_max < 0:
        raise UsageError("--x-max must be >= 0")
    pmf = bg_pmf_table(law, args.x_max)
    cdf = np.minimum(np.cumsum(pmf), 1.0)
    mean, var = _moment_fields(law)
    wg = to_wg(law)
    if args.format == "tsv":
        lines = ["x\tpmf\tcdf"] + [f"{x}\t{p:.12g}\t{c:.12g}" for x, (p, c) in enumerate(zip(pmf, cdf))]
        sys.stdout.write("\n".join(lines) + "\n")
        return EXIT_OK
    _write_json(
        {
            "alpha": law.alpha,
            "beta": law.beta,
            "mean_fecundability": law.mean_fecundability(),
            "mean_delay": mean,
            "variance": var,
            "wg": {"pi": wg.pi, "shape": wg.shape},
            "rows": [{"x": x, "pmf": float(p), "cdf": float(c)} for x, (p, c) in enumerate(zip(pmf, cdf))],
        },
        None,
    )
    return EXIT_OK


def cmd_simulate(args):
    config = StudyConfig.load(args.config) if args.config else StudyConfig()
    overrides = {}
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.replications is not None:
        overrides["replications"] = args.replications
    if overrides:
        config = StudyConfig(**{**config.__dict__, **overrides})
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    started = time.perf_counter()
    progress = None
    if args.progress:
        def progress(done, total):
            print(f"\r{done}/{total} blocks", end="" if done < total else "\n", file=sys.stderr)
    table = run_study(config, workers=args.workers, progress=progress)
    wall = time.perf_counter() - started

    files = []
    for law in config.laws:
        label = law_label(law)
        (out / f"table_{label}.tsv").write_text(tsv_block(table, law), encoding="utf-8")
        (out / f"table_{label}.json").write_text(emit_tables(table.restrict(law), "json"), encoding="utf-8")
        emit_mse_plot(table, law, out / f"mse_{label}.svg")
        files += [f"table_{label}.tsv", f"table_{label}.json", f"mse_{label}.svg"]
    (out / "study.json").write_text(emit_tables(table, "json"), encoding="utf-8")
    import matplotlib
    import scipy

    metadata = {
        "seed": config.base_seed,
        "config": config.to_dict(),
        "bayes_protocol": BAYES_PROTOCOL,
        "workers": args.workers,
        "wall_time_seconds": round(wall, 3),
        "versions": {
            "betageom": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "matplotlib": matplotlib.__version__,
        },
        "failure_counts": {
            f"{law_label(config.laws[i])}/n={n}/{est}": cell.failure_count
            for (i, n, est), cell in sorted(table.cells.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2]))
        },
        "files": files + ["study.json"],
    }
    (out / "metadata.json").write_text(json.dumps(metadata, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(files) + 2} files to {out}", file=sys.stderr)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="betageom", description="Beta-geometric models of conception delay.")
    parser.add_argument("--version", action="version", version=f"betageom {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fit = sub.add_parser("fit", help="estimate mean fecundability from delays or a summary")
    fit.add_argument("path", nargs="?", help="delay file (csv, whitespace, or summary JSON)")
    fit.add_argument("--format", choices=["csv", "whitespace", "summary"])
    fit.add_argument("--column", default="0", help="column index or header name (default 0)")
    fit.add_argument("--n", type=int, help="summary mode: number of women")
    fit.add_argument("--sum-x", type=int, help="summary mode: total delay in months")
    fit.add_argument("--method", choices=["mme", "mle", "bayes", "all"], default="all")
    fit.add_argument("--prior", choices=["mme", "mle", "explicit"])
    fit.add_argument("--mu", type=float, help="explicit prior shape 1")
    fit.add_argument("--nu", type=float, help="explicit prior shape 2")
    fit.add_argument("--gamma", type=float, default=0.05, help="intervals have level 1 - gamma")
    fit.add_argument("--max-delay", type=int, help="drop delays above this many months (180 = sterility rule)")
    fit.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed for the MME bootstrap")
    fit.add_argument("--bootstrap", type=int, default=DEFAULT_BOOTSTRAP, help="MME bootstrap resamples")
    fit.add_argument("--out", help="write the JSON report here instead of stdout")
    fit.set_defaults(func=cmd_fit)

    sample = sub.add_parser("sample", help="draw beta-geometric delays")
    sample.add_argument("--alpha", type=float, required=True)
    sample.add_argument("--beta", type=float, required=True)
    sample.add_argument("--n", type=int, required=True)
    sample.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sample.add_argument("--out")
    sample.set_defaults(func=cmd_sample)

    sim = sub.add_parser("simulate", help="run the Monte Carlo estimator comparison")
    sim.add_argument("config", nargs="?", help="JSON study config (default: the four standard laws)")
    sim.add_argument("--out-dir", required=True)
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--replications", type=int)
    sim.add_argument("--progress", action="store_true")
    sim.set_defaults(func=cmd_simulate)

    desc = sub.add_parser("describe", help="tabulate pmf and cdf of a law")
    desc.add_argument("--alpha", type=float, required=True)
    desc.add_argument("--beta", type=float, required=True)
    desc.add_argument("--x-max", type=int, default=20)
    desc.add_argument("--format", choices=["json", "tsv"], default="json")
    desc.set_defaults(func=cmd_describe)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "gamma", 0.05) is not None and not 0 < getattr(args, "gamma", 0.05) < 1:
            raise UsageError("--gamma must lie in (0, 1)")
        return args.func(args)
    except UsageError as exc:
        print(f"betageom: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BetaGeomError, OSError) as exc:
        print(f"betageom: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
