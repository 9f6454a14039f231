"""Monte Carlo comparison of fecundability estimators.

For each law and sample size, draw ``replications`` beta-geometric samples,
estimate mean fecundability four ways, and summarise against the true
``alpha / (alpha + beta)``:

* ``MME``    moment estimate ``alpha_hat / (alpha_hat + beta_hat)``
* ``MLE``    maximum-likelihood estimate
* ``BAYES1`` conjugate posterior mean, prior Beta(MME alpha_hat, beta_hat) from the same sample
* ``BAYES2`` the same with the MLE as prior

Replicate ``r`` of cell ``(law i, size n)`` always uses stream
``(i << 56) | (n << 28) | r`` of the base seed, so results do not depend on
how replicates are scheduled, and the first ``k`` replicates of a larger run
equal a run with ``replications=k``. A failed estimator is recorded as
missing for that replicate and counted; all estimators see the same samples.
"""

import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bayes import empirical_prior, posterior
from .errors import BetaGeomError, ConfigError, DomainError
from .estimate import WaitSample, fit_mle, fit_mme
from .model import BetaGeometricLaw
from .sampling import DEFAULT_SEED, SeedSpec, sample_bg

__all__ = [
    "ESTIMATORS",
    "ESTIMATOR_TITLES",
    "DEFAULT_LAWS",
    "DEFAULT_SIZES",
    "BAYES_PROTOCOL",
    "StudyConfig",
    "StudyCell",
    "StudyTable",
    "ReplicateRecord",
    "stream_id",
    "run_replicate",
    "run_study",
    "law_label",
    "tsv_block",
    "emit_tables",
    "table_from_json",
    "mse_series",
    "emit_mse_plot",
]

ESTIMATORS = ("MME", "MLE", "BAYES1", "BAYES2")
ESTIMATOR_TITLES = {"MME": "MME", "MLE": "MLE", "BAYES1": "Bayes 1", "BAYES2": "Bayes 2"}
DEFAULT_LAWS = (
    BetaGeometricLaw(4, 36),
    BetaGeometricLaw(4, 12),
    BetaGeometricLaw(4, 4),
    BetaGeometricLaw(4, 2),
)
DEFAULT_SIZES = (100, 200, 300, 400, 500, 750, 1000)
DEFAULT_REPLICATIONS = 5000
BAYES_PROTOCOL = (
    "per-replicate empirical Bayes: prior Beta(alpha_hat, beta_hat) re-estimated from each "
    "replicate's own sample (BAYES1 from MME, BAYES2 from MLE)"
)

_FIELD_BITS = 28


@dataclass(frozen=True)
class StudyConfig:
    laws: tuple = DEFAULT_LAWS
    sizes: tuple = DEFAULT_SIZES
    replications: int = DEFAULT_REPLICATIONS
    base_seed: int = DEFAULT_SEED
    estimators: tuple = ESTIMATORS

    def __post_init__(self):
        object.__setattr__(self, "laws", tuple(self.laws))
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if not self.laws:
            raise ConfigError("laws", "at least one law is required")
        if len(self.laws) > 255:
            raise ConfigError("laws", "at most 255 laws")
        if not self.sizes:
            raise ConfigError("sizes", "at least one sample size is required")
        for i, n in enumerate(self.sizes):
            if not 10 <= n < 1 << _FIELD_BITS:
                raise ConfigError(f"sizes[{i}]", f"sample size must be in [10, 2^28), got {n}")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ConfigError("sizes", "sample sizes must be strictly increasing")
        if not (isinstance(self.replications, int) and 1 <= self.replications < 1 << _FIELD_BITS):
            raise ConfigError("replications", f"must be an integer in [1, 2^28), got {self.replications!r}")
        if not (isinstance(self.base_seed, int) and 0 <= self.base_seed < 1 << 64):
            raise ConfigError("seed", f"must be an unsigned 64-bit integer, got {self.base_seed!r}")
        if not self.estimators:
            raise ConfigError("estimators", "at least one estimator is required")
        for i, est in enumerate(self.estimators):
            if est not in ESTIMATORS:
                raise ConfigError(f"estimators[{i}]", f"unknown estimator {est!r}; choose from {ESTIMATORS}")
        if len(set(self.estimators)) != len(self.estimators):
            raise ConfigError("estimators", "duplicate estimator")
        # keep the canonical column order whatever order the user gave
        object.__setattr__(self, "estimators", tuple(e for e in ESTIMATORS if e in self.estimators))

    @classmethod
    def from_mapping(cls, doc):
        """Build from a parsed key-value document; errors name the offending field."""
        if not isinstance(doc, dict):
            raise ConfigError("<root>", "config must be a mapping")
        unknown = set(doc) - {"laws", "sizes", "replications", "seed", "estimators"}
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown key")
        kwargs = {}
        if "laws" in doc:
            if not isinstance(doc["laws"], list):
                raise ConfigError("laws", "must be a list of {alpha, beta} mappings")
            laws = []
            for i, item in enumerate(doc["laws"]):
                if isinstance(item, (list, tuple)) and len(item) == 2:
                    item = {"alpha": item[0], "beta": item[1]}
                if not isinstance(item, dict) or set(item) != {"alpha", "beta"}:
                    raise ConfigError(f"laws[{i}]", "must be {alpha: ..., beta: ...}")
                for key in ("alpha", "beta"):
                    value = item[key]
                    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
                        raise ConfigError(f"laws[{i}].{key}", f"must be a positive number, got {value!r}")
                laws.append(BetaGeometricLaw(item["alpha"], item["beta"]))
            kwargs["laws"] = laws
        if "sizes" in doc:
            sizes = doc["sizes"]
            if not isinstance(sizes, list):
                raise ConfigError("sizes", "must be a list of integers")
            for i, n in enumerate(sizes):
                if isinstance(n, bool) or not isinstance(n, int):
                    raise ConfigError(f"sizes[{i}]", f"must be an integer, got {n!r}")
            kwargs["sizes"] = sizes
        if "replications" in doc:
            kwargs["replications"] = doc["replications"]
        if "seed" in doc:
            kwargs["base_seed"] = doc["seed"]
        if "estimators" in doc:
            ests = doc["estimators"]
            if not isinstance(ests, list):
                raise ConfigError("estimators", "must be a list")
            kwargs["estimators"] = [str(e).upper() for e in ests]
        return cls(**kwargs)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError("<root>", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
        return cls.from_mapping(doc)

    def to_dict(self):
        return {
            "laws": [{"alpha": law.alpha, "beta": law.beta} for law in self.laws],
            "sizes": list(self.sizes),
            "replications": self.replications,
            "seed": self.base_seed,
            "estimators": list(self.estimators),
        }


@dataclass(frozen=True)
class StudyCell:
    average_estimate: float
    bias: float
    mse: float
    mc_standard_error: float
    mse_standard_error: float
    failure_count: int
    successes: int


@dataclass
class StudyTable:
    config: StudyConfig
    # (law index, n, estimator) -> StudyCell
    cells: dict = field(default_factory=dict)

    def cell(self, law, n, estimator):
        return self.cells[(self._law_index(law), n, estimator)]

    def _law_index(self, law):
        if isinstance(law, int):
            return law
        try:
            return self.config.laws.index(law)
        except ValueError:
            raise DomainError(f"{law} is not part of this study") from None

    def restrict(self, law):
        """Sub-table holding a single law."""
        i = self._law_index(law)
        config = StudyConfig(**{**self.config.__dict__, "laws": (self.config.laws[i],)})
        cells = {(0, n, e): cell for (j, n, e), cell in self.cells.items() if j == i}
        return StudyTable(config, cells)

    def is_complete(self):
        c = self.config
        return all(
            (i, n, e) in self.cells for i in range(len(c.laws)) for n in c.sizes for e in c.estimators
        )

    def to_dict(self):
        out = []
        for (i, n, est), cell in sorted(self.cells.items(), key=lambda kv: (kv[0][0], kv[0][1], ESTIMATORS.index(kv[0][2]))):
            out.append({"law": i, "n": n, "estimator": est, **cell.__dict__})
        return {"config": self.config.to_dict(), "true_theta": [law.mean_fecundability() for law in self.config.laws], "cells": out}

    @classmethod
    def from_dict(cls, doc):
        table = cls(StudyConfig.from_mapping(doc["config"]))
        for row in doc["cells"]:
            row = dict(row)
            key = (row.pop("law"), row.pop("n"), row.pop("estimator"))
            table.cells[key] = StudyCell(**{k: _from_json_float(v) if k not in ("failure_count", "successes") else v for k, v in row.items()})
        return table

    def __eq__(self, other):
        if not isinstance(other, StudyTable):
            return NotImplemented
        return self.config == other.config and _cells_equal(self.cells, other.cells)


def _cells_equal(a, b):
    if a.keys() != b.keys():
        return False
    for key in a:
        for x, y in zip(a[key].__dict__.values(), b[key].__dict__.values()):
            if not (x == y or (isinstance(x, float) and isinstance(y, float) and math.isnan(x) and math.isnan(y))):
                return False
    return True


def _to_json_float(x):
    return x if isinstance(x, int) or math.isfinite(x) else None


def _from_json_float(x):
    return math.nan if x is None else float(x)


@dataclass(frozen=True)
class ReplicateRecord:
    """Per-estimator theta estimates (NaN on failure) and failure reasons."""

    theta: dict
    errors: dict


def stream_id(law_index, n, replicate):
    return (law_index << 2 * _FIELD_BITS) | (n << _FIELD_BITS) | replicate


def run_replicate(law, n, seed, estimators=ESTIMATORS):
    """Draw one sample of size ``n`` and estimate mean fecundability with each estimator."""
    if n < 10:
        raise DomainError("replicates need n >= 10")
    sample = WaitSample.from_delays(sample_bg(law, seed, n))
    theta, errors, fits = {}, {}, {}
    needed = set(estimators)
    if "BAYES1" in needed:
        needed.add("MME")
    if "BAYES2" in needed:
        needed.add("MLE")
    for name, fitter in (("MME", lambda s: fit_mme(s, n_boot=0)), ("MLE", fit_mle)):
        if name in needed:
            try:
                fits[name] = fitter(sample)
            except BetaGeomError as exc:
                errors[name] = f"{type(exc).__name__}: {exc}"
    for bayes, source in (("BAYES1", "MME"), ("BAYES2", "MLE")):
        if bayes in needed:
            if source in fits:
                fits[bayes] = posterior(empirical_prior(fits[source]), sample)
            else:
                errors[bayes] = f"{source} prior unavailable"
    for est in estimators:
        fit = fits.get(est)
        if fit is None:
            theta[est] = math.nan
        else:
            theta[est] = fit.mean if est.startswith("BAYES") else fit.theta_hat
    return ReplicateRecord(theta, {k: v for k, v in errors.items() if k in estimators})


def _run_block(args):
    law, law_index, n, start, stop, base_seed, estimators = args
    out = np.empty((stop - start, len(estimators)))
    for r in range(start, stop):
        rec = run_replicate(law, n, SeedSpec(base_seed, stream_id(law_index, n, r)), estimators)
        out[r - start] = [rec.theta[e] for e in estimators]
    return out


def _summarise(estimates, truth):
    ok = estimates[np.isfinite(estimates)]
    k = ok.size
    failures = estimates.size - k
    if k == 0:
        return StudyCell(math.nan, math.nan, math.nan, math.nan, math.nan, failures, 0)
    ae = float(np.mean(ok))
    sq = (ok - truth) ** 2
    mse = float(np.mean(sq))
    se = float(np.std(ok, ddof=1) / math.sqrt(k)) if k > 1 else math.nan
    mse_se = float(np.std(sq, ddof=1) / math.sqrt(k)) if k > 1 else math.nan
    return StudyCell(ae, ae - truth, mse, se, mse_se, failures, k)


def run_study(config, workers=1, block_size=250, progress=None):
    """Fill every (law, n, estimator) cell of a :class:`StudyTable`.

    ``workers > 1`` spreads replicate blocks over processes; the table is
    identical for any worker count because each replicate owns its stream
    and the reduction runs in replicate order.
    """
    tasks = []
    for i, law in enumerate(config.laws):
        for n in config.sizes:
            for start in range(0, config.replications, block_size):
                stop = min(start + block_size, config.replications)
                tasks.append((law, i, n, start, stop, config.base_seed, config.estimators))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            blocks = []
            for k, block in enumerate(pool.map(_run_block, tasks)):
                blocks.append(block)
                if progress:
                    progress(k + 1, len(tasks))
    else:
        blocks = []
        for k, task in enumerate(tasks):
            blocks.append(_run_block(task))
            if progress:
                progress(k + 1, len(tasks))

    per_cell = {}
    for task, block in zip(tasks, blocks):
        per_cell.setdefault((task[1], task[2]), []).append(block)
    table = StudyTable(config)
    for (i, n), parts in per_cell.items():
        estimates = np.concatenate(parts)
        truth = config.laws[i].mean_fecundability()
        for j, est in enumerate(config.estimators):
            table.cells[(i, n, est)] = _summarise(estimates[:, j], truth)
    return table


def law_label(law):
    return f"alpha{law.alpha:g}_beta{law.beta:g}"


def _fmt(x):
    return "NA" if isinstance(x, float) and math.isnan(x) else f"{x:.8f}"


def tsv_block(table, law):
    """Tab-separated table for one law: AE, Bias, MSE per estimator, then MC SEs and failures."""
    i = table._law_index(law)
    ests = table.config.estimators
    titles = [ESTIMATOR_TITLES[e] for e in ests]
    cols = ["n"]
    for stat in ("AE", "Bias", "MSE", "MCSE", "Failures"):
        cols += [f"{stat} {t}" for t in titles]
    lines = ["\t".join(cols)]
    for n in table.config.sizes:
        cells = [table.cells[(i, n, e)] for e in ests]
        row = [str(n)]
        row += [_fmt(c.average_estimate) for c in cells]
        row += [_fmt(c.bias) for c in cells]
        row += [_fmt(c.mse) for c in cells]
        row += [_fmt(c.mc_standard_error) for c in cells]
        row += [str(c.failure_count) for c in cells]
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"


def emit_tables(table, format="tsv"):
    """Render the study as TSV (one block per law) or as JSON."""
    if not table.config.estimators:
        raise DomainError("no estimators to tabulate")
    if not table.is_complete():
        raise DomainError("study table is incomplete")
    if format == "json":
        doc = table.to_dict()
        for row in doc["cells"]:
            for k, v in row.items():
                if isinstance(v, float):
                    row[k] = _to_json_float(v)
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if format != "tsv":
        raise DomainError(f"unknown table format {format!r}")
    blocks = []
    for law in table.config.laws:
        theta = law.mean_fecundability()
        header = f"# alpha={law.alpha:g} beta={law.beta:g} theta={theta:.4f}\n"
        blocks.append(header + tsv_block(table, law))
    return "\n".join(blocks)


def table_from_json(text):
    return StudyTable.from_dict(json.loads(text))


def mse_series(table, law):
    """Sample sizes and, per estimator, the MSE column the plot draws."""
    i = table._law_index(law)
    sizes = list(table.config.sizes)
    return sizes, {est: [table.cells[(i, n, est)].mse for n in sizes] for est in table.config.estimators}


def emit_mse_plot(table, law, path=None):
    """SVG line plot of MSE against n, one line per estimator.

    Returns the SVG text and writes it to ``path`` when given.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    i = table._law_index(law)
    law = table.config.laws[i]
    sizes, series = mse_series(table, law)
    with matplotlib.rc_context({"svg.hashsalt": "betageom", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        for est, mse in series.items():
            ax.plot(sizes, mse, marker="o", label=ESTIMATOR_TITLES[est])
        ax.set_xlabel("sample size n")
        ax.set_ylabel("MSE of mean fecundability")
        ax.set_title(f"alpha={law.alpha:g}, beta={law.beta:g}, theta={law.mean_fecundability():.4f}")
        ax.legend()
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    svg = buf.getvalue()
    if path is not None:
        with open(os.fspath(path), "w", encoding="utf-8") as fh:
            fh.write(svg)
    return svg
