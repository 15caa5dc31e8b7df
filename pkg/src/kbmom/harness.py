"""CSV ingest, scenario configuration and replicated experiments."""

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from ._rng import PHASE_DATA, PHASE_METHOD, derive_seed
from .baselines import BaselineParams, fit_restarts, init_kmpp, init_random
from .clustering import KbmomParams, block_kmom_fit, kbmom_fit, kbmom_init
from .data import Dataset
from .datagen import MixtureSpec, OutlierSpec, ScenarioConfig, generate, preset
from .exceptions import CSVParseError, InvalidPlanError
from .metrics import EvalReport, evaluate

LABEL_COLUMN = "__label"
OUTLIER_COLUMN = "__outlier"

METRICS = EvalReport.FIELDS
REP_HEADER = ("rep", "method") + METRICS + ("iterations", "converged", "error")
SUMMARY_HEADER = ("method", "n_ok", "n_failed") + tuple(
    f"{m}_{s}" for m in METRICS for s in ("mean", "std"))


def _cell(text, row, col):
    try:
        v = float(text)
    except ValueError:
        raise CSVParseError(f"row {row}, column {col}: {text!r} is not a number", row, col) from None
    if not math.isfinite(v):
        raise CSVParseError(f"row {row}, column {col}: non-finite value {text!r}", row, col)
    return v


def load_csv(path, has_header=True):
    """Read a numeric CSV into a :class:`Dataset`.

    Columns named ``__label`` and ``__outlier`` (header required) fill the
    true labels and the outlier mask. Rows and columns in error messages
    are 1-based file positions.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise CSVParseError(f"{path}: empty file", 1, None)
    header = None
    first = 1
    if has_header:
        header = [h.strip() for h in rows[0]]
        rows = rows[1:]
        first = 2
    if not rows:
        raise CSVParseError(f"{path}: no data rows", first, None)
    width = len(header) if header else len(rows[0])
    values = []
    for i, r in enumerate(rows):
        if len(r) != width:
            raise CSVParseError(
                f"row {first + i}: expected {width} fields, got {len(r)}", first + i, len(r))
        values.append([_cell(c.strip(), first + i, j + 1) for j, c in enumerate(r)])
    a = np.array(values, dtype=np.float64)
    labels = mask = None
    keep = list(range(width))
    if header:
        if LABEL_COLUMN in header:
            j = header.index(LABEL_COLUMN)
            labels = a[:, j].astype(np.int64)
            keep.remove(j)
        if OUTLIER_COLUMN in header:
            j = header.index(OUTLIER_COLUMN)
            col = a[:, j]
            bad = np.flatnonzero((col != 0) & (col != 1))
            if bad.size:
                raise CSVParseError(
                    f"row {first + bad[0]}: {OUTLIER_COLUMN} must be 0 or 1", first + bad[0], j + 1)
            mask = col == 1
            keep.remove(j)
    if not keep:
        raise CSVParseError(f"{path}: no feature columns", first, None)
    return Dataset(a[:, keep], mask, labels)


def save_csv(dataset, path):
    """Write ``dataset`` in the format read by :func:`load_csv`."""
    p = dataset.p
    header = [f"x{j}" for j in range(p)]
    extra = []
    if dataset.true_labels is not None:
        header.append(LABEL_COLUMN)
        extra.append(dataset.true_labels)
    if dataset.outlier_mask is not None:
        header.append(OUTLIER_COLUMN)
        extra.append(dataset.outlier_mask.astype(np.int64))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, row in enumerate(dataset.points):
            w.writerow([repr(float(v)) for v in row] + [int(e[i]) for e in extra])


# -- configuration ---------------------------------------------------------

def config_from_dict(d):
    """Build a :class:`ScenarioConfig` from plain JSON-style data.

    A ``preset`` key starts from that preset; other keys override it.
    """
    d = dict(d)
    base = preset(d.pop("preset")) if "preset" in d else None
    fields = {}
    if "mixture" in d:
        m = d.pop("mixture")
        fields["mixture"] = MixtureSpec(
            tuple(tuple(float(v) for v in row) for row in m["means"]),
            tuple(float(v) for v in m["sigma2"]),
            tuple(int(v) for v in m["sizes"]),
        )
    if "outlier" in d:
        fields["outlier"] = OutlierSpec(**d.pop("outlier"))
    if "outlier_grid" in d:
        fields["outlier_grid"] = tuple(OutlierSpec(**o) for o in d.pop("outlier_grid"))
    for key in ("methods", "block_counts"):
        if key in d:
            fields[key] = tuple(d.pop(key))
    for key in ("name", "params", "repetitions", "master_seed", "output"):
        if key in d:
            fields[key] = d.pop(key)
    if d:
        raise InvalidPlanError(f"unknown config keys: {', '.join(sorted(d))}")
    if base is None:
        if "mixture" not in fields:
            raise InvalidPlanError("config needs a preset or a mixture")
        fields.setdefault("name", "custom")
        fields.setdefault("outlier", OutlierSpec())
        cfg = ScenarioConfig(**fields)
    else:
        cfg = replace(base, **fields)
    check_config(cfg)
    return cfg


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise InvalidPlanError(f"{path}: invalid JSON ({e})") from None
    return config_from_dict(data)


def check_config(cfg):
    if cfg.repetitions < 1:
        raise InvalidPlanError("repetitions must be >= 1")
    if not cfg.methods:
        raise InvalidPlanError("no methods configured")
    unknown = [m for m in cfg.methods if canonical(m) not in METHODS]
    if unknown:
        raise InvalidPlanError(f"unknown methods: {', '.join(unknown)}")


# -- methods ---------------------------------------------------------------

_ALIASES = {
    "kmpp": "kmeans++",
    "kmedpp": "kmedians++",
    "kbmom_kmpp": "kbmom-km++",
    "kbmom_kmedpp": "kbmom-kmed++",
    "block_kmom": "block-kmom",
    "trimmed_kmeans": "trimmed-kmeans",
}


def canonical(name):
    return _ALIASES.get(name, name)


@dataclass
class MethodOutput:
    centers: np.ndarray
    iterations: int = 0
    converged: bool = True


def _kbmom_params(K, opts, **extra):
    known = {f for f in KbmomParams.__dataclass_fields__}
    kw = {k: v for k, v in opts.items() if k in known and k != "K"}
    kw.update(extra)
    return KbmomParams(K=K, **kw)


def _baseline_params(K, opts):
    known = {f for f in BaselineParams.__dataclass_fields__}
    return BaselineParams(K=K, **{k: v for k, v in opts.items() if k in known and k != "K"})


def _run_random(ds, K, opts, seed):
    return MethodOutput(init_random(ds, K, seed).centers)


def _run_kmpp(power):
    def run(ds, K, opts, seed):
        return MethodOutput(init_kmpp(ds, K, seed, power, opts.get("local_trials")).centers)
    return run


def _run_kbmom_init(kind):
    def run(ds, K, opts, seed):
        return MethodOutput(kbmom_init(ds, _kbmom_params(K, opts, init_kind=kind), seed).centers)
    return run


def _run_kbmom(ds, K, opts, seed):
    res = kbmom_fit(ds, _kbmom_params(K, opts), seed)
    return MethodOutput(res.centers, res.iterations, res.converged)


def _run_block_kmom(ds, K, opts, seed):
    res = block_kmom_fit(ds, _kbmom_params(K, opts), seed)
    return MethodOutput(res.centers, res.iterations, res.converged)


def _run_baseline(name):
    def run(ds, K, opts, seed):
        res = fit_restarts(name, ds, _baseline_params(K, opts), seed)
        return MethodOutput(res.centers, res.iterations, res.converged)
    return run


# initialisation methods report their seeding centers; the rest are full fits
METHODS = {
    "random": _run_random,
    "kmeans++": _run_kmpp(2),
    "kmedians++": _run_kmpp(1),
    "kbmom-km++": _run_kbmom_init("kbmom_kmpp"),
    "kbmom-kmed++": _run_kbmom_init("kbmom_kmedpp"),
    "kbmom": _run_kbmom,
    "block-kmom": _run_block_kmom,
    "kmeans": _run_baseline("kmeans"),
    "kmedians": _run_baseline("kmedians"),
    "trimmed-kmeans": _run_baseline("trimmed-kmeans"),
}


def method_options(cfg, name):
    name = canonical(name)
    if name in cfg.params:
        return dict(cfg.params[name])
    if name.startswith("kbmom"):
        return dict(cfg.params.get("kbmom", {}))
    return {}


# -- experiments -----------------------------------------------------------

@dataclass(frozen=True)
class RepRow:
    rep: int
    method: str
    report: EvalReport = None
    iterations: int = 0
    converged: bool = False
    error: str = ""

    @property
    def failed(self):
        return self.report is None

    def as_csv(self):
        if self.failed:
            metrics = [""] * len(METRICS)
        else:
            metrics = [repr(float(v)) for v in self.report.as_row()[:-1]] + [self.report.nb_clusters]
        return [self.rep, self.method] + metrics + [self.iterations, int(self.converged), self.error]


@dataclass(frozen=True)
class AggregateRow:
    method: str
    n_ok: int
    n_failed: int
    mean: tuple
    std: tuple

    def as_csv(self):
        stats = []
        for m, s in zip(self.mean, self.std):
            stats += [repr(float(m)), repr(float(s))]
        return [self.method, self.n_ok, self.n_failed] + stats

    def get(self, metric):
        i = METRICS.index(metric)
        return self.mean[i], self.std[i]


@dataclass(frozen=True)
class ExperimentResult:
    config: ScenarioConfig
    rows: tuple
    aggregates: tuple

    def aggregate(self, method):
        for a in self.aggregates:
            if a.method == method:
                return a
        raise KeyError(method)

    def series(self, method, metric):
        """Per-rep values of one metric, failed reps skipped."""
        i = METRICS.index(metric)
        return np.array([r.report.as_row()[i] for r in self.rows
                         if r.method == method and not r.failed], dtype=np.float64)


def default_workers():
    cap = os.environ.get("KBMOM_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise InvalidPlanError(f"KBMOM_THREADS must be an integer, got {cap!r}") from None
    return n


def _run_rep(cfg, rep):
    ds = generate(cfg, derive_seed(cfg.master_seed, PHASE_DATA, rep))
    K = cfg.mixture.K
    true_means = cfg.mixture.mean_matrix
    out = []
    for mi, name in enumerate(cfg.methods):
        seed = derive_seed(cfg.master_seed, PHASE_METHOD, rep, mi)
        try:
            res = METHODS[canonical(name)](ds, K, method_options(cfg, name), seed)
            labels = kernels.assign(ds.points, res.centers)[0]
            report = evaluate(ds, labels, res.centers, true_means)
            out.append(RepRow(rep, name, report, res.iterations, res.converged))
        except (ArithmeticError, ValueError, RuntimeError) as e:
            out.append(RepRow(rep, name, error=f"{type(e).__name__}: {e}"))
    return out


def aggregate(rows, methods):
    """Mean and population std (divisor = number of successful reps) per method."""
    result = []
    for name in methods:
        ok = [r.report.as_row() for r in rows if r.method == name and not r.failed]
        failed = sum(1 for r in rows if r.method == name and r.failed)
        if ok:
            a = np.array(ok, dtype=np.float64)
            mean = tuple(float(v) for v in a.mean(axis=0))
            std = tuple(float(v) for v in a.std(axis=0))
        else:
            mean = std = (math.nan,) * len(METRICS)
        result.append(AggregateRow(name, len(ok), failed, mean, std))
    return tuple(result)


def run_experiment(config, workers=None, output=None):
    """Run every method on ``config.repetitions`` regenerated datasets.

    Rep ``r`` draws its data from a seed derived from ``(master_seed, r)``
    and each method from ``(master_seed, r, method index)``, so results do
    not depend on ``workers``. Failures become rows with an error marker.
    With ``output`` (a directory) the per-rep and summary CSVs are written.
    """
    check_config(config)
    workers = default_workers() if workers is None else max(1, int(workers))
    reps = range(config.repetitions)
    if workers > 1 and config.repetitions > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            per_rep = list(ex.map(lambda r: _run_rep(config, r), reps))
    else:
        per_rep = [_run_rep(config, r) for r in reps]
    rows = tuple(row for rep_rows in per_rep for row in rep_rows)
    result = ExperimentResult(config, rows, aggregate(rows, config.methods))
    if output is not None:
        write_experiment(result, output)
    return result


def write_experiment(result, directory):
    os.makedirs(directory, exist_ok=True)
    _write(os.path.join(directory, "reps.csv"), REP_HEADER, (r.as_csv() for r in result.rows))
    _write(os.path.join(directory, "summary.csv"), SUMMARY_HEADER,
           (a.as_csv() for a in result.aggregates))


def _write(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def grid_configs(config):
    """One config per cell of the outlier grid, or ``[config]`` without a grid."""
    if not config.outlier_grid:
        return [config]
    return [replace(config, outlier=o, name=f"{config.name}_m{o.n_outlier}_beta{o.beta:g}")
            for o in config.outlier_grid]
