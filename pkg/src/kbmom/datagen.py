"""Gaussian-mixture data, outlier injection, and the experiment presets."""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ._rng import PHASE_DATA, PHASE_OUTLIER, as_seed, stream
from .data import OUTLIER_LABEL, Dataset
from .exceptions import InfeasibleError

PUNCTUAL = "punctual"
CLUSTER = "cluster"
SIGN_MODES = ("none", "point", "coordinate")


@dataclass(frozen=True)
class MixtureSpec:
    """Isotropic Gaussian mixture: ``sizes[k]`` draws from N(means[k], sigma2[k] I)."""

    means: tuple
    sigma2: tuple
    sizes: tuple

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        K = m.shape[0]
        if len(self.sigma2) != K or len(self.sizes) != K:
            raise ValueError("means, sigma2 and sizes must have the same length")
        if any(s < 1 for s in self.sizes):
            raise ValueError("component sizes must be >= 1")
        if any(v <= 0 for v in self.sigma2):
            raise ValueError("sigma2 must be > 0")

    @property
    def K(self):
        return len(self.sizes)

    @property
    def mean_matrix(self):
        return np.atleast_2d(np.asarray(self.means, dtype=np.float64))

    @property
    def n(self):
        return int(sum(self.sizes))


@dataclass(frozen=True)
class OutlierSpec:
    """Contamination scheme.

    ``punctual`` rescales ``n_outlier`` existing rows by ``beta``; with
    ``signs="point"`` each chosen row gets a uniform random sign on the whole
    row, with ``"coordinate"`` each coordinate gets its own sign.
    ``cluster`` appends ``n_outlier`` rows from N(beta * 1, cluster_sigma2 I).
    """

    scheme: str = PUNCTUAL
    n_outlier: int = 0
    beta: float = 1.0
    cluster_sigma2: float = 1.0
    signs: str = "none"

    def __post_init__(self):
        if self.scheme not in (PUNCTUAL, CLUSTER):
            raise ValueError(f"unknown outlier scheme {self.scheme!r}")
        if self.signs not in SIGN_MODES:
            raise ValueError(f"signs must be one of {SIGN_MODES}")
        if self.n_outlier < 0 or not np.isfinite(self.beta):
            raise ValueError("n_outlier must be >= 0 and beta finite")


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to regenerate and rerun one synthetic experiment."""

    name: str
    mixture: MixtureSpec
    outlier: OutlierSpec
    outlier_grid: tuple = ()
    methods: tuple = ()
    params: dict = field(default_factory=dict)
    repetitions: int = 1
    master_seed: int = 0
    output: Optional[str] = None
    block_counts: tuple = ()

    def with_outlier(self, n_outlier=None, beta=None):
        o = self.outlier
        return replace(
            self,
            outlier=replace(
                o,
                n_outlier=o.n_outlier if n_outlier is None else int(n_outlier),
                beta=o.beta if beta is None else float(beta),
            ),
        )


def sample_mixture(spec, rng=None):
    """Draw every component from its own stream; rows are grouped by component."""
    seed = as_seed(rng)
    means = spec.mean_matrix
    p = means.shape[1]
    parts = []
    for k, (size, s2) in enumerate(zip(spec.sizes, spec.sigma2)):
        z = stream(seed, PHASE_DATA, k).standard_normal((size, p))
        parts.append(means[k] + np.sqrt(s2) * z)
    labels = np.repeat(np.arange(spec.K), spec.sizes)
    return Dataset(np.vstack(parts), np.zeros(spec.n, dtype=bool), labels)


def _base(dataset):
    mask = dataset.outlier_mask if dataset.outlier_mask is not None else np.zeros(dataset.n, bool)
    labels = dataset.true_labels
    return dataset.points.copy(), mask.copy(), None if labels is None else labels.copy()


def inject_punctual(dataset, spec, rng=None):
    """Rescale ``spec.n_outlier`` distinct uniformly chosen rows by ``spec.beta``."""
    if spec.n_outlier > dataset.n:
        raise InfeasibleError(f"cannot corrupt {spec.n_outlier} of {dataset.n} rows")
    g = stream(as_seed(rng), PHASE_OUTLIER)
    X, mask, labels = _base(dataset)
    rows = np.sort(g.choice(dataset.n, size=spec.n_outlier, replace=False))
    factor = np.full((rows.size, X.shape[1]), float(spec.beta))
    if spec.signs == "point":
        factor *= g.choice([-1.0, 1.0], size=(rows.size, 1))
    elif spec.signs == "coordinate":
        factor *= g.choice([-1.0, 1.0], size=factor.shape)
    X[rows] = X[rows] * factor
    mask[rows] = True
    return Dataset(X, mask, labels)


def inject_cluster(dataset, spec, rng=None):
    """Append a Gaussian cluster of outliers centred at ``beta * [1, ..., 1]``."""
    X, mask, labels = _base(dataset)
    m = spec.n_outlier
    if m == 0:
        return Dataset(X, mask, labels)
    z = stream(as_seed(rng), PHASE_OUTLIER).standard_normal((m, X.shape[1]))
    extra = spec.beta + np.sqrt(spec.cluster_sigma2) * z
    X = np.vstack([X, extra])
    mask = np.concatenate([mask, np.ones(m, dtype=bool)])
    if labels is not None:
        labels = np.concatenate([labels, np.full(m, OUTLIER_LABEL)])
    return Dataset(X, mask, labels)


def contaminate(dataset, spec, rng=None):
    if spec.scheme == PUNCTUAL:
        return inject_punctual(dataset, spec, rng)
    return inject_cluster(dataset, spec, rng)


def generate(config, rng=None):
    """Clean mixture draw followed by the configured contamination."""
    seed = as_seed(rng)
    clean = sample_mixture(config.mixture, seed)
    return contaminate(clean, config.outlier, seed)


def _var(*scales):
    # published mixture parameters are per-coordinate standard deviations
    return tuple(s * s for s in scales)


_SIM_MIX = MixtureSpec(((1.0, 4.0), (2.0, 1.0), (-2.0, 3.0)), _var(0.6, 0.6, 0.6), (300, 300, 300))
_SIM_GRID = ((9, 5.0), (9, 20.0), (27, 5.0), (27, 20.0))
_INIT_METHODS = ("random", "kmeans++", "kmedians++", "kbmom-km++", "kbmom-kmed++")
_INIT_PARAMS = {"kbmom": {"B": 250, "n_B": 18}}

_BENCH_MEANS = ((0.0, 1.0, 4.0), (2.0, 1.0, 0.0), (0.0, -2.0, 3.0), (0.0, 5.0, -5.0), (-1.0, -2.0, 0.0))
_BENCH_UNEQUAL = (300, 100, 400, 600, 100)
_BENCH_METHODS = ("kbmom", "block-kmom", "kmeans", "kmedians", "trimmed-kmeans")
# n_B stays below the safe size (34 for 30 outliers in 1500 rows); every
# block is seeded 10 times, like the 10 k-means++ restarts of the baselines
_BENCH_PARAMS = {
    "kbmom": {"B": 500, "n_B": 25, "n_seedings": 10, "max_iter": 10},
    "block-kmom": {"B": 500, "n_B": 25, "n_seedings": 10},
    "trimmed-kmeans": {"trim_alpha": 30 / 1500},
}


def _bench(name, sizes, sigma2):
    return ScenarioConfig(
        name=name,
        mixture=MixtureSpec(_BENCH_MEANS, sigma2, sizes),
        outlier=OutlierSpec(PUNCTUAL, 30, 10.0, signs="point"),
        methods=_BENCH_METHODS,
        params=_BENCH_PARAMS,
        repetitions=50,
    )


def _sim(name, scheme):
    grid = tuple(OutlierSpec(scheme, m, b) for m, b in _SIM_GRID)
    return ScenarioConfig(
        name=name,
        mixture=_SIM_MIX,
        outlier=grid[0],
        outlier_grid=grid,
        methods=_INIT_METHODS,
        params=_INIT_PARAMS,
        repetitions=300,
    )


PRESET_NAMES = ("sim1", "sim2", "tuning", "bench1", "bench2", "bench3")


def preset(name):
    """Scenario with the published simulation parameters."""
    if name == "sim1":
        return _sim("sim1", PUNCTUAL)
    if name == "sim2":
        return _sim("sim2", CLUSTER)
    if name == "tuning":
        return ScenarioConfig(
            name="tuning",
            mixture=MixtureSpec(((3.0, 12.0), (6.0, 3.0), (-6.0, 9.0)), _var(0.6, 0.6, 0.6), (300, 300, 300)),
            outlier=OutlierSpec(PUNCTUAL, 20, 50.0),
            methods=("kbmom-km++",),
            repetitions=20,
            block_counts=(50, 100),
        )
    if name == "bench1":
        return _bench("bench1", (300,) * 5, _var(*(0.6,) * 5))
    if name == "bench2":
        return _bench("bench2", _BENCH_UNEQUAL, _var(*(0.6,) * 5))
    if name == "bench3":
        return _bench("bench3", _BENCH_UNEQUAL, _var(1.0, 0.4, 0.6, 1.0, 0.5))
    raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
