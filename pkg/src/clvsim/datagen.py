"""Synthetic two-group datasets driven by latent factors.

Each observation is

    x[s, i] = (1/J) * sum_j k * f[g(s), j, pos(s)] * L[i, j] + mu[i] + mu[i] * eps[s, i]

where group 2's factors are group 1's shifted up by 1.1 times their range,
``L = M*q + (1 - q)`` with ``M ~ U(0, 1)``, ``mu = m**2`` with ``m`` on
[1, 10], and ``eps`` is zero-mean on [-2, 2].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

SEPARATION = 1.1
M_RANGE = (1.0, 10.0)
EPS_BOUND = 2.0

M_DISTRIBUTIONS = ("uniform", "normal")
EPS_DISTRIBUTIONS = ("uniform", "normal")

# "normal" alternative for m: N(5.5, 1.5) clamped to [1, 10]
M_NORMAL_MEAN = 5.5
M_NORMAL_SD = 1.5


@dataclass(frozen=True)
class GeneratorParams:
    num_variables: int = 300
    num_subjects: int = 40
    num_factors: int = 6
    factor_strength: float = 1.0
    loading_floor: float = 0.25
    seed: int = 0
    m_distribution: str = "uniform"
    epsilon_distribution: str = "uniform"

    def validate(self):
        """Raise InvalidArgumentError naming the first violated constraint."""
        if int(self.num_variables) != self.num_variables or self.num_variables < 2:
            raise InvalidArgumentError(f"variables must be an integer >= 2, got {self.num_variables}")
        if int(self.num_subjects) != self.num_subjects or self.num_subjects < 4 or self.num_subjects % 2:
            raise InvalidArgumentError(f"subjects must be an even integer >= 4, got {self.num_subjects}")
        if int(self.num_factors) != self.num_factors or self.num_factors < 1:
            raise InvalidArgumentError(f"factors must be a positive integer, got {self.num_factors}")
        if self.num_factors >= self.num_variables:
            raise InvalidArgumentError(
                f"factors must be fewer than variables (J < I), got J={self.num_factors}, I={self.num_variables}"
            )
        if not 0.0 <= self.factor_strength <= 1.0:
            raise InvalidArgumentError(f"k must be in [0, 1], got {self.factor_strength}")
        if not 0.0 <= self.loading_floor <= 1.0:
            raise InvalidArgumentError(f"q must be in [0, 1], got {self.loading_floor}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise InvalidArgumentError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.m_distribution not in M_DISTRIBUTIONS:
            raise InvalidArgumentError(f"m_distribution must be one of {M_DISTRIBUTIONS}, got {self.m_distribution!r}")
        if self.epsilon_distribution not in EPS_DISTRIBUTIONS:
            raise InvalidArgumentError(
                f"epsilon_distribution must be one of {EPS_DISTRIBUTIONS}, got {self.epsilon_distribution!r}"
            )
        return self

    @property
    def group_size(self):
        return self.num_subjects // 2


@dataclass
class FactorSet:
    group1: np.ndarray  # J x S/2, row j is factor j for group 1
    group2: np.ndarray

    @property
    def num_factors(self):
        return self.group1.shape[0]

    def per_subject(self):
        """S x J matrix: row s holds the factor values seen by subject s."""
        return np.concatenate((self.group1, self.group2), axis=1).T


@dataclass
class LoadingMatrix:
    values: np.ndarray  # I x J


@dataclass
class NoiseProfile:
    means: np.ndarray  # length I


@dataclass
class Dataset:
    observations: np.ndarray  # S x I, rows are subjects
    true_labels: np.ndarray | None = None  # values in {1, 2}
    variable_names: list[str] | None = None

    def __post_init__(self):
        self.observations = np.asarray(self.observations, dtype=float)
        if self.observations.ndim != 2:
            raise InvalidArgumentError("observations must be a 2-D matrix (subjects x variables)")
        if self.true_labels is not None:
            self.true_labels = np.asarray(self.true_labels, dtype=int)
            if self.true_labels.shape != (self.num_subjects,):
                raise InvalidArgumentError(
                    f"true_labels has length {len(self.true_labels)}, expected {self.num_subjects}"
                )
            if not np.isin(self.true_labels, (1, 2)).all():
                raise InvalidArgumentError("true_labels must take values in {1, 2}")
        if self.variable_names is None:
            self.variable_names = default_variable_names(self.num_variables)
        elif len(self.variable_names) != self.num_variables:
            raise InvalidArgumentError("variable_names length does not match the number of columns")

    @property
    def num_subjects(self):
        return self.observations.shape[0]

    @property
    def num_variables(self):
        return self.observations.shape[1]


def default_variable_names(num_variables):
    width = max(4, len(str(num_variables)))
    return [f"v{i:0{width}d}" for i in range(1, num_variables + 1)]


def group_labels(num_subjects):
    half = num_subjects // 2
    return np.repeat([1, 2], [half, num_subjects - half])


def separate_factor(f1):
    """Group-2 factor: shift by 1.1 times the range of the group-1 values."""
    f1 = np.asarray(f1, dtype=float)
    return f1 + (f1.max() - f1.min()) * SEPARATION


def sample_factor_pair(rng, group_size):
    if group_size < 2:
        raise InvalidArgumentError(f"group_size must be >= 2, got {group_size}")
    f1 = rng.standard_normal(group_size)
    return f1, separate_factor(f1)


def sample_factors(rng, num_factors, group_size):
    pairs = [sample_factor_pair(rng, group_size) for _ in range(num_factors)]
    return FactorSet(np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs]))


def loadings_from_uniform(m, loading_floor):
    return np.asarray(m, dtype=float) * loading_floor + (1.0 - loading_floor)


def build_loadings(rng, num_variables, num_factors, loading_floor):
    if not 0.0 <= loading_floor <= 1.0:
        raise InvalidArgumentError(f"loading_floor must be in [0, 1], got {loading_floor}")
    m = rng.uniform(0.0, 1.0, size=(num_variables, num_factors))
    return LoadingMatrix(loadings_from_uniform(m, loading_floor))


def sample_m(rng, size, distribution="uniform"):
    lo, hi = M_RANGE
    if distribution == "uniform":
        return rng.uniform(lo, hi, size=size)
    if distribution == "normal":
        return np.clip(rng.normal(M_NORMAL_MEAN, M_NORMAL_SD, size=size), lo, hi)
    raise InvalidArgumentError(f"unknown m distribution {distribution!r}")


def means_from_m(m):
    return np.asarray(m, dtype=float) ** 2


def build_noise_profile(rng, num_variables, distribution="uniform"):
    if num_variables < 1:
        raise InvalidArgumentError(f"num_variables must be >= 1, got {num_variables}")
    return NoiseProfile(means_from_m(sample_m(rng, num_variables, distribution)))


def sample_epsilon(rng, shape, distribution="uniform"):
    if distribution == "uniform":
        return rng.uniform(-EPS_BOUND, EPS_BOUND, size=shape)
    if distribution == "normal":
        return np.clip(rng.standard_normal(shape), -EPS_BOUND, EPS_BOUND)
    raise InvalidArgumentError(f"unknown epsilon distribution {distribution!r}")


def compose_observations(factors, loadings, means, epsilon, factor_strength):
    """Combine the model ingredients into an S x I observation matrix.

    ``factors`` is S x J (per-subject factor values), ``loadings`` I x J,
    ``means`` length I and ``epsilon`` S x I.
    """
    factors = np.asarray(factors, dtype=float)
    loadings = np.asarray(loadings, dtype=float)
    means = np.asarray(means, dtype=float)
    num_factors = factors.shape[1]
    latent = (factor_strength * factors) @ loadings.T / num_factors
    return latent + means + means * np.asarray(epsilon, dtype=float)


def generate_dataset(params):
    """Draw one dataset.

    Draw order from a single PCG64 stream seeded by ``params.seed``:
    factors (one pair per factor), loadings, variable means, then the
    per-observation errors.

    Returns
    -------
    (Dataset, FactorSet, LoadingMatrix, NoiseProfile)
    """
    params.validate()
    rng = np.random.default_rng(params.seed)
    factor_set = sample_factors(rng, params.num_factors, params.group_size)
    loadings = build_loadings(rng, params.num_variables, params.num_factors, params.loading_floor)
    noise = build_noise_profile(rng, params.num_variables, params.m_distribution)
    eps = sample_epsilon(rng, (params.num_subjects, params.num_variables), params.epsilon_distribution)
    x = compose_observations(factor_set.per_subject(), loadings.values, noise.means, eps, params.factor_strength)
    dataset = Dataset(x, group_labels(params.num_subjects))
    return dataset, factor_set, loadings, noise
