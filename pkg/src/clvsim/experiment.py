"""Monte-Carlo study over (variables, factors, k) cells.

Every replicate draws a fresh dataset, clusters its variables, and scores
two-means classification of the subjects at each requested number of
resultant vectors. Replicate seeds come from
``SeedSequence([base_seed, I, J, round(k * 1e6), replicate])``, so any
single replicate can be rerun in isolation and results do not depend on
how jobs are scheduled.
"""
from __future__ import annotations

import math
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import config as cfg
from .classify import congruence, kmeans_two
from .clv import correlation_distance_matrix, cut_tree, extract_rvs, standardize, ward_linkage
from .datagen import GeneratorParams, generate_dataset
from .errors import CLVError, DegenerateInputError, InvalidArgumentError
from .io import fmt, write_rows
from .stats import anova_oneway, mann_whitney_u, pearson_test

DEFAULT_VARIABLES = (50, 100, 300)
DEFAULT_FACTORS = (4, 6, 8)
DEFAULT_K = tuple(round(0.1 * i, 10) for i in range(11))
DEFAULT_RV_COUNTS = (2, 3, 4, 5, 6)
DEFAULT_REPLICATES = 50
DEFAULT_BASE_SEED = 20190603

U_ALPHA = 0.05
R_ALPHA = 0.01

AXES = {
    "k_values": "k",
    "rv_counts": "rv",
    "factor_counts": "J",
    "variable_counts": "I",
}


@dataclass(frozen=True)
class GridConfig:
    variables_list: tuple = DEFAULT_VARIABLES
    factors_list: tuple = DEFAULT_FACTORS
    k_list: tuple = DEFAULT_K
    replicates: int = DEFAULT_REPLICATES
    rv_counts: tuple = DEFAULT_RV_COUNTS
    base_seed: int = DEFAULT_BASE_SEED
    restarts: int = 10
    subjects: int = 40
    q: float = 0.25
    m_distribution: str = "uniform"
    epsilon_distribution: str = "uniform"
    # (I, J) cells that also get the descriptive scan, for every k
    descriptive_cells: tuple = ((300, 6),)

    def __post_init__(self):
        for name in ("variables_list", "factors_list", "k_list", "rv_counts"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "descriptive_cells", tuple(tuple(c) for c in self.descriptive_cells))

    def validate(self):
        if not (self.variables_list and self.factors_list and self.k_list and self.rv_counts):
            raise InvalidArgumentError("grid lists must be nonempty")
        if int(self.replicates) != self.replicates or self.replicates < 1:
            raise InvalidArgumentError(f"replicates must be a positive integer, got {self.replicates}")
        if int(self.restarts) != self.restarts or self.restarts < 1:
            raise InvalidArgumentError(f"restarts must be a positive integer, got {self.restarts}")
        for r in self.rv_counts:
            if r not in range(2, 7):
                raise InvalidArgumentError(f"rv_counts must lie in 2..6, got {r}")
        for cell in self.descriptive_cells:
            if len(cell) != 2:
                raise InvalidArgumentError(f"descriptive_cells entries must be [I, J] pairs, got {list(cell)}")
        for i in self.variables_list:
            for j in self.factors_list:
                for k in self.k_list:
                    self.params(i, j, k, 0).validate()
                if min(self.rv_counts) < 2 or max(self.rv_counts) > i:
                    raise InvalidArgumentError(f"rv_counts exceed the number of variables ({i})")
        return self

    def params(self, num_variables, num_factors, k, seed):
        return GeneratorParams(
            num_variables=num_variables,
            num_subjects=self.subjects,
            num_factors=num_factors,
            factor_strength=k,
            loading_floor=self.q,
            seed=seed,
            m_distribution=self.m_distribution,
            epsilon_distribution=self.epsilon_distribution,
        )

    def cells(self):
        return [(i, j, k) for i in self.variables_list for j in self.factors_list for k in self.k_list]

    def scans(self, num_variables, num_factors):
        return (num_variables, num_factors) in self.descriptive_cells

    def to_mapping(self):
        return {
            "variables_list": list(self.variables_list),
            "factors_list": list(self.factors_list),
            "k_list": list(self.k_list),
            "replicates": self.replicates,
            "rv_counts": list(self.rv_counts),
            "base_seed": self.base_seed,
            "restarts": self.restarts,
            "subjects": self.subjects,
            "q": self.q,
            "m_distribution": self.m_distribution,
            "epsilon_distribution": self.epsilon_distribution,
            "descriptive_cells": [list(c) for c in self.descriptive_cells],
        }

    @classmethod
    def from_mapping(cls, data, source="config"):
        cfg.check_keys(data, cls.__dataclass_fields__, source)
        try:
            return cls(**data).validate()
        except TypeError as exc:
            raise InvalidArgumentError(f"{source}: {exc}") from None

    @classmethod
    def load(cls, path):
        return cls.from_mapping(cfg.load_flat(path), source=str(path))

    def dump(self, path):
        lines = [f"{key} = {_toml_value(value)}" for key, value in self.to_mapping().items()]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _toml_value(value):
    if isinstance(value, str):
        return '"' + value + '"'
    if isinstance(value, list):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    return fmt(value)


def k_key(k):
    return int(round(k * 1_000_000))


def replicate_seeds(base_seed, num_variables, num_factors, k, replicate):
    """(dataset seed, k-means seed) for one replicate of one cell."""
    ss = np.random.SeedSequence([int(base_seed), int(num_variables), int(num_factors), k_key(k), int(replicate)])
    data_seed, kmeans_seed = ss.generate_state(2, dtype=np.uint64)
    return int(data_seed), int(kmeans_seed)


@dataclass
class Descriptive:
    u_sig_fraction: float
    r_sig_fraction: float
    mean_r: float
    mean_abs_r: float


@dataclass
class ReplicateResult:
    num_variables: int
    num_factors: int
    k: float
    replicate: int
    congruence_by_rv: dict = field(default_factory=dict)
    descriptive: Descriptive | None = None
    error: str | None = None

    @property
    def cell(self):
        return (self.num_variables, self.num_factors, self.k)


@dataclass
class CellSummary:
    num_variables: int
    num_factors: int
    k: float
    rv_count: int
    n: int
    mean_congruence: float
    sd_congruence: float


class ReplicateError(CLVError):
    pass


def u_scan(dataset, alpha=U_ALPHA):
    """Fraction of variables whose two groups differ by a U test at ``alpha``."""
    if dataset.true_labels is None:
        raise InvalidArgumentError("the U-test scan needs group labels")
    x = dataset.observations
    g1 = dataset.true_labels == 1
    pvals = [mann_whitney_u(x[g1, i], x[~g1, i]).p_value for i in range(x.shape[1])]
    return float(np.mean(np.asarray(pvals) < alpha))


def correlation_scan(dataset, alpha=R_ALPHA):
    """Pair variable i with variable i + I/2.

    Returns (fraction significant at ``alpha``, mean r, mean |r|).
    """
    x = dataset.observations
    n_var = x.shape[1]
    if n_var % 2:
        raise InvalidArgumentError(f"correlation scan needs an even number of variables, got {n_var}")
    half = n_var // 2
    tests = [pearson_test(x[:, i], x[:, i + half]) for i in range(half)]
    r = np.array([t.statistic for t in tests])
    p = np.array([t.p_value for t in tests])
    return float(np.mean(p < alpha)), float(r.mean()), float(np.abs(r).mean())


def descriptive_scan(dataset):
    """U-test and correlation scans of one dataset.

    With an odd number of variables only the U scan runs and the
    correlation fields are NaN.
    """
    u = u_scan(dataset)
    if dataset.num_variables % 2:
        return Descriptive(u, math.nan, math.nan, math.nan)
    return Descriptive(u, *correlation_scan(dataset))


def run_replicate(params, rv_counts=DEFAULT_RV_COUNTS, restarts=10, kmeans_seed=None, replicate=0, scan=False):
    """Generate one dataset and classify its subjects at each RV count."""
    coords = f"(I={params.num_variables}, J={params.num_factors}, k={params.factor_strength}, replicate={replicate})"
    if kmeans_seed is None:
        kmeans_seed = params.seed
    try:
        dataset = generate_dataset(params)[0]
        tree = ward_linkage(correlation_distance_matrix(dataset))
        z = standardize(dataset.observations)
        by_rv = {}
        for r in rv_counts:
            rvs = extract_rvs(dataset, cut_tree(tree, r), standardized=z)
            labels = kmeans_two(rvs, restarts=restarts, seed=np.random.default_rng([kmeans_seed, r]))
            by_rv[r] = congruence(labels, dataset.true_labels)[0]
        desc = descriptive_scan(dataset) if scan else None
    except CLVError as exc:
        raise ReplicateError(f"replicate {coords} failed: {exc}") from exc
    return ReplicateResult(
        params.num_variables, params.num_factors, params.factor_strength, replicate, by_rv, desc
    )


def _run_job(job):
    config, (num_variables, num_factors, k, rep) = job
    data_seed, kmeans_seed = replicate_seeds(config.base_seed, num_variables, num_factors, k, rep)
    params = config.params(num_variables, num_factors, k, data_seed)
    try:
        return run_replicate(
            params, config.rv_counts, config.restarts, kmeans_seed, rep, scan=config.scans(num_variables, num_factors)
        )
    except ReplicateError as exc:
        return ReplicateResult(num_variables, num_factors, k, rep, error=str(exc))


def rerun(config, num_variables, num_factors, k, replicate):
    """Recompute a single grid replicate from its coordinates."""
    return _run_job((config, (num_variables, num_factors, k, replicate)))


def default_workers():
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def run_grid(config, workers=1, progress=None):
    """Run every cell x replicate of the grid.

    ``progress`` is called with a one-line message as each cell completes.
    Returns ``(replicate results, cell summaries)`` sorted by cell.
    """
    config.validate()
    jobs = [(cell, rep) for cell in config.cells() for rep in range(config.replicates)]
    remaining = defaultdict(int)
    failed = defaultdict(int)
    for cell, _ in jobs:
        remaining[cell] += 1
    payload = [(config, (*cell, rep)) for cell, rep in jobs]

    if workers <= 1:
        stream = map(_run_job, payload)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        stream = pool.map(_run_job, payload, chunksize=max(1, min(config.replicates, 25)))
    results = []
    try:
        for res in stream:
            results.append(res)
            remaining[res.cell] -= 1
            failed[res.cell] += bool(res.error)
            if remaining[res.cell] == 0 and progress is not None:
                i, j, k = res.cell
                progress(f"cell I={i} J={j} k={fmt(k)} done ({config.replicates} replicates, "
                         f"{failed[res.cell]} errors)")
    finally:
        if pool is not None:
            pool.shutdown()

    results.sort(key=lambda r: (r.num_variables, r.num_factors, r.k, r.replicate))
    return results, summarize(results, config.rv_counts)


def summarize(results, rv_counts):
    groups = defaultdict(list)
    cells = set()
    for res in results:
        cells.add(res.cell)
        if res.error:
            continue
        for r in rv_counts:
            groups[(*res.cell, r)].append(res.congruence_by_rv[r])
    summaries = []
    for cell in sorted(cells):
        for r in rv_counts:
            vals = np.asarray(groups.get((*cell, r), []), dtype=float)
            n = len(vals)
            mean = float(vals.mean()) if n else math.nan
            sd = float(vals.std(ddof=1)) if n > 1 else math.nan
            summaries.append(CellSummary(*cell, r, n, mean, sd))
    return summaries


def _coords(res, rv):
    return {"I": res.num_variables, "J": res.num_factors, "k": res.k, "rv": rv}


def congruence_groups(results, axis, fixed, levels=None):
    """Congruence counts grouped by the levels of ``axis``, other coordinates fixed."""
    if axis not in AXES:
        raise InvalidArgumentError(f"unknown axis {axis!r}; expected one of {sorted(AXES)}")
    key = AXES[axis]
    bad = set(fixed) - {"I", "J", "k", "rv"}
    if bad or key in fixed:
        raise InvalidArgumentError(f"invalid fixed coordinates {fixed} for axis {axis}")
    groups = defaultdict(list)
    for res in results:
        if res.error:
            continue
        for rv, count in res.congruence_by_rv.items():
            coords = _coords(res, rv)
            if all(_same(coords[c], v) for c, v in fixed.items()):
                level = coords[key]
                if levels is None or any(_same(level, lv) for lv in levels):
                    groups[level].append(count)
    return dict(sorted(groups.items()))


def _same(a, b):
    return math.isclose(a, b, rel_tol=0, abs_tol=1e-9)


def compare_anova(results, axis, fixed, levels=None):
    """One-way ANOVA of congruence counts across the levels of ``axis``."""
    groups = congruence_groups(results, axis, fixed, levels)
    if len(groups) < 2:
        raise InvalidArgumentError(f"axis {axis} with {fixed} yields {len(groups)} group(s); need at least 2")
    return anova_oneway(list(groups.values()))


def _index(results):
    """Congruence counts keyed by (I, J, k key, rv count), failed replicates skipped."""
    index = defaultdict(list)
    for res in results:
        if res.error:
            continue
        for rv, count in res.congruence_by_rv.items():
            index[(res.num_variables, res.num_factors, k_key(res.k), rv)].append(count)
    return index


def _fixed_label(fixed):
    return ";".join(f"{name}={fmt(value)}" for name, value in fixed.items())


def anova_table(results, config):
    """ANOVA along every axis for every combination of the other coordinates.

    The k axis excludes k = 0, matching the comparisons across k = 0.1..1.
    Degenerate comparisons (no within-group spread) report NaN.
    """
    rows = []
    nonzero_k = [k for k in config.k_list if k > 0]
    plans = [
        ("k_values", [{"I": i, "J": j, "rv": r} for i in config.variables_list for j in config.factors_list
                      for r in config.rv_counts], nonzero_k),
        ("rv_counts", [{"I": i, "J": j, "k": k} for i, j, k in config.cells()], None),
        ("factor_counts", [{"I": i, "k": k, "rv": r} for i in config.variables_list for k in config.k_list
                           for r in config.rv_counts], None),
        ("variable_counts", [{"J": j, "k": k, "rv": r} for j in config.factors_list for k in config.k_list
                             for r in config.rv_counts], None),
    ]
    index = _index(results)
    axis_levels = {"k": nonzero_k, "rv": config.rv_counts, "J": config.factors_list, "I": config.variables_list}
    for axis, fixed_list, levels in plans:
        key = AXES[axis]
        for fixed in fixed_list:
            groups = {}
            for level in sorted(levels if levels is not None else axis_levels[key]):
                coords = dict(fixed, **{key: level})
                counts = index.get((coords["I"], coords["J"], k_key(coords["k"]), coords["rv"]))
                if counts:
                    groups[level] = counts
            if len(groups) < 2 or any(len(g) < 2 for g in groups.values()):
                continue
            try:
                res = anova_oneway(list(groups.values()))
                f, p = res.statistic, res.p_value
            except DegenerateInputError:
                f, p = math.nan, math.nan
            rows.append((axis, _fixed_label(fixed), f, p))
    return rows


def write_outputs(out_dir, results, summaries, config):
    """Write replicates.csv, cells.csv, descriptive.csv, anova.csv (+ errors.csv when needed)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ok = [r for r in results if not r.error]

    rep_rows = []
    for res in ok:
        for r in config.rv_counts:
            c = res.congruence_by_rv[r]
            rep_rows.append((res.num_variables, res.num_factors, res.k, res.replicate, r, c, c / config.subjects))
    write_rows(out / "replicates.csv",
               ["I", "J", "k", "replicate", "rv_count", "congruence_count", "congruence_fraction"], rep_rows)

    write_rows(out / "cells.csv", ["I", "J", "k", "rv_count", "n", "mean_congruence", "sd_congruence"],
               [(s.num_variables, s.num_factors, s.k, s.rv_count, s.n, s.mean_congruence, s.sd_congruence)
                for s in summaries])

    desc_rows = [
        (r.num_variables, r.num_factors, r.k, r.replicate, r.descriptive.u_sig_fraction,
         r.descriptive.r_sig_fraction, r.descriptive.mean_r, r.descriptive.mean_abs_r)
        for r in ok if r.descriptive is not None
    ]
    write_rows(out / "descriptive.csv",
               ["I", "J", "k", "replicate", "u_sig_fraction", "r_sig_fraction", "mean_r", "mean_abs_r"], desc_rows)

    write_rows(out / "anova.csv", ["axis", "fixed_coordinates", "F", "p"], anova_table(results, config))

    errors = [(r.num_variables, r.num_factors, r.k, r.replicate, r.error) for r in results if r.error]
    err_path = out / "errors.csv"
    if errors:
        write_rows(err_path, ["I", "J", "k", "replicate", "error"], errors)
    elif err_path.exists():
        err_path.unlink()
    config.dump(out / "config_used.toml")
    return out


def with_overrides(config, **overrides):
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(config, **overrides).validate() if overrides else config
