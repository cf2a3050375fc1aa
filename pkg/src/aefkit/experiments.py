"""The three validation studies plus the branching-process baseline.

Invasion threshold: sweep transmission rates over ten seeds spanning the
expected-force range and find the smallest rate whose ensemble median turns
pandemic. Time to pandemic: run a hundred range-covering seeds well above
threshold and correlate milestone days against the centrality suite.
Robustness: degrade the network by removing airports and count how many
surviving scores move. Each study is reproducible from its configuration
and base seed alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import stats
from .episim import DiseaseModel, World, run_ensemble
from .exf import AefScore, all_aef
from .wan import DEGRADE_SCHEMES, WanGraph, degrade_network


def _as_raw(scores: Mapping[str, AefScore] | Mapping[str, float], normalized: bool) -> dict[str, float]:
    out = {}
    for node, value in scores.items():
        if isinstance(value, AefScore):
            out[node] = value.normalized if normalized else value.raw_entropy
        else:
            out[node] = float(value)
    return out


def _derive_seed(base: int, *tags: int) -> int:
    """Stable sub-seed for one purpose-tagged stream of an experiment."""
    ss = np.random.SeedSequence([int(base), *[int(t) for t in tags]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class DecileSelection:
    seeds: tuple[str, ...]
    notes: tuple[str, ...]


def select_decile_seeds(
    scores: Mapping[str, AefScore] | Mapping[str, float], rng: np.random.Generator
) -> DecileSelection:
    """One airport per decile of the [0, 100] normalized score range.

    Empty deciles borrow uniformly from the nearest populated interval
    (lower interval on ties), recorded in the notes.
    """
    values = _as_raw(scores, normalized=True)
    if len(values) < 10:
        raise ValueError(f"need at least 10 airports, got {len(values)}")
    buckets: list[list[str]] = [[] for _ in range(10)]
    for node in sorted(values):
        decile = min(int(values[node] // 10), 9)  # 100 belongs to the top interval
        buckets[decile].append(node)
    chosen: list[str] = []
    taken: set[str] = set()
    notes: list[str] = []
    for i in range(10):
        source = None
        for dist in range(10):
            for j in (i - dist, i + dist):
                if 0 <= j < 10 and any(n not in taken for n in buckets[j]):
                    source = j
                    break
            if source is not None:
                break
        if source is None:
            raise ValueError("fewer than 10 distinct airports available")
        candidates = [n for n in buckets[source] if n not in taken]
        pick = candidates[int(rng.integers(len(candidates)))]
        if source != i:
            notes.append(f"decile {i * 10}-{i * 10 + 10} empty; filled from {source * 10}-{source * 10 + 10} ({pick})")
        chosen.append(pick)
        taken.add(pick)
    return DecileSelection(tuple(chosen), tuple(notes))


def select_range_covering_seeds(
    scores: Mapping[str, AefScore] | Mapping[str, float], count: int = 100
) -> tuple[str, ...]:
    """``count`` airports whose scores evenly cover the observed range.

    Targets are evenly spaced over [min, max]; each target takes the
    not-yet-chosen airport with the nearest score, lowest IATA code on
    ties.
    """
    values = _as_raw(scores, normalized=True)
    if len(values) < count:
        raise ValueError(f"need at least {count} airports, got {len(values)}")
    nodes = sorted(values)
    lo = min(values.values())
    hi = max(values.values())
    targets = np.linspace(lo, hi, count)
    chosen: list[str] = []
    taken: set[str] = set()
    for target in targets:
        best = min(
            (n for n in nodes if n not in taken),
            key=lambda n: (abs(values[n] - target), n),
        )
        chosen.append(best)
        taken.add(best)
    return tuple(chosen)


@dataclass(frozen=True)
class SweepReport:
    """Per-seed, per-rate pandemic outcomes and the minimal pandemic rate."""

    rows: tuple[dict, ...]  # seed, beta, pandemic, median_pandemic_day
    minimal_beta: dict[str, float | None]
    notes: tuple[str, ...]
    betas: tuple[float, ...]
    runs: int
    base_rng_seed: int

    def to_json(self) -> dict:
        return {
            "experiment": "invasion-threshold-sweep",
            "betas": list(self.betas),
            "runs": self.runs,
            "rng_seed": self.base_rng_seed,
            "rows": list(self.rows),
            "minimal_beta": self.minimal_beta,
            "notes": list(self.notes),
        }


def invasion_threshold_sweep(
    world: World,
    seeds: Sequence[str],
    betas: Sequence[float],
    runs: int = 20,
    base_rng_seed: int = 0,
    max_days: int = 365,
    threshold: float = 1.0,
    criterion: tuple[str, int] = ("regions", 3),
    disease_base: DiseaseModel | None = None,
    workers: int = 1,
) -> SweepReport:
    """Smallest transmission rate at which each seed's ensemble pandemics.

    The grid must ascend. Every (seed, rate) cell runs a full ensemble; a
    cell is pandemic when the ensemble's median pandemic day is finite.
    """
    betas = tuple(float(b) for b in betas)
    if list(betas) != sorted(set(betas)):
        raise ValueError("beta grid must be strictly ascending")
    rows: list[dict] = []
    minimal: dict[str, float | None] = {}
    notes: list[str] = []
    for seed in seeds:
        minimal[seed] = None
        for bi, beta in enumerate(betas):
            if disease_base is None:
                disease = DiseaseModel.simple_seir(beta)
            else:
                disease = DiseaseModel(
                    beta=beta,
                    epsilon=disease_base.epsilon,
                    mu=disease_base.mu,
                    p_asym=disease_base.p_asym,
                    r_beta=disease_base.r_beta,
                    p_travel_sym=disease_base.p_travel_sym,
                )
            summary = run_ensemble(
                world,
                disease,
                seed,
                runs=runs,
                max_days=max_days,
                base_rng_seed=_derive_seed(base_rng_seed, bi),
                threshold=threshold,
                criterion=criterion,
                stop_at_pandemic=True,
                workers=workers,
            )
            rows.append(
                {
                    "seed": seed,
                    "beta": beta,
                    "pandemic": summary.is_pandemic,
                    "median_pandemic_day": summary.median_pandemic_day
                    if summary.is_pandemic
                    else None,
                }
            )
            if summary.is_pandemic and minimal[seed] is None:
                minimal[seed] = beta
        if minimal[seed] is None:
            notes.append(f"{seed}: no pandemic at any rate in the grid")
    return SweepReport(tuple(rows), minimal, tuple(notes), betas, runs, base_rng_seed)


#: Measure order of the correlation table.
MEASURE_ORDER = (
    "aef",
    "t_core",
    "degree",
    "w_degree",
    "eigen",
    "w_eigen",
    "betweenness",
    "w_betweenness",
    "clustering",
    "w_clustering",
)


@dataclass(frozen=True)
class TimeToPandemicReport:
    rows: tuple[dict, ...]  # seed, median_pandemic_day, median_peak_day
    correlations: tuple[dict, ...]  # measure, outcome, r, ci_low, ci_high, n
    shapiro: dict[str, tuple[float, float]]  # outcome -> (W, p)
    excluded: tuple[str, ...]
    runs: int
    base_rng_seed: int

    def to_json(self) -> dict:
        return {
            "experiment": "time-to-pandemic",
            "runs": self.runs,
            "rng_seed": self.base_rng_seed,
            "rows": list(self.rows),
            "correlations": list(self.correlations),
            "shapiro": {k: {"W": w, "p": p} for k, (w, p) in self.shapiro.items()},
            "excluded": list(self.excluded),
        }

    def correlation(self, measure: str, outcome: str) -> dict | None:
        for row in self.correlations:
            if row["measure"] == measure and row["outcome"] == outcome:
                return row
        return None


def time_to_pandemic_study(
    world: World,
    seeds: Sequence[str],
    disease: DiseaseModel,
    measures: Mapping[str, Mapping[str, float]],
    runs: int = 20,
    base_rng_seed: int = 0,
    max_days: int = 365,
    threshold: float = 1.0,
    criterion: tuple[str, int] = ("regions", 3),
    workers: int = 1,
) -> TimeToPandemicReport:
    """Median pandemic/peak days per seed, correlated against each measure.

    Seeds whose ensemble median never reaches pandemic status are excluded
    from the correlations and listed. Constant outcomes make a correlation
    undefined; that is reported rather than silently dropped.
    """
    rows: list[dict] = []
    excluded: list[str] = []
    for seed in seeds:
        summary = run_ensemble(
            world,
            disease,
            seed,
            runs=runs,
            max_days=max_days,
            base_rng_seed=base_rng_seed,
            threshold=threshold,
            criterion=criterion,
            workers=workers,
        )
        rows.append(
            {
                "seed": seed,
                "median_pandemic_day": summary.median_pandemic_day,
                "median_peak_day": summary.median_peak_day,
            }
        )
        if not summary.is_pandemic:
            excluded.append(seed)

    usable = [r for r in rows if math.isfinite(r["median_pandemic_day"])]
    outcomes = {
        "pandemic_day": [r["median_pandemic_day"] for r in usable],
        "peak_day": [r["median_peak_day"] for r in usable],
    }
    correlations: list[dict] = []
    for measure in MEASURE_ORDER:
        if measure not in measures:
            continue
        xs = [float(measures[measure][r["seed"]]) for r in usable]
        for outcome, ys in outcomes.items():
            entry: dict = {"measure": measure, "outcome": outcome, "n": len(usable)}
            try:
                result = stats.pearson_ci(xs, ys)
                entry.update(r=result.r, ci_low=result.ci_low, ci_high=result.ci_high)
            except ValueError as exc:
                entry.update(r=None, error=str(exc))
            correlations.append(entry)

    shapiro: dict[str, tuple[float, float]] = {}
    for outcome, ys in outcomes.items():
        if len(ys) >= 3 and max(ys) > min(ys):
            shapiro[outcome] = stats.shapiro_wilk(ys)
    return TimeToPandemicReport(
        tuple(rows), tuple(correlations), shapiro, tuple(excluded), runs, base_rng_seed
    )


@dataclass(frozen=True)
class RobustnessReport:
    """Share of airports whose raw score moves under network degradation."""

    rows: tuple[dict, ...]
    fractions: tuple[float, ...]
    schemes: tuple[str, ...]
    repeats: int
    country: str
    base_rng_seed: int

    def to_json(self) -> dict:
        return {
            "experiment": "robustness",
            "fractions": list(self.fractions),
            "schemes": list(self.schemes),
            "repeats": self.repeats,
            "country": self.country,
            "rng_seed": self.base_rng_seed,
            "rows": list(self.rows),
        }


def robustness_study(
    graph: WanGraph,
    fractions: Sequence[float],
    schemes: Sequence[str] = DEGRADE_SCHEMES,
    repeats: int = 10,
    country: str = "United States",
    base_rng_seed: int = 0,
    change_thresholds: tuple[float, float] = (0.01, 0.05),
    workers: int = 1,
) -> RobustnessReport:
    """Recompute scores on degraded graphs and count who moved.

    For every (fraction, scheme) cell the graph is degraded ``repeats``
    times; surviving airports' raw entropies are compared against the
    undegraded baseline with the relative-change rule (absolute fallback
    for zero baselines), split into subset-country vs rest.
    """
    baseline_scores = all_aef(graph, workers=workers)
    baseline_raw = {k: v.raw_entropy for k, v in baseline_scores.items()}
    aef_weights = {k: v.normalized for k, v in baseline_scores.items()}
    in_country = set(graph.country_nodes(country))

    rows: list[dict] = []
    lo_thresh, hi_thresh = change_thresholds
    for fi, fraction in enumerate(fractions):
        for si, scheme in enumerate(schemes):
            shares = {key: [] for key in ("us_lo", "us_hi", "other_lo", "other_hi")}
            for rep in range(repeats):
                rng = np.random.default_rng(
                    np.random.SeedSequence([base_rng_seed, fi, si, rep])
                )
                degraded = degrade_network(
                    graph,
                    fraction=fraction,
                    scheme=scheme,
                    rng=rng,
                    country=country,
                    aef_scores=aef_weights,
                )
                new_scores = all_aef(degraded, workers=workers)
                counts = {key: 0 for key in shares}
                totals = {"us": 0, "other": 0}
                for iata, score in new_scores.items():
                    old = baseline_raw[iata]
                    group = "us" if iata in in_country else "other"
                    totals[group] += 1
                    if stats.change_exceeds(old, score.raw_entropy, lo_thresh):
                        counts[f"{group}_lo"] += 1
                    if stats.change_exceeds(old, score.raw_entropy, hi_thresh):
                        counts[f"{group}_hi"] += 1
                for key in shares:
                    group = key.split("_")[0]
                    shares[key].append(counts[key] / totals[group] if totals[group] else 0.0)
            rows.append(
                {
                    "fraction": float(fraction),
                    "scheme": scheme,
                    "share_subset_changed_1pct": float(np.mean(shares["us_lo"])),
                    "share_subset_changed_5pct": float(np.mean(shares["us_hi"])),
                    "share_other_changed_1pct": float(np.mean(shares["other_lo"])),
                    "share_other_changed_5pct": float(np.mean(shares["other_hi"])),
                }
            )
    return RobustnessReport(
        tuple(rows), tuple(float(f) for f in fractions), tuple(schemes), repeats, country, base_rng_seed
    )


@dataclass(frozen=True)
class BranchingReport:
    """Analytic major-outbreak curve plus empirical dot clouds."""

    rows: tuple[dict, ...]  # r0, analytic, fractions (list of dots)
    population: int
    dots_per_r0: int
    trials_per_dot: int
    base_rng_seed: int

    def to_json(self) -> dict:
        return {
            "experiment": "branching",
            "population": self.population,
            "dots_per_r0": self.dots_per_r0,
            "trials_per_dot": self.trials_per_dot,
            "rng_seed": self.base_rng_seed,
            "rows": list(self.rows),
        }


def branching_figure(
    r0_grid: Sequence[float],
    population: int = 10_000,
    dots_per_r0: int = 100,
    trials_per_dot: int = 100,
    base_rng_seed: int = 0,
) -> BranchingReport:
    """Reed-Frost major-outbreak probability: theory vs simulated scatter."""
    from .episim import reed_frost_fixed_point, reed_frost_simulate

    rows: list[dict] = []
    for ri, r0 in enumerate(r0_grid):
        analytic = 1.0 - reed_frost_fixed_point(float(r0))
        rng = np.random.default_rng(np.random.SeedSequence([base_rng_seed, ri]))
        fractions = [
            reed_frost_simulate(float(r0), population, trials_per_dot, rng)
            for _ in range(dots_per_r0)
        ]
        rows.append({"r0": float(r0), "analytic": analytic, "fractions": fractions})
    return BranchingReport(tuple(rows), population, dots_per_r0, trials_per_dot, base_rng_seed)
