"""Stochastic metapopulation outbreak simulation over the airline network.

Each airport carries a subpopulation with S/E/infectious/R compartments;
days alternate a travel phase (multinomial relocation along seat-weighted
edges) and a chain-binomial epidemic phase within each subpopulation. The
infectious pool splits into asymptomatic, symptomatic-traveling and
symptomatic-non-traveling classes; collapsing the split recovers a plain
SEIR model. A run is declared a pandemic on the first day prevalence
exceeds a threshold in enough of the world's sixteen regions.

Also includes the discrete-time Reed-Frost chain binomial and its
major-outbreak fixed point for branching-process baselines.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping, Sequence

import numpy as np

from .stats import lower_median
from .wan import WanGraph

REGION_COUNT = 16

#: Travel-eligible compartments, in draw order. Symptomatic non-travelers stay put.
_TRAVEL_CLASSES = ("S", "E", "I_asym", "I_sym_t", "R")

#: Population synthesis: catchment scales with traffic, floored to avoid
#: degenerate towns.
SYNTH_POP_PER_SEAT = 2_000
SYNTH_POP_FLOOR = 50_000


@dataclass(frozen=True)
class DiseaseModel:
    """Compartmental rates (per day) plus the infectious-class split.

    beta / mu is the basic reproductive number. With ``p_asym = 0`` and
    ``p_travel_sym = 1`` the model collapses to plain SEIR with a single
    traveling infectious class.
    """

    beta: float
    epsilon: float = 1.0 / 1.1
    mu: float = 1.0 / 2.5
    p_asym: float = 0.0
    r_beta: float = 0.5
    p_travel_sym: float = 1.0

    def __post_init__(self):
        if self.beta <= 0 or self.epsilon <= 0 or self.mu <= 0:
            raise ValueError("beta, epsilon and mu must be positive rates")
        for name in ("p_asym", "r_beta", "p_travel_sym"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")

    @property
    def r0(self) -> float:
        return self.beta / self.mu

    @property
    def is_simple(self) -> bool:
        return self.p_asym == 0.0 and self.p_travel_sym == 1.0

    @property
    def class_probabilities(self) -> tuple[float, float, float]:
        """Split of newly infectious into (asym, sym traveling, sym staying)."""
        return (
            self.p_asym,
            (1.0 - self.p_asym) * self.p_travel_sym,
            (1.0 - self.p_asym) * (1.0 - self.p_travel_sym),
        )

    @classmethod
    def simple_seir(cls, beta: float) -> "DiseaseModel":
        return cls(beta=beta)

    @classmethod
    def influenza_2009(cls, beta: float = 0.8383) -> "DiseaseModel":
        """Full three-class model with 2009-pandemic-style conventions."""
        return cls(beta=beta, p_asym=0.33, r_beta=0.5, p_travel_sym=0.5)


_COMPARTMENTS = ("S", "E", "I_asym", "I_sym_t", "I_sym_nt", "R")


class World:
    """Metapopulation state: per-airport compartment counts and regions.

    Treat instances as immutable; the simulation step returns a fresh
    World. Travel structures derived from the graph are shared between
    generations.
    """

    def __init__(self, graph: WanGraph, arrays: Mapping[str, np.ndarray], region: np.ndarray, rho: float):
        # rho = 0 is allowed and disables travel entirely
        if not 0.0 <= rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {rho}")
        self.graph = graph
        self.iatas = graph.iatas
        self.rho = float(rho)
        self.region = np.asarray(region, dtype=np.int64)
        if self.region.min(initial=1) < 1 or self.region.max(initial=1) > REGION_COUNT:
            raise ValueError(f"region ids must lie in 1..{REGION_COUNT}")
        for name in _COMPARTMENTS:
            setattr(self, name, np.asarray(arrays[name], dtype=np.int64))
        self.N = self.S + self.E + self.I_asym + self.I_sym_t + self.I_sym_nt + self.R
        if (self.N <= 0).any():
            bad = [self.iatas[i] for i in np.flatnonzero(self.N <= 0)[:5]]
            raise ValueError(f"non-positive populations at {bad}")
        self._travel: tuple | None = None

    @property
    def n_airports(self) -> int:
        return len(self.iatas)

    def compartments(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in _COMPARTMENTS}

    def infectious(self) -> np.ndarray:
        return self.I_asym + self.I_sym_t + self.I_sym_nt

    def total_population(self) -> int:
        return int(self.N.sum())

    def replace(self, **arrays: np.ndarray) -> "World":
        merged = self.compartments()
        merged.update(arrays)
        world = World(self.graph, merged, self.region, self.rho)
        world._travel = self._travel
        return world

    def travel_structure(self):
        """Padded destination/weight matrices for the multinomial travel draw."""
        if self._travel is None:
            nbr_idx, nbr_w, _ = self.graph.csr()
            n = self.n_airports
            width = max((len(ix) for ix in nbr_idx), default=0)
            dests = np.tile(np.arange(n, dtype=np.int64)[:, None], (1, width + 1))
            weights = np.zeros((n, width))
            for v in range(n):
                k = len(nbr_idx[v])
                dests[v, :k] = nbr_idx[v]
                weights[v, :k] = nbr_w[v]
            self._travel = (dests, weights)
        return self._travel


def load_regions(path=None) -> dict[str, int]:
    """Country-to-region table; the bundled 16-region partition by default."""
    if path is None:
        text = resources.files("aefkit.data").joinpath("regions.tsv").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    table: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            country, region = line.rsplit("\t", 1)
            table[country.strip()] = int(region)
        except ValueError as exc:
            raise ValueError(f"region table line {lineno}: {line!r}") from exc
    return table


def load_populations(path) -> dict[str, int]:
    """Read an ``iata,population`` CSV (header optional)."""
    import csv

    out: dict[str, int] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lower() == "iata":
                continue
            out[row[0].strip().upper()] = int(row[1])
    return out


def build_world(
    graph: WanGraph,
    populations: Mapping[str, int] | None = None,
    regions: Mapping[str, int] | None = None,
    rho: float = 0.7,
) -> World:
    """All-susceptible world over the graph's airports.

    Populations default to the traffic-scaled synthesis rule
    ``max(floor(weighted_degree * 2000), 50000)``. Every airport's country
    must resolve to a region id; unmapped countries are reported together.
    """
    region_table = load_regions() if regions is None else dict(regions)
    missing = sorted({graph.record(iata).country for iata in graph.iatas} - set(region_table))
    if missing:
        raise ValueError(f"countries without a region mapping: {missing}")

    n = graph.n_nodes
    pop = np.zeros(n, dtype=np.int64)
    for i, iata in enumerate(graph.iatas):
        if populations is None:
            pop[i] = max(int(graph.weighted_degree(iata) * SYNTH_POP_PER_SEAT), SYNTH_POP_FLOOR)
        else:
            if iata not in populations:
                raise ValueError(f"no population for airport {iata}")
            pop[i] = int(populations[iata])
    if (pop <= 0).any():
        bad = [graph.iatas[i] for i in np.flatnonzero(pop <= 0)[:5]]
        raise ValueError(f"non-positive populations for {bad}")

    region = np.array([region_table[graph.record(iata).country] for iata in graph.iatas], dtype=np.int64)
    zeros = np.zeros(n, dtype=np.int64)
    arrays = {name: zeros.copy() for name in _COMPARTMENTS}
    arrays["S"] = pop.copy()
    return World(graph, arrays, region, rho)


def largest_remainder(total: int, probabilities: Sequence[float]) -> list[int]:
    """Apportion ``total`` across classes by quota, largest remainder first.

    Remainder ties go to the later class, keeping the split deterministic.
    """
    quotas = [total * p for p in probabilities]
    counts = [int(math.floor(q)) for q in quotas]
    leftover = total - sum(counts)
    order = sorted(range(len(quotas)), key=lambda i: (quotas[i] - counts[i], i), reverse=True)
    for i in order[:leftover]:
        counts[i] += 1
    return counts


def seed_outbreak(world: World, airport: str, disease: DiseaseModel, fraction: float = 0.10) -> World:
    """Move 10% (by default) of the seed city from susceptible to infectious.

    The seeded cases split across the three infectious classes by the
    disease model's class probabilities using largest-remainder rounding.
    """
    if airport not in world.graph.index:
        raise KeyError(f"airport {airport!r} not in world")
    i = world.graph.index[airport]
    n_seed = int(math.floor(fraction * world.N[i]))
    if n_seed == 0:
        warnings.warn(
            f"seeding {airport}: floor({fraction} * {int(world.N[i])}) is zero; no cases introduced",
            RuntimeWarning,
            stacklevel=2,
        )
        return world.replace()
    asym, sym_t, sym_nt = largest_remainder(n_seed, disease.class_probabilities)
    arrays = {name: arr.copy() for name, arr in world.compartments().items()}
    arrays["S"][i] -= n_seed
    arrays["I_asym"][i] += asym
    arrays["I_sym_t"][i] += sym_t
    arrays["I_sym_nt"][i] += sym_nt
    if arrays["S"][i] < 0:
        raise ValueError(f"seed count exceeds susceptibles at {airport}")
    return world.replace(**arrays)


def step_day(world: World, disease: DiseaseModel, rng: np.random.Generator) -> World:
    """Advance the world one day: travel phase, then epidemic phase.

    Travel: every individual in a travel-eligible compartment at airport k
    moves to neighbor l with probability min(1, rho * w_kl / N_k),
    destinations drawn by one multinomial per compartment (probabilities
    rescale when their sum would exceed 1). Epidemic: chain-binomial
    transitions with per-airport force of infection
    beta * (I_sym + r_beta * I_asym) / N.

    Both phases conserve individuals exactly.
    """
    arrays = {name: arr.copy() for name, arr in world.compartments().items()}
    n = world.n_airports

    # -- travel phase ----------------------------------------------------
    dests, weights = world.travel_structure()
    if weights.shape[1] > 0:
        safe_n = np.maximum(world.N, 1)
        probs = np.minimum(world.rho * weights / safe_n[:, None], 1.0)
        totals = probs.sum(axis=1)
        overflow = totals > 1.0
        if overflow.any():
            probs[overflow] /= totals[overflow, None]
            totals[overflow] = 1.0
        pvals = np.empty((n, weights.shape[1] + 1))
        pvals[:, :-1] = probs
        pvals[:, -1] = 1.0 - totals  # stay-home residual
        flat_dests = dests[:, :-1].ravel()
        for name in _TRAVEL_CLASSES:
            counts = rng.multinomial(arrays[name], pvals)
            moved = counts[:, :-1]
            stayed = counts[:, -1]
            new = np.zeros(n, dtype=np.int64)
            np.add.at(new, flat_dests, moved.ravel())
            new += stayed
            arrays[name] = new
    pop = sum(arrays[name] for name in _COMPARTMENTS)

    # -- epidemic phase ----------------------------------------------------
    safe_pop = np.maximum(pop, 1)
    lam = disease.beta * (arrays["I_sym_t"] + arrays["I_sym_nt"] + disease.r_beta * arrays["I_asym"]) / safe_pop
    new_exposed = rng.binomial(arrays["S"], -np.expm1(-lam))
    exits = rng.binomial(arrays["E"], -math.expm1(-disease.epsilon))
    split = rng.multinomial(exits, np.asarray(disease.class_probabilities))
    p_recover = -math.expm1(-disease.mu)
    rec_asym = rng.binomial(arrays["I_asym"], p_recover)
    rec_sym_t = rng.binomial(arrays["I_sym_t"], p_recover)
    rec_sym_nt = rng.binomial(arrays["I_sym_nt"], p_recover)

    arrays["S"] = arrays["S"] - new_exposed
    arrays["E"] = arrays["E"] + new_exposed - exits
    arrays["I_asym"] = arrays["I_asym"] + split[:, 0] - rec_asym
    arrays["I_sym_t"] = arrays["I_sym_t"] + split[:, 1] - rec_sym_t
    arrays["I_sym_nt"] = arrays["I_sym_nt"] + split[:, 2] - rec_sym_nt
    arrays["R"] = arrays["R"] + rec_asym + rec_sym_t + rec_sym_nt
    return world.replace(**arrays)


def detect_pandemic(
    prevalence_per_100k: np.ndarray, threshold: float = 1.0, min_units: int = 3
) -> int | None:
    """First day (1-based row) at least ``min_units`` units exceed the threshold.

    Rows are days, columns are regions (use per-city columns with
    ``min_units=100`` for the city-count criterion). None when the
    criterion never holds.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    series = np.atleast_2d(np.asarray(prevalence_per_100k))
    hits = (series > threshold).sum(axis=1) >= min_units
    days = np.flatnonzero(hits)
    return int(days[0]) + 1 if days.size else None


@dataclass(frozen=True)
class SimulationOutcome:
    """One run's daily series and milestone days (1-based)."""

    regional_prevalence: np.ndarray  # (days, 16), per 100k inhabitants
    global_incidence: np.ndarray  # (days,), new exposures per day
    pandemic_day: int | None
    peak_day: int
    days_run: int


def simulate(
    world: World,
    disease: DiseaseModel,
    rng: np.random.Generator,
    max_days: int = 365,
    threshold: float = 1.0,
    criterion: tuple[str, int] = ("regions", 3),
    stop_at_pandemic: bool = False,
) -> SimulationOutcome:
    """Run one outbreak from an already-seeded world.

    Stops early once no exposed or infectious individuals remain (the
    epidemic is over) or, when ``stop_at_pandemic`` is set, on the day the
    pandemic criterion first holds.
    """
    kind, needed = criterion
    if kind not in ("regions", "cities"):
        raise ValueError(f"criterion must be ('regions', k) or ('cities', k), got {criterion!r}")
    region_idx = world.region - 1
    regional_rows: list[np.ndarray] = []
    incidence: list[int] = []
    pandemic_day: int | None = None

    current = world
    for day in range(1, max_days + 1):
        s_before = int(current.S.sum())
        current = step_day(current, disease, rng)
        incidence.append(s_before - int(current.S.sum()))

        infectious = current.infectious().astype(float)
        region_inf = np.bincount(region_idx, weights=infectious, minlength=REGION_COUNT)
        region_pop = np.bincount(region_idx, weights=current.N.astype(float), minlength=REGION_COUNT)
        with np.errstate(invalid="ignore", divide="ignore"):
            row = np.where(region_pop > 0, region_inf / region_pop * 1e5, 0.0)
        regional_rows.append(row)

        if pandemic_day is None:
            if kind == "regions":
                crossed = int((row > threshold).sum())
            else:
                city_prev = infectious / np.maximum(current.N, 1) * 1e5
                crossed = int((city_prev > threshold).sum())
            if crossed >= needed:
                pandemic_day = day
                if stop_at_pandemic:
                    break
        if int(current.E.sum()) == 0 and int(current.infectious().sum()) == 0:
            break

    incidence_arr = np.array(incidence, dtype=np.int64)
    peak_day = int(np.argmax(incidence_arr)) + 1 if incidence_arr.size else 1
    return SimulationOutcome(
        regional_prevalence=np.array(regional_rows),
        global_incidence=incidence_arr,
        pandemic_day=pandemic_day,
        peak_day=peak_day,
        days_run=len(incidence),
    )


def _airport_key(airport: str) -> int:
    return int.from_bytes(airport.encode("utf-8"), "big")


def run_rng(base_rng_seed: int, airport: str, run_index: int) -> np.random.Generator:
    """Independent, reproducible stream for (base seed, seed airport, run)."""
    return np.random.default_rng(np.random.SeedSequence([base_rng_seed, _airport_key(airport), run_index]))


@dataclass(frozen=True)
class EnsembleSummary:
    """Per-run milestones plus ensemble medians for one seed airport.

    Medians use the lower-of-two-middles rule over day values with censored
    runs entered as +inf; a median of +inf means most runs never reached
    pandemic status.
    """

    seed_airport: str
    pandemic_days: tuple[int | None, ...]
    peak_days: tuple[int, ...]
    median_pandemic_day: float
    median_peak_day: float

    @property
    def is_pandemic(self) -> bool:
        return math.isfinite(self.median_pandemic_day)


def run_ensemble(
    world: World,
    disease: DiseaseModel,
    seed_airport: str,
    runs: int = 20,
    max_days: int = 365,
    base_rng_seed: int = 0,
    threshold: float = 1.0,
    criterion: tuple[str, int] = ("regions", 3),
    stop_at_pandemic: bool = False,
    seed_fraction: float = 0.10,
    workers: int = 1,
) -> EnsembleSummary:
    """Independent replicate runs from one seed airport.

    Each run draws from a stream derived from (base seed, airport, run
    index), so the summary is bit-identical for a given base seed no matter
    how runs are scheduled.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    seeded = seed_outbreak(world, seed_airport, disease, fraction=seed_fraction)
    args = [
        (seeded, disease, base_rng_seed, seed_airport, run, max_days, threshold, criterion, stop_at_pandemic)
        for run in range(runs)
    ]
    if workers <= 1:
        results = [_one_run(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_run, args))
    pandemic_days = tuple(r[0] for r in results)
    peak_days = tuple(r[1] for r in results)
    as_float = [float(d) if d is not None else math.inf for d in pandemic_days]
    return EnsembleSummary(
        seed_airport=seed_airport,
        pandemic_days=pandemic_days,
        peak_days=peak_days,
        median_pandemic_day=lower_median(as_float),
        median_peak_day=lower_median([float(d) for d in peak_days]),
    )


def _one_run(args) -> tuple[int | None, int]:
    seeded, disease, base_seed, airport, run, max_days, threshold, criterion, stop_at_pandemic = args
    outcome = simulate(
        seeded,
        disease,
        run_rng(base_seed, airport, run),
        max_days=max_days,
        threshold=threshold,
        criterion=criterion,
        stop_at_pandemic=stop_at_pandemic,
    )
    return outcome.pandemic_day, outcome.peak_day


# -- Reed-Frost branching baseline ---------------------------------------

def reed_frost_fixed_point(r0: float) -> float:
    """Extinction probability: smallest root of x = exp(-r0 (1 - x)) in [0, 1].

    Subcritical and critical processes (r0 <= 1) always die out, so the
    root is 1. Bisection to 1e-10 otherwise.
    """
    if r0 <= 0:
        raise ValueError("r0 must be positive")
    if r0 <= 1.0:
        return 1.0
    lo, hi = 0.0, 1.0  # f(lo) < 0; f just below 1 is > 0 for r0 > 1
    f = lambda x: x - math.exp(-r0 * (1.0 - x))
    while hi - lo > 1e-10:
        mid = (lo + hi) / 2.0
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def reed_frost_simulate(
    r0: float,
    population: int,
    trials: int,
    rng: np.random.Generator,
    major_threshold: float = 0.10,
) -> float:
    """Fraction of Reed-Frost outbreaks that turn major.

    Discrete generations from one initial infective:
    I' ~ Binomial(S, 1 - (1 - r0/N)^I), S' = S - I'. A trial is major when
    the final attack fraction reaches ``major_threshold``.
    """
    if population < 100:
        raise ValueError("population must be >= 100")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if r0 < 0:
        raise ValueError("r0 must be non-negative")
    base = max(0.0, 1.0 - r0 / population)
    S = np.full(trials, population - 1, dtype=np.int64)
    I = np.ones(trials, dtype=np.int64)
    while True:
        active = I > 0
        if not active.any():
            break
        p = 1.0 - base ** I[active]
        new_i = rng.binomial(S[active], p)
        S[active] -= new_i
        new_I = np.zeros_like(I)
        new_I[active] = new_i
        I = new_I
    attack = (population - S) / population
    return float((attack >= major_threshold).mean())
