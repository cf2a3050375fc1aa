"""Acceptance suite: one test per shipping criterion.

Each test prints a [PASS]/[FAIL]/[SKIP] line through the conftest hook.
Criteria 8, 9 and (preferably) 11 run against a real OpenFlights snapshot;
point AEFKIT_OPENFLIGHTS_DIR at a directory holding airports.dat and
routes.dat (or drop them into ./data) to enable them. Without the
snapshot, 8 and 9 skip and 11 falls back to a synthetic network of the
same scale.
"""

import math
import os
import time
from pathlib import Path

import numpy as np
import pytest
import scipy.stats

from aefkit import centrality, episim, exf, experiments, stats, wan
from conftest import make_graph, random_connected_graph
from oracles import brute_force_aef

# Frozen fixture for the simulation studies (criteria 5 and 6): scale-free
# 200-airport network, uniform metro-sized populations so outcomes reflect
# connectivity rather than seed-city size, and a prevalence threshold inside
# the protocol's stated invariance band. The sweep horizon is the desk-scale
# stand-in for "pandemically competent".
SYNTH_N = 200
SYNTH_SEED = 42
UNIFORM_POP = 8_000_000
PREV_THRESHOLD = 20.0
SWEEP_HORIZON = 150
BETA_GRID = [round(0.40 + 0.01 * i, 2) for i in range(11)]

TABLE1_AEF = {
    "SMK": 3,
    "YFS": 16,
    "GTE": 27,
    "SBH": 31,
    "PVH": 40,
    "BIS": 51,
    "BES": 62,
    "XRY": 70,
    "NRT": 85,
    "IST": 98,
}


def _openflights_dir() -> Path | None:
    candidates = []
    if os.environ.get("AEFKIT_OPENFLIGHTS_DIR"):
        candidates.append(Path(os.environ["AEFKIT_OPENFLIGHTS_DIR"]))
    candidates.append(Path(__file__).resolve().parent.parent / "data")
    for base in candidates:
        if (base / "airports.dat").is_file() and (base / "routes.dat").is_file():
            return base
    return None


SNAPSHOT_SKIP = (
    "requires an OpenFlights snapshot: set AEFKIT_OPENFLIGHTS_DIR or place "
    "airports.dat and routes.dat in ./data"
)


@pytest.fixture(scope="session")
def real_wan():
    base = _openflights_dir()
    if base is None:
        pytest.skip(SNAPSHOT_SKIP)
    with open(base / "airports.dat", encoding="utf-8") as fh:
        airports = wan.parse_airports(fh)
    with open(base / "routes.dat", encoding="utf-8") as fh:
        routes = wan.parse_routes(fh, airports)
    return wan.build_network(airports, routes, wan.SeatTable.bundled())


@pytest.fixture(scope="session")
def synth_world():
    graph = wan.synthetic_network(SYNTH_N, SYNTH_SEED)
    populations = {iata: UNIFORM_POP for iata in graph.iatas}
    world = episim.build_world(graph, populations=populations, regions=wan.synthetic_regions())
    scores = exf.all_aef(graph)
    return graph, world, scores


def test_criterion_01_aef_matches_brute_force_oracle():
    """>= 1000 random graphs (<= 6 nodes, integer weights 1..10) to 1e-9."""
    rng = np.random.default_rng(20140901)
    start = time.time()
    worst = 0.0
    checked = 0
    for _ in range(1000):
        graph = random_connected_graph(rng, max_nodes=6, max_weight=10)
        for seed in graph.iatas:
            got = exf.expected_force(graph, seed)
            want = brute_force_aef(graph, seed)
            worst = max(worst, abs(got - want))
            checked += 1
    elapsed = time.time() - start
    print(f"\n  checked {checked} seeds over 1000 graphs; max |diff| = {worst:.2e}; {elapsed:.1f}s")
    assert worst <= 1e-9
    assert elapsed < 60.0


def test_criterion_02_closed_form_checks(k4, path3):
    assert abs(exf.expected_force(k4, "AAA") - math.log(12)) <= 1e-12
    assert exf.expected_force(path3, "AAA") == 0.0
    rng = np.random.default_rng(2)
    graphs = [k4, path3] + [random_connected_graph(rng) for _ in range(200)]
    for graph in graphs:
        for seed in graph.iatas:
            patterns = exf.enumerate_patterns(graph, seed)
            if patterns:
                assert abs(sum(p.probability for p in patterns) - 1.0) <= 1e-12


def test_criterion_03_reed_frost_major_outbreak_fractions():
    start = time.time()
    rng = np.random.default_rng(3)
    for r0 in (1.5, 2.0, 3.0):
        expected = 1.0 - episim.reed_frost_fixed_point(r0)
        observed = episim.reed_frost_simulate(r0, 10_000, 10_000, rng)
        print(f"\n  r0={r0}: observed {observed:.4f}, analytic {expected:.4f}")
        assert observed == pytest.approx(expected, abs=0.02)
    assert time.time() - start < 120.0


def test_criterion_04_simulator_conservation():
    graph = wan.synthetic_network(50, 7)
    world = episim.build_world(graph, regions=wan.synthetic_regions())
    disease = episim.DiseaseModel.simple_seir(0.5)
    seeded = episim.seed_outbreak(world, graph.iatas[0], disease)
    total = seeded.total_population()
    for run in range(20):
        current = seeded
        rng = episim.run_rng(4, graph.iatas[0], run)
        for _ in range(365):
            current = episim.step_day(current, disease, rng)
            assert current.total_population() == total
            per_airport = (
                current.S
                + current.E
                + current.I_asym
                + current.I_sym_t
                + current.I_sym_nt
                + current.R
            )
            assert (per_airport == current.N).all()
            assert int(current.I_asym.sum()) == 0
            assert int(current.I_sym_nt.sum()) == 0


def test_criterion_05_invasion_monotonicity_and_threshold_correlation(synth_world):
    graph, world, scores = synth_world
    start = time.time()

    # (a) paired ensemble pandemic frequencies at the grid's endpoints,
    # compared on the lowest-AEF decile seed where outcomes actually vary
    selection = experiments.select_decile_seeds(scores, np.random.default_rng(0))
    probe = selection.seeds[0]
    wins = 0
    for comparison in range(20):
        freq = {}
        for beta in (0.40, 0.50):
            summary = episim.run_ensemble(
                world,
                episim.DiseaseModel.simple_seir(beta),
                probe,
                runs=20,
                max_days=SWEEP_HORIZON,
                base_rng_seed=1000 + comparison,
                threshold=PREV_THRESHOLD,
                stop_at_pandemic=True,
            )
            freq[beta] = sum(1 for d in summary.pandemic_days if d is not None) / 20
        wins += freq[0.50] >= freq[0.40]
    print(f"\n  paired comparisons won: {wins}/20 (probe seed {probe})")
    assert wins >= 19

    # (b) minimal pandemic rate across the ten decile seeds
    report = experiments.invasion_threshold_sweep(
        world,
        selection.seeds,
        BETA_GRID,
        runs=20,
        base_rng_seed=7,
        max_days=SWEEP_HORIZON,
        threshold=PREV_THRESHOLD,
    )
    qualifying = [s for s in selection.seeds if report.minimal_beta[s] is not None]
    xs = [scores[s].normalized for s in qualifying]
    ys = [report.minimal_beta[s] for s in qualifying]
    result = stats.pearson_ci(xs, ys)
    elapsed = time.time() - start
    print(f"  r(AEF, minimal beta) = {result.r:.3f} over {len(xs)} seeds "
          f"({len(selection.seeds) - len(xs)} never pandemic); {elapsed:.0f}s")
    assert result.r <= -0.5
    assert elapsed < 1800.0


def test_criterion_06_time_to_pandemic_correlations(synth_world):
    graph, world, scores = synth_world
    start = time.time()
    seeds = experiments.select_range_covering_seeds(scores, count=100)
    measures = {
        "aef": {k: v.normalized for k, v in scores.items()},
        "betweenness": centrality.betweenness_centrality(graph),
    }
    report = experiments.time_to_pandemic_study(
        world,
        seeds,
        episim.DiseaseModel.influenza_2009(),
        measures,
        runs=20,
        base_rng_seed=11,
        max_days=365,
        threshold=PREV_THRESHOLD,
    )
    elapsed = time.time() - start
    aef_peak = report.correlation("aef", "peak_day")["r"]
    for outcome in ("pandemic_day", "peak_day"):
        r_aef = report.correlation("aef", outcome)["r"]
        r_btw = report.correlation("betweenness", outcome)["r"]
        print(f"\n  {outcome}: r(aef) = {r_aef:.3f}, r(betweenness) = {r_btw:.3f}")
        assert abs(r_aef) > abs(r_btw)
    print(f"  excluded seeds: {list(report.excluded)}; {elapsed:.0f}s")
    assert aef_peak <= -0.5
    assert elapsed < 3600.0


def test_criterion_07_fisher_ci_halfwidth():
    lo, hi = stats.fisher_interval(-0.84, 100)
    halfwidth = (hi - lo) / 2
    print(f"\n  halfwidth = {halfwidth:.4f}")
    assert halfwidth == pytest.approx(0.06, abs=0.005)


def test_criterion_08_robustness_on_real_snapshot(real_wan):
    start = time.time()
    report = experiments.robustness_study(
        real_wan,
        fractions=[0.15],
        schemes=("uniform",),
        repeats=10,
        country="United States",
        base_rng_seed=8,
    )
    (row,) = report.rows
    unchanged = 1.0 - row["share_other_changed_1pct"]
    elapsed = time.time() - start
    print(f"\n  non-U.S. airports with <= 1% raw-AEF change: {unchanged:.1%}; {elapsed:.0f}s")
    assert unchanged >= 0.90
    assert elapsed < 1200.0


def test_criterion_09_table1_rank_agreement(real_wan):
    scores = exf.all_aef(real_wan)
    present = [iata for iata in TABLE1_AEF if iata in real_wan]
    if len(present) < 4:
        pytest.skip(f"only {len(present)} of the ten reference airports in snapshot")
    computed = [scores[iata].normalized for iata in present]
    reference = [TABLE1_AEF[iata] for iata in present]
    rho = scipy.stats.spearmanr(computed, reference).statistic
    print(f"\n  Spearman rho = {rho:.3f} over {len(present)} airports")
    assert rho >= 0.9


def test_criterion_10_shapiro_calibration():
    rng = np.random.default_rng(10)
    normal_ok = sum(
        stats.shapiro_wilk(rng.normal(size=100))[1] > 0.05 for _ in range(1000)
    )
    share = normal_ok / 1000
    exp_reject = sum(
        stats.shapiro_wilk(rng.exponential(size=100))[1] < 0.05 for _ in range(1000)
    )
    power = exp_reject / 1000
    print(f"\n  normal p>0.05: {share:.1%}; exponential p<0.05: {power:.1%}")
    assert share == pytest.approx(0.95, abs=0.03)
    assert power >= 0.95


def test_criterion_11_scale_performance(request):
    base = _openflights_dir()
    if base is not None:
        graph = request.getfixturevalue("real_wan")
        label = "real OpenFlights snapshot"
    else:
        graph = wan.synthetic_network(3458, 20140901, m=5)
        label = "synthetic surrogate at WAN scale (snapshot unavailable)"
    start = time.time()
    exf.all_aef(graph)
    aef_time = time.time() - start
    start = time.time()
    centrality.betweenness_centrality(graph, weighted=False)
    centrality.betweenness_centrality(graph, weighted=True)
    betweenness_time = time.time() - start
    print(
        f"\n  {label}: {graph.n_nodes} nodes / {graph.n_edges} edges; "
        f"all_aef {aef_time:.1f}s, exact betweenness (both variants) {betweenness_time:.0f}s"
    )
    assert aef_time < 60.0
    assert betweenness_time < 600.0
