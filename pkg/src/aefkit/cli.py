"""Command-line entry point: graph building, scoring, simulation, studies.

One binary, subcommand style. Options can come from a JSON config file
(``--config``); explicit flags win over config values. Every output
directory gets a provenance record (effective config, seed, tool version,
input digests) so a run can be reproduced byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, centrality, episim, experiments, exf, wan

DEFAULTS = {
    "beta": 0.4,
    "epsilon": 1.0 / 1.1,
    "mu": 1.0 / 2.5,
    "p_asym": 0.0,
    "r_beta": 0.5,
    "p_travel_sym": 1.0,
    "rho": 0.7,
    "threshold_per_100k": 1.0,
    "criterion": "regions:3",
    "runs": 20,
    "max_days": 365,
    "rng_seed": 0,
    "seed_fraction": 0.10,
}

FULL_MODEL_DEFAULTS = {"beta": 0.8383, "p_asym": 0.33, "r_beta": 0.5, "p_travel_sym": 0.5}


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _parse_grid(spec: str) -> list[float]:
    """``start:stop:step`` inclusive grid, or a comma-separated list."""
    if ":" in spec:
        start, stop, step = (float(p) for p in spec.split(":"))
        if step <= 0 or stop < start:
            raise ValueError(f"bad grid {spec!r}")
        count = int(round((stop - start) / step)) + 1
        return [round(start + i * step, 10) for i in range(count)]
    return [float(p) for p in spec.split(",")]


def _parse_criterion(spec) -> tuple[str, int]:
    if isinstance(spec, dict):
        (kind, value), = spec.items()
        return str(kind), int(value)
    kind, _, value = str(spec).partition(":")
    return kind, int(value or 3)


class Command:
    """Shared plumbing: config merge, provenance, output bookkeeping."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.inputs: dict[str, str] = {}
        self.written: list[str] = []
        self.config = dict(DEFAULTS)
        if getattr(args, "config", None):
            with open(args.config, encoding="utf-8") as fh:
                self.config.update(json.load(fh))
            self.track_input(args.config)
        for key in self.config:
            flag = getattr(args, key, None)
            if flag is not None:
                self.config[key] = flag

    def track_input(self, path) -> None:
        self.inputs[str(path)] = _sha256(path)

    def load_graph(self) -> wan.WanGraph:
        graph = wan.load_bundle(self.args.graph)
        self.track_input(self.args.graph)
        return graph

    def disease(self, full_model: bool = False) -> episim.DiseaseModel:
        cfg = dict(self.config)
        if full_model:
            for key, value in FULL_MODEL_DEFAULTS.items():
                if getattr(self.args, key, None) is None and key not in self._config_file_keys():
                    cfg[key] = value
        return episim.DiseaseModel(
            beta=float(cfg["beta"]),
            epsilon=float(cfg["epsilon"]),
            mu=float(cfg["mu"]),
            p_asym=float(cfg["p_asym"]),
            r_beta=float(cfg["r_beta"]),
            p_travel_sym=float(cfg["p_travel_sym"]),
        )

    def _config_file_keys(self) -> set[str]:
        if getattr(self.args, "config", None):
            with open(self.args.config, encoding="utf-8") as fh:
                return set(json.load(fh))
        return set()

    def build_world(self, graph: wan.WanGraph) -> episim.World:
        populations = None
        if getattr(self.args, "populations", None):
            populations = episim.load_populations(self.args.populations)
            self.track_input(self.args.populations)
        regions = None
        if getattr(self.args, "regions", None):
            regions = episim.load_regions(self.args.regions)
            self.track_input(self.args.regions)
        return episim.build_world(graph, populations=populations, regions=regions, rho=float(self.config["rho"]))

    def write_json(self, name: str, payload) -> None:
        path = self.out / name
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")
        self.written.append(name)

    def write_csv(self, name: str, header: list[str], rows) -> None:
        path = self.out / name
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        self.written.append(name)

    def finish(self, command: str) -> int:
        provenance = {
            "tool": "aefkit",
            "version": __version__,
            "command": command,
            "config": {k: self.config[k] for k in sorted(self.config)},
            "rng_seed": self.config["rng_seed"],
            "inputs": self.inputs,
            "outputs": sorted(self.written),
        }
        self.write_json("provenance.json", provenance)
        for name in self.written:
            print(f"wrote {self.out / name}")
        return 0


def cmd_build_graph(args) -> int:
    cmd = Command(args)
    if args.synthetic:
        n, _, seed = args.synthetic.partition(":")
        graph = wan.synthetic_network(int(n), int(seed or 0))
        parse_summary = {"synthetic": True}
    else:
        if not args.airports or not args.routes:
            print("build-graph needs --airports and --routes (or --synthetic)", file=sys.stderr)
            return 2
        with open(args.airports, encoding="utf-8") as fh:
            airports = wan.parse_airports(fh)
        cmd.track_input(args.airports)
        with open(args.routes, encoding="utf-8") as fh:
            routes = wan.parse_routes(fh, airports)
        cmd.track_input(args.routes)
        if args.seats:
            with open(args.seats, encoding="utf-8") as fh:
                seats = wan.SeatTable.from_tsv(fh, default_capacity=args.default_capacity)
            cmd.track_input(args.seats)
        else:
            seats = wan.SeatTable.bundled(default_capacity=args.default_capacity)
        graph = wan.build_network(airports, routes, seats)
        parse_summary = {
            "airports_parsed": len(airports.records),
            "airports_skipped_no_iata": airports.skipped,
            "airport_diagnostics": len(airports.diagnostics),
            "routes_parsed": len(routes.records),
            "routes_dropped_unresolvable": routes.dropped,
            "route_diagnostics": len(routes.diagnostics),
        }
    wan.save_bundle(graph, cmd.out / "graph.json")
    cmd.written.append("graph.json")
    wan.save_edgelist_csv(graph, cmd.out / "edges.csv")
    cmd.written.append("edges.csv")
    summary = {"nodes": graph.n_nodes, "edges": graph.n_edges, **parse_summary, **graph.meta}
    cmd.write_json("summary.json", summary)
    print(f"graph: {graph.n_nodes} airports, {graph.n_edges} edges")
    return cmd.finish("build-graph")


def cmd_scores(args) -> int:
    cmd = Command(args)
    graph = cmd.load_graph()
    workers = args.workers or 1
    scores = exf.all_aef(graph, workers=workers)
    only = set(args.iata.upper().split(",")) if args.iata else None

    if args.aef_only:
        header = ["iata", "raw_aef", "aef"]
        rows = [
            [iata, f"{scores[iata].raw_entropy:.12g}", f"{scores[iata].normalized:.6f}"]
            for iata in graph.iatas
            if only is None or iata in only
        ]
        cmd.write_csv("scores.csv", header, rows)
    else:
        report = centrality.full_report(graph, workers=workers)
        header = ["iata", "raw_aef", "aef", *centrality.CentralityReport.COLUMNS]
        rows = []
        for iata in graph.iatas:
            if only is not None and iata not in only:
                continue
            rows.append(
                [
                    iata,
                    f"{scores[iata].raw_entropy:.12g}",
                    f"{scores[iata].normalized:.6f}",
                    *(f"{v:.12g}" if isinstance(v, float) else v for v in report.row(iata)),
                ]
            )
        cmd.write_csv("scores.csv", header, rows)
    payload = {
        iata: {
            "raw_aef": scores[iata].raw_entropy,
            "aef": scores[iata].normalized,
            "degenerate": scores[iata].degenerate,
        }
        for iata in graph.iatas
        if only is None or iata in only
    }
    cmd.write_json("scores.json", payload)
    return cmd.finish("scores")


def cmd_simulate(args) -> int:
    cmd = Command(args)
    graph = cmd.load_graph()
    world = cmd.build_world(graph)
    disease = cmd.disease(full_model=args.full_model)
    criterion = _parse_criterion(cmd.config["criterion"])
    summary = episim.run_ensemble(
        world,
        disease,
        args.seed_airport.upper(),
        runs=int(cmd.config["runs"]),
        max_days=int(cmd.config["max_days"]),
        base_rng_seed=int(cmd.config["rng_seed"]),
        threshold=float(cmd.config["threshold_per_100k"]),
        criterion=criterion,
        seed_fraction=float(cmd.config["seed_fraction"]),
        workers=args.workers or 1,
    )
    cmd.write_csv(
        "runs.csv",
        ["run", "pandemic_day", "peak_day"],
        [
            [i, "" if p is None else p, k]
            for i, (p, k) in enumerate(zip(summary.pandemic_days, summary.peak_days))
        ],
    )
    # Representative daily series: replay run 0's stream.
    seeded = episim.seed_outbreak(world, args.seed_airport.upper(), disease, float(cmd.config["seed_fraction"]))
    outcome = episim.simulate(
        seeded,
        disease,
        episim.run_rng(int(cmd.config["rng_seed"]), args.seed_airport.upper(), 0),
        max_days=int(cmd.config["max_days"]),
        threshold=float(cmd.config["threshold_per_100k"]),
        criterion=criterion,
    )
    series_rows = [
        [day + 1, region + 1, f"{outcome.regional_prevalence[day, region]:.6f}"]
        for day in range(outcome.days_run)
        for region in range(episim.REGION_COUNT)
    ]
    cmd.write_csv("series.csv", ["day", "region", "prevalence_per_100k"], series_rows)
    cmd.write_json(
        "ensemble.json",
        {
            "seed_airport": summary.seed_airport,
            "median_pandemic_day": None
            if not summary.is_pandemic
            else summary.median_pandemic_day,
            "median_peak_day": summary.median_peak_day,
            "pandemic_days": [p for p in summary.pandemic_days],
            "peak_days": list(summary.peak_days),
        },
    )
    return cmd.finish("simulate")


def cmd_sweep_beta(args) -> int:
    cmd = Command(args)
    graph = cmd.load_graph()
    world = cmd.build_world(graph)
    betas = _parse_grid(args.betas)
    if args.seeds:
        seeds = [s.strip().upper() for s in args.seeds.split(",")]
        notes = ()
    else:
        scores = exf.all_aef(graph, workers=args.workers or 1)
        rng = np.random.default_rng(np.random.SeedSequence([int(cmd.config["rng_seed"]), 0xDEC11E]))
        selection = experiments.select_decile_seeds(scores, rng)
        seeds, notes = list(selection.seeds), selection.notes
    report = experiments.invasion_threshold_sweep(
        world,
        seeds,
        betas,
        runs=int(cmd.config["runs"]),
        base_rng_seed=int(cmd.config["rng_seed"]),
        max_days=int(cmd.config["max_days"]),
        threshold=float(cmd.config["threshold_per_100k"]),
        criterion=_parse_criterion(cmd.config["criterion"]),
        disease_base=cmd.disease(),
        workers=args.workers or 1,
    )
    payload = report.to_json()
    payload["seed_selection_notes"] = list(notes)
    cmd.write_json("report.json", payload)
    cmd.write_csv(
        "sweep.csv",
        ["seed", "beta", "pandemic", "median_pandemic_day"],
        [
            [r["seed"], r["beta"], int(r["pandemic"]), "" if r["median_pandemic_day"] is None else r["median_pandemic_day"]]
            for r in report.rows
        ],
    )
    cmd.write_csv(
        "minimal_beta.csv",
        ["seed", "minimal_beta"],
        [[seed, "" if b is None else b] for seed, b in report.minimal_beta.items()],
    )
    return cmd.finish("sweep-beta")


def cmd_time_to_pandemic(args) -> int:
    cmd = Command(args)
    graph = cmd.load_graph()
    world = cmd.build_world(graph)
    workers = args.workers or 1
    scores = exf.all_aef(graph, workers=workers)
    seeds = experiments.select_range_covering_seeds(scores, count=args.seed_count)
    report_measures = centrality.full_report(graph, workers=workers)
    measures = {"aef": {k: v.normalized for k, v in scores.items()}}
    for name in centrality.CentralityReport.COLUMNS:
        measures[name] = getattr(report_measures, name)
    report = experiments.time_to_pandemic_study(
        world,
        seeds,
        cmd.disease(full_model=True),
        measures,
        runs=int(cmd.config["runs"]),
        base_rng_seed=int(cmd.config["rng_seed"]),
        max_days=int(cmd.config["max_days"]),
        threshold=float(cmd.config["threshold_per_100k"]),
        criterion=_parse_criterion(cmd.config["criterion"]),
        workers=workers,
    )
    cmd.write_json("report.json", report.to_json())
    cmd.write_csv(
        "outcomes.csv",
        ["seed", "median_pandemic_day", "median_peak_day"],
        [
            [r["seed"], r["median_pandemic_day"], r["median_peak_day"]]
            for r in report.rows
        ],
    )
    cmd.write_csv(
        "correlations.csv",
        ["measure", "outcome", "r", "ci_low", "ci_high", "n"],
        [
            [c["measure"], c["outcome"], c.get("r"), c.get("ci_low"), c.get("ci_high"), c["n"]]
            for c in report.correlations
        ],
    )
    return cmd.finish("time-to-pandemic")


def cmd_robustness(args) -> int:
    cmd = Command(args)
    graph = cmd.load_graph()
    fractions = _parse_grid(args.fractions)
    report = experiments.robustness_study(
        graph,
        fractions,
        schemes=tuple(args.schemes.split(",")),
        repeats=args.repeats,
        country=args.country,
        base_rng_seed=int(cmd.config["rng_seed"]),
        workers=args.workers or 1,
    )
    cmd.write_json("report.json", report.to_json())
    cmd.write_csv(
        "robustness.csv",
        [
            "fraction",
            "scheme",
            "share_subset_changed_1pct",
            "share_subset_changed_5pct",
            "share_other_changed_1pct",
            "share_other_changed_5pct",
        ],
        [
            [
                r["fraction"],
                r["scheme"],
                f"{r['share_subset_changed_1pct']:.6f}",
                f"{r['share_subset_changed_5pct']:.6f}",
                f"{r['share_other_changed_1pct']:.6f}",
                f"{r['share_other_changed_5pct']:.6f}",
            ]
            for r in report.rows
        ],
    )
    return cmd.finish("robustness")


def cmd_branching(args) -> int:
    cmd = Command(args)
    report = experiments.branching_figure(
        _parse_grid(args.r0_grid),
        population=args.population,
        dots_per_r0=args.dots_per_r0,
        trials_per_dot=args.trials_per_dot,
        base_rng_seed=int(cmd.config["rng_seed"]),
    )
    cmd.write_json("report.json", report.to_json())
    cmd.write_csv(
        "branching.csv",
        ["r0", "analytic_major_probability", "dot", "observed_fraction"],
        [
            [row["r0"], f"{row['analytic']:.8f}", dot, fraction]
            for row in report.rows
            for dot, fraction in enumerate(row["fractions"])
        ],
    )
    return cmd.finish("branching")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--rng-seed", dest="rng_seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=os.cpu_count())


def _add_world(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--graph", required=True, help="graph bundle JSON from build-graph")
    parser.add_argument("--populations", help="iata,population CSV (default: traffic-based synthesis)")
    parser.add_argument("--regions", help="country<TAB>region override table")
    parser.add_argument("--rho", type=float, default=None, help="seat occupancy factor")
    parser.add_argument("--runs", type=int, default=None)
    parser.add_argument("--max-days", dest="max_days", type=int, default=None)
    parser.add_argument("--threshold", dest="threshold_per_100k", type=float, default=None)
    parser.add_argument("--criterion", default=None, help="regions:3 or cities:100")
    for key in ("beta", "epsilon", "mu", "p_asym", "r_beta", "p_travel_sym", "seed_fraction"):
        parser.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aefkit",
        description="Expected-force spreading risk on seat-weighted airline networks",
    )
    parser.add_argument("--version", action="version", version=f"aefkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graph", help="parse OpenFlights data into a graph bundle")
    p.add_argument("--airports", help="OpenFlights airports.dat")
    p.add_argument("--routes", help="OpenFlights routes.dat")
    p.add_argument("--seats", help="seat table TSV (code<TAB>seats)")
    p.add_argument("--default-capacity", type=int, default=wan.DEFAULT_SEAT_CAPACITY)
    p.add_argument("--synthetic", metavar="N:SEED", help="emit a synthetic scale-free network instead")
    _add_common(p)
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("scores", help="expected force plus the centrality suite, per airport")
    p.add_argument("--graph", required=True)
    p.add_argument("--iata", help="comma-separated filter of airports to emit")
    p.add_argument("--aef-only", action="store_true", help="skip the slower centrality suite")
    _add_common(p)
    p.set_defaults(func=cmd_scores)

    p = sub.add_parser("simulate", help="ensemble outbreak simulation from one seed airport")
    p.add_argument("--seed-airport", required=True)
    p.add_argument("--full-model", action="store_true", help="three-class influenza-style model defaults")
    _add_world(p)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep-beta", help="invasion threshold sweep over seed airports")
    p.add_argument("--betas", default="0.40:0.50:0.01")
    p.add_argument("--seeds", help="comma-separated seed airports (default: decile selection by AEF)")
    _add_world(p)
    _add_common(p)
    p.set_defaults(func=cmd_sweep_beta)

    p = sub.add_parser("time-to-pandemic", help="days-to-pandemic study with correlation table")
    p.add_argument("--seed-count", type=int, default=100)
    _add_world(p)
    _add_common(p)
    p.set_defaults(func=cmd_time_to_pandemic)

    p = sub.add_parser("robustness", help="score stability under network degradation")
    p.add_argument("--graph", required=True)
    p.add_argument("--fractions", default="0.01:0.15:0.01")
    p.add_argument("--schemes", default="uniform,degree,aef")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--country", default="United States")
    _add_common(p)
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("branching", help="Reed-Frost major-outbreak probability figure data")
    p.add_argument("--r0-grid", default="1.0:3.0:0.1")
    p.add_argument("--population", type=int, default=10_000)
    p.add_argument("--dots-per-r0", dest="dots_per_r0", type=int, default=100)
    p.add_argument("--trials-per-dot", dest="trials_per_dot", type=int, default=100)
    _add_common(p)
    p.set_defaults(func=cmd_branching)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"aefkit {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
