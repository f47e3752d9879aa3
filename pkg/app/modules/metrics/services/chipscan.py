"""
Chip-scan benchmark: identify many connected subsets of a large lattice and
aggregate the deviations per site and per coupler.

Dependencies: numpy, networkx, joblib
"""

import logging
from typing import Callable, Optional, Sequence

import networkx as nx
import numpy as np
from joblib import Parallel, delayed

from app.modules.core.config import settings
from app.modules.core.errors import CoverageError, IdentificationError
from app.modules.identification.services.identification import identify
from app.modules.lattice.schemas.lattice import (
    HamiltonianParams,
    LatticeGeometry,
    SpamMap,
    SubGeometry,
)
from app.modules.lattice.services.lattice import build_harper, eig_symmetric
from app.modules.metrics.schemas.chipscan import (
    ChipScanConfig,
    ChipScanReport,
    ElementSummary,
    ScanFailure,
)
from app.modules.metrics.services.metrics import analog_accuracy
from app.modules.simulator.schemas.simulator import RampModelConfig
from app.modules.simulator.services.ramp import draw_idle_detunings, simulate_ramp_map
from app.modules.simulator.services.simulator import (
    random_invertible_map,
    sample_shots,
    simulate_exact,
)

logger = logging.getLogger(__name__)

Edge = tuple[int, int]


def induced_subgeometry(geometry: LatticeGeometry, sites: Sequence[int]) -> SubGeometry:
    """Sub-lattice on ``sites`` (sorted) with every parent edge between them."""
    ordered = tuple(sorted(int(s) for s in sites))
    local = {site: k for k, site in enumerate(ordered)}
    edges = [(local[i], local[j]) for i, j in geometry.edges if i in local and j in local]
    return SubGeometry(
        sites=ordered,
        geometry=LatticeGeometry(num_sites=len(ordered), edges=edges),
    )


def _grow(graph: nx.Graph, seed_sites: list[int], size: int, rng: np.random.Generator) -> list[int]:
    chosen = list(seed_sites)
    frontier = set()
    for site in chosen:
        frontier.update(graph.neighbors(site))
    frontier.difference_update(chosen)
    while len(chosen) < size and frontier:
        candidates = sorted(frontier)
        pick = candidates[int(rng.integers(len(candidates)))]
        chosen.append(pick)
        frontier.update(graph.neighbors(pick))
        frontier.difference_update(chosen)
    return chosen


def sample_connected_subsets(
    geometry: LatticeGeometry,
    subset_size: int,
    min_coverage: int,
    rng_seed: int = 0,
    accept: Optional[Callable[[SubGeometry], bool]] = None,
    max_iterations: int = 10000,
) -> list[SubGeometry]:
    """
    Grow random connected induced subgraphs until every site and edge
    appears in at least ``min_coverage`` subsets.

    Each subset starts from a randomly chosen under-covered edge (or site,
    once all edges are covered) and grows by random frontier selection.

    Raises:
        CoverageError: coverage unreachable within ``max_iterations`` attempts
    """
    graph = geometry.to_graph()
    rng = np.random.default_rng(rng_seed)
    site_cover = np.zeros(geometry.num_sites, dtype=int)
    edge_cover = {edge: 0 for edge in geometry.edges}

    def coverage() -> dict:
        cover = {f"Q{i + 1}": int(c) for i, c in enumerate(site_cover)}
        cover.update({f"C{i + 1}-{j + 1}": c for (i, j), c in edge_cover.items()})
        return cover

    largest = max((len(c) for c in nx.connected_components(graph)), default=0)
    if subset_size > largest or (subset_size < 2 and geometry.edges):
        raise CoverageError(
            f"No connected subset of size {subset_size} covers every element", coverage()
        )

    subsets: list[SubGeometry] = []
    for _ in range(max_iterations):
        pending_edges = [e for e, c in edge_cover.items() if c < min_coverage]
        pending_sites = np.flatnonzero(site_cover < min_coverage)
        if not pending_edges and pending_sites.size == 0:
            logger.info("%d subsets cover every element %d times", len(subsets), min_coverage)
            return subsets

        if pending_edges:
            i, j = pending_edges[int(rng.integers(len(pending_edges)))]
            seed_sites = [i, j] if subset_size >= 2 else [i]
        else:
            seed_sites = [int(pending_sites[int(rng.integers(pending_sites.size))])]

        chosen = _grow(graph, seed_sites, subset_size, rng)
        if len(chosen) < subset_size:
            continue
        subset = induced_subgeometry(geometry, chosen)
        if accept is not None and not accept(subset):
            continue

        subsets.append(subset)
        site_cover[list(subset.sites)] += 1
        for edge in subset.geometry.edges:
            edge_cover[subset.parent_edge(edge)] += 1

    raise CoverageError(
        f"Coverage {min_coverage} not reached after {max_iterations} attempts", coverage()
    )


def _harper_targets(subset: SubGeometry, b_values: Sequence[float], cfg: ChipScanConfig):
    n = len(subset.sites)
    return [
        build_harper(n, b, cfg.coupling_mhz, subset.geometry, amplitude_mhz=cfg.amplitude_mhz)
        for b in b_values
    ]


def _spam_maps(target: HamiltonianParams, mode: str, rng: np.random.Generator):
    n = target.n
    if mode == "random":
        phases = rng.uniform(-np.pi, np.pi, size=n)
        return random_invertible_map(n, rng), np.diag(np.exp(1j * phases))
    if mode == "ramp-model":
        ramp = RampModelConfig(idle_matrix=draw_idle_detunings(n, rng))
        return (
            simulate_ramp_map(target, ramp, "in"),
            simulate_ramp_map(target, ramp, "out").matrix,
        )
    return SpamMap.identity(n), np.eye(n)


def _scan_run(subset: SubGeometry, b: float, cfg: ChipScanConfig, seed: np.random.SeedSequence):
    rng = np.random.default_rng(seed)
    n = len(subset.sites)
    target = build_harper(n, b, cfg.coupling_mhz, subset.geometry, amplitude_mhz=cfg.amplitude_mhz)

    bias = np.array([cfg.faults.detuning_bias_mhz.get(s, 0.0) for s in subset.sites])
    device = HamiltonianParams(matrix=target.matrix + np.diag(bias), geometry=subset.geometry)
    initial_map, final_map = _spam_maps(device, cfg.spam_mode, rng)
    fault_phases = np.array([cfg.faults.final_phase_rad.get(s, 0.0) for s in subset.sites])
    final_map = np.diag(np.exp(1j * fault_phases)) @ final_map

    exact = simulate_exact(device, initial_map, SpamMap(matrix=final_map), cfg.grid)
    noise = cfg.noise.model_copy(update={"rng_seed": int(rng.integers(2**63 - 1))})
    data = sample_shots(exact, noise)
    try:
        result = identify(data, subset.geometry, target, cfg.pipeline)
    except IdentificationError as exc:
        return ScanFailure(subset=subset.sites, b=b, stage=exc.stage, message=str(exc))
    return (
        np.abs(result.hamiltonian - target.matrix),
        analog_accuracy(result.initial_map, np.eye(n)),
        result.sign_flips,
        result.leakage.norm,
    )


def _median(values: list[float]) -> Optional[float]:
    return float(np.median(values)) if values else None


def chip_scan(
    geometry: LatticeGeometry,
    b_values: Sequence[float] = (0.0, 0.5),
    cfg: Optional[ChipScanConfig] = None,
) -> ChipScanReport:
    """
    Identify every (subset, b) pair and aggregate per element.

    Diagonal deviations go to sites, declared-edge deviations to couplers,
    E_analog(Ŝ, 1) to every involved site and final-map phases beyond π/2
    to sign-flip events. Failed runs are listed and excluded.
    """
    cfg = cfg or ChipScanConfig()
    b_values = tuple(float(b) for b in b_values)

    def well_separated(subset: SubGeometry) -> bool:
        return all(
            eig_symmetric(t)[0].min_gap() >= cfg.min_gap_mhz
            for t in _harper_targets(subset, b_values, cfg)
        )

    subsets = sample_connected_subsets(
        geometry,
        cfg.subset_size,
        cfg.min_coverage,
        rng_seed=cfg.rng_seed,
        accept=well_separated,
        max_iterations=cfg.max_iterations,
    )
    jobs = [(subset, b) for subset in subsets for b in b_values]
    seeds = np.random.SeedSequence(cfg.rng_seed).spawn(len(jobs))
    workers = cfg.n_jobs if cfg.n_jobs is not None else settings.n_jobs
    outcomes = Parallel(n_jobs=workers)(
        delayed(_scan_run)(subset, b, cfg, seed) for (subset, b), seed in zip(jobs, seeds)
    )

    site_dev = {s: [] for s in range(geometry.num_sites)}
    site_map = {s: [] for s in range(geometry.num_sites)}
    site_flip = {s: [] for s in range(geometry.num_sites)}
    edge_dev: dict[Edge, list[float]] = {e: [] for e in geometry.edges}
    failures, leakages = [], []

    for (subset, _), outcome in zip(jobs, outcomes):
        if isinstance(outcome, ScanFailure):
            failures.append(outcome)
            continue
        deviation, map_accuracy, flips, leak = outcome
        leakages.append(leak)
        for k, site in enumerate(subset.sites):
            site_dev[site].append(float(deviation[k, k]))
            site_map[site].append(map_accuracy)
            site_flip[site].append(float(flips[k]))
        for i, j in subset.geometry.edges:
            edge_dev[subset.parent_edge((i, j))].append(float(deviation[i, j]))

    if failures:
        logger.warning("%d of %d scan runs failed", len(failures), len(jobs))

    qubits = tuple(
        ElementSummary(
            element_id=f"Q{s + 1}",
            kind="qubit",
            sites=(s,),
            median_deviation_mhz=_median(site_dev[s]),
            s_median=_median(site_map[s]),
            signflip_mean=float(np.mean(site_flip[s])) if site_flip[s] else None,
            coverage=len(site_dev[s]),
        )
        for s in range(geometry.num_sites)
    )
    couplers = tuple(
        ElementSummary(
            element_id=f"C{i + 1}-{j + 1}",
            kind="coupler",
            sites=(i, j),
            median_deviation_mhz=_median(edge_dev[(i, j)]),
            coverage=len(edge_dev[(i, j)]),
        )
        for i, j in geometry.edges
    )
    required = cfg.min_coverage * len(b_values)
    complete = all(e.coverage >= required for e in qubits + couplers)
    return ChipScanReport(
        qubits=qubits,
        couplers=couplers,
        subsets=tuple(s.sites for s in subsets),
        b_values=b_values,
        failures=tuple(failures),
        leakage_median_mhz=_median(leakages),
        complete=complete,
    )
