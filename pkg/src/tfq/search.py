"""Genetic search over coarse transfer-function chromosomes.

One master RNG on the coordinator drives every stochastic draw (seeding,
selection, crossover, mutation); workers only render and score, so results
are bit-identical regardless of worker count. The evaluation pipeline per
individual is expand -> smooth -> render -> resample to 64x64 -> metric
cost (lower is better). The globally lowest-cost individual across all
evaluated generations is tracked explicitly and returned.
"""
from __future__ import annotations

import json
import multiprocessing as mp
import time
from dataclasses import dataclass, field

import numpy as np

from .metric.evaluate import metric_evaluate
from .raycast import GrayImage, RenderSettings, render, resample64
from .transfer import (
    NUM_GENES,
    OPACITY_MAX,
    Chromosome,
    DEFAULT_SEED_LEVELS,
    SeedConfig,
    TransferFunction,
    expand,
    seed_population,
    smooth,
)
from .volume import BinnedVolume


class EvaluationError(RuntimeError):
    """A worker failed while evaluating an individual."""


@dataclass
class Individual:
    chromosome: Chromosome
    fitness: float | None = None


@dataclass(frozen=True)
class SearchConfig:
    n_gens: int = 20
    pop_size: int = 600
    p_crossover: float = 0.8
    p_mutate_individual: float = 0.3
    p_mutate_gene: float = 0.05
    tournament_size: int = 3
    workers: int = 1
    rng_seed: int = 0
    seed_levels: tuple[int, ...] = DEFAULT_SEED_LEVELS
    seeded_init: bool = True

    def __post_init__(self) -> None:
        for name in ("p_crossover", "p_mutate_individual", "p_mutate_gene"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} = {p} outside [0, 1]")
        if self.n_gens < 1:
            raise ValueError(f"n_gens must be >= 1, got {self.n_gens}")
        if self.pop_size < self.tournament_size:
            raise ValueError(
                f"pop_size {self.pop_size} < tournament_size {self.tournament_size}"
            )
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass
class RunReport:
    """Per-generation costs plus the tracked global best."""

    generations: list[list[float]]
    best_genes: tuple[int, ...]
    best_cost: float
    best_generation: int
    wall_seconds: float = 0.0

    def normalized(self) -> list[list[float]]:
        """Costs rescaled to [0, 1] by the run-wide min/max (0 if constant)."""
        flat = [c for gen in self.generations for c in gen]
        lo, hi = min(flat), max(flat)
        if hi == lo:
            return [[0.0] * len(gen) for gen in self.generations]
        return [[(c - lo) / (hi - lo) for c in gen] for gen in self.generations]


def tournament_select(
    pop: list[Individual], rng: np.random.Generator, k: int = 3
) -> Individual:
    """Best of k uniform draws (with replacement); ties go to the lowest
    population index."""
    if not pop:
        raise ValueError("empty population")
    picks = rng.integers(0, len(pop), size=k)
    best = None
    for i in picks:
        ind = pop[int(i)]
        if ind.fitness is None:
            raise RuntimeError(f"individual {int(i)} has no fitness")
        if best is None or (ind.fitness, int(i)) < best[:2]:
            best = (ind.fitness, int(i), ind)
    return best[2]


def two_point_crossover(
    a: Chromosome, b: Chromosome, rng: np.random.Generator, p: float = 0.8
) -> tuple[Chromosome, Chromosome]:
    """With probability p, swap genes[lo:hi) between the parents for cut
    points 1 <= lo < hi <= 15; otherwise return unchanged copies."""
    if rng.random() >= p:
        return a, b
    lo = int(rng.integers(1, NUM_GENES))
    hi = int(rng.integers(1, NUM_GENES))
    while hi == lo:
        hi = int(rng.integers(1, NUM_GENES))
    if lo > hi:
        lo, hi = hi, lo
    ga, gb = list(a.genes), list(b.genes)
    ga[lo:hi], gb[lo:hi] = gb[lo:hi], ga[lo:hi]
    return Chromosome(tuple(ga)), Chromosome(tuple(gb))


def mutate(
    c: Chromosome,
    rng: np.random.Generator,
    p_individual: float = 0.3,
    p_gene: float = 0.05,
) -> Chromosome:
    """With probability p_individual, replace each gene independently with
    probability p_gene by a uniform integer in [0, 255]."""
    if rng.random() >= p_individual:
        return c
    genes = list(c.genes)
    for i in range(len(genes)):
        if rng.random() < p_gene:
            genes[i] = int(rng.integers(0, OPACITY_MAX + 1))
    return Chromosome(tuple(genes))


def random_population(pop_size: int, rng: np.random.Generator) -> list[Chromosome]:
    """Unseeded baseline init: iid uniform genes in [0, 255]."""
    draws = rng.integers(0, OPACITY_MAX + 1, size=(pop_size, NUM_GENES))
    return [Chromosome(tuple(int(g) for g in row)) for row in draws]


# ---------------------------------------------------------------------------
# Rendering/evaluation workers. Each worker holds the shared read-only
# volume, target, and metric for its whole lifetime; tasks are just
# (index, genes) and replies (index, cost, error) so population order is
# reconstructed on the coordinator.

_WORKER_STATE: dict = {}


def evaluate_chromosome(
    genes: tuple[int, ...],
    bv: BinnedVolume,
    target64: GrayImage,
    metric,
    settings: RenderSettings,
) -> float:
    tf = smooth(expand(Chromosome(genes)))
    img = render(bv, tf, settings)
    return metric_evaluate(metric, resample64(img), target64)


def _worker_init(bv, target64, metric, settings) -> None:
    _WORKER_STATE.update(bv=bv, target64=target64, metric=metric, settings=settings)


def _worker_task(task: tuple[int, tuple[int, ...]]) -> tuple[int, float, str | None]:
    idx, genes = task
    try:
        cost = evaluate_chromosome(
            genes,
            _WORKER_STATE["bv"],
            _WORKER_STATE["target64"],
            _WORKER_STATE["metric"],
            _WORKER_STATE["settings"],
        )
        return idx, cost, None
    except Exception as e:  # surfaced by the coordinator with the index
        return idx, float("nan"), f"{type(e).__name__}: {e}"


def _pool_context() -> mp.context.BaseContext:
    methods = mp.get_all_start_methods()
    return mp.get_context("fork" if "fork" in methods else "spawn")


class EvaluationPool:
    """Long-lived render/evaluate workers with a scatter/gather contract."""

    def __init__(
        self,
        bv: BinnedVolume,
        target64: GrayImage,
        metric,
        settings: RenderSettings,
        workers: int = 1,
    ):
        self._serial_args = (bv, target64, metric, settings)
        self._pool = None
        if workers > 1:
            self._pool = _pool_context().Pool(
                processes=workers,
                initializer=_worker_init,
                initargs=self._serial_args,
            )

    def evaluate(self, chromosomes: list[Chromosome]) -> list[float]:
        tasks = [(i, c.genes) for i, c in enumerate(chromosomes)]
        if self._pool is not None:
            replies = self._pool.map(_worker_task, tasks)
        else:
            bv, target64, metric, settings = self._serial_args
            replies = []
            for idx, genes in tasks:
                try:
                    replies.append(
                        (idx, evaluate_chromosome(genes, bv, target64, metric, settings), None)
                    )
                except Exception as e:
                    replies.append((idx, float("nan"), f"{type(e).__name__}: {e}"))
        replies.sort(key=lambda r: r[0])
        for idx, cost, err in replies:
            if err is not None:
                raise EvaluationError(f"evaluation failed for individual {idx}: {err}")
            if not (np.isfinite(cost) and cost >= 0.0):
                raise EvaluationError(
                    f"evaluation failed for individual {idx}: non-finite or "
                    f"negative cost {cost!r}"
                )
        return [cost for _, cost, _ in replies]

    def close(self) -> None:
        if self._pool is not None:
            self._pool.close()
            self._pool.join()
            self._pool = None

    def __enter__(self) -> "EvaluationPool":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def evaluate_population(
    pop: list[Individual],
    bv: BinnedVolume,
    target64: GrayImage,
    metric,
    settings: RenderSettings | None = None,
    workers: int = 1,
) -> list[Individual]:
    """Score every individual; order preserved, bit-exact for any worker
    count. The target must already be 64x64."""
    settings = settings or RenderSettings()
    with EvaluationPool(bv, target64, metric, settings, workers) as pool:
        costs = pool.evaluate([ind.chromosome for ind in pop])
    return [Individual(ind.chromosome, cost) for ind, cost in zip(pop, costs)]


def run_search(
    bv: BinnedVolume,
    target: GrayImage,
    metric,
    cfg: SearchConfig,
    settings: RenderSettings | None = None,
    progress=None,
) -> tuple[TransferFunction, RunReport]:
    """Full evolutionary loop: evaluate, tournament-select, crossover
    consecutive pairs, mutate, repeat; returns the smoothed expansion of the
    best chromosome ever evaluated plus the run report."""
    settings = settings or RenderSettings()
    target64 = resample64(target)
    rng = np.random.default_rng(cfg.rng_seed)

    if cfg.seeded_init:
        seed_cfg = SeedConfig(pop_size=cfg.pop_size, levels=cfg.seed_levels)
        chromosomes = seed_population(seed_cfg, rng)
    else:
        chromosomes = random_population(cfg.pop_size, rng)

    start = time.perf_counter()
    generations: list[list[float]] = []
    best: tuple[float, int, tuple[int, ...]] | None = None

    with EvaluationPool(bv, target64, metric, settings, cfg.workers) as pool:
        for gen in range(cfg.n_gens):
            costs = pool.evaluate(chromosomes)
            generations.append(costs)
            gen_best = min(range(len(costs)), key=lambda i: costs[i])
            if best is None or costs[gen_best] < best[0]:
                best = (costs[gen_best], gen, chromosomes[gen_best].genes)
            if progress is not None:
                progress(gen, costs[gen_best], best[0])

            population = [Individual(c, f) for c, f in zip(chromosomes, costs)]
            offspring = [
                tournament_select(population, rng, cfg.tournament_size).chromosome
                for _ in range(cfg.pop_size)
            ]
            crossed: list[Chromosome] = []
            for i in range(0, len(offspring) - 1, 2):
                c1, c2 = two_point_crossover(
                    offspring[i], offspring[i + 1], rng, cfg.p_crossover
                )
                crossed.extend((c1, c2))
            if len(offspring) % 2:
                crossed.append(offspring[-1])
            chromosomes = [
                mutate(c, rng, cfg.p_mutate_individual, cfg.p_mutate_gene)
                for c in crossed
            ]

    report = RunReport(
        generations=generations,
        best_genes=best[2],
        best_cost=best[0],
        best_generation=best[1],
        wall_seconds=time.perf_counter() - start,
    )
    return smooth(expand(Chromosome(best[2]))), report


def report_to_json(r: RunReport) -> str:
    return json.dumps(
        {
            "version": 1,
            "generations": r.generations,
            "normalized": r.normalized(),
            "best": {
                "genes": list(r.best_genes),
                "cost": r.best_cost,
                "generation": r.best_generation,
            },
            "wallSeconds": r.wall_seconds,
        }
    )


def report_from_json(text: str) -> RunReport:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"malformed report JSON: {e}") from None
    if not isinstance(obj, dict) or obj.get("version") != 1:
        raise ValueError("expected a version-1 report object")
    best = obj["best"]
    return RunReport(
        generations=[[float(c) for c in gen] for gen in obj["generations"]],
        best_genes=tuple(int(g) for g in best["genes"]),
        best_cost=float(best["cost"]),
        best_generation=int(best["generation"]),
        wall_seconds=float(obj["wallSeconds"]),
    )
