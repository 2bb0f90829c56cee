"""Generational search loop with optional self-adaptation of its own knobs.

Two modes share one engine:

* static mode ("nas_plus"): every evolutionary parameter is fixed up
  front and never changes during the run;
* adaptive mode ("enas"): after each generation is evaluated, the
  fittest individual's control genes overwrite the live mutation rate,
  cloning rate, population size and generation budget. A shrunken
  budget can halt the run immediately; a changed population size culls
  the weakest individuals or spawns fresh random ones.

Fitness is computed once per individual and cached on it; elites and
clones carry their records into later generations untouched, which is
what makes the best-so-far fitness provably non-decreasing.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol

from .fitness import FitnessRecord, evaluation_doc
from .genome import (
    Genome,
    SearchSpace,
    crossover,
    genome_to_doc,
    mutate,
    sample_cloning_rate,
    sample_genome,
    sample_max_generations,
    sample_mutation_rate,
    sample_population_size,
)
from .seeding import derive_seed, make_rng


class ConfigurationError(ValueError):
    """The run configuration cannot produce a valid population."""


class Mode(str, Enum):
    NAS_PLUS = "nas_plus"
    ENAS = "enas"


class FitnessFunction(Protocol):
    def __call__(self, genome: Genome, seed: int) -> FitnessRecord: ...


@dataclass(frozen=True)
class EvolutionConfig:
    """Static parameters plus the gene search space.

    In adaptive mode only ``crossover_rate``, ``tournament_size`` and
    ``elitism_size`` stay authoritative; the other four values are the
    static-mode settings.
    """

    space: SearchSpace = SearchSpace()
    population_size: int = 100
    max_generations: int = 500
    crossover_rate: float = 0.9
    mutation_rate: float = 0.2
    cloning_rate: float = 0.3
    tournament_size: int = 4
    elitism_size: int = 1

    def __post_init__(self) -> None:
        for rate_name in ("crossover_rate", "mutation_rate", "cloning_rate"):
            rate = getattr(self, rate_name)
            if not 0.0 <= rate <= 1.0:
                raise ConfigurationError(f"{rate_name} must lie in [0, 1], got {rate}")
        if self.tournament_size < 1:
            raise ConfigurationError("tournament_size must be at least 1")
        if self.elitism_size < 0:
            raise ConfigurationError("elitism_size must be non-negative")
        if self.population_size < max(2, self.elitism_size + 1):
            raise ConfigurationError(
                f"population_size {self.population_size} cannot hold "
                f"{self.elitism_size} elites plus offspring"
            )
        if self.elitism_size >= self.space.population_size[0]:
            raise ConfigurationError(
                "elitism_size must stay below the smallest allowed population"
            )
        if self.max_generations < 1:
            raise ConfigurationError("max_generations must be positive")


@dataclass
class LiveParams:
    """The evolutionary parameters currently in force."""

    mutation_rate: float
    population_size: int
    cloning_rate: float
    max_generations: int
    crossover_rate: float
    tournament_size: int
    elitism_size: int

    def as_dict(self) -> dict:
        return {
            "mutation_rate": self.mutation_rate,
            "population_size": self.population_size,
            "cloning_rate": self.cloning_rate,
            "max_generations": self.max_generations,
            "crossover_rate": self.crossover_rate,
            "tournament_size": self.tournament_size,
            "elitism_size": self.elitism_size,
        }


@dataclass
class Individual:
    id: int
    genome: Genome
    fitness: FitnessRecord | None = None
    birth_generation: int = 0


@dataclass(frozen=True)
class GenerationRecord:
    """One exported history row; the data behind the trajectory plots."""

    generation: int
    best_f1: float
    mean_f1: float
    mutation_rate: float
    population_size: int
    cloning_rate: float
    max_generations: int
    models_trained_cumulative: int

    FIELDS = (
        "generation",
        "best_f1",
        "mean_f1",
        "mutation_rate",
        "population_size",
        "cloning_rate",
        "max_generations",
        "models_trained_cumulative",
    )

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.FIELDS}


@dataclass
class EvolutionState:
    mode: Mode
    run_seed: int
    space: SearchSpace
    live: LiveParams
    population: list[Individual] = field(default_factory=list)
    generation: int = 0
    next_id: int = 0
    models_trained: int = 0
    evaluations: int = 0
    history: list[GenerationRecord] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)
    halted: bool = False


@dataclass
class RunResult:
    mode: Mode
    run_seed: int
    best: Individual
    history: list[GenerationRecord]
    events: list[dict]
    models_trained: int
    evaluations: int
    generations: int
    halted: bool
    wall_time: float


# Worker-process state for parallel evaluation. The fitness function is
# shipped once per worker; tasks then carry only (genome, seed).
_WORKER_FITNESS: FitnessFunction | None = None


def _worker_init(fitness_fn: FitnessFunction) -> None:
    global _WORKER_FITNESS
    _WORKER_FITNESS = fitness_fn


def _worker_call(task: tuple[Genome, int]) -> FitnessRecord:
    genome, seed = task
    assert _WORKER_FITNESS is not None
    return _WORKER_FITNESS(genome, seed)


class EvaluatorPool:
    """Maps (genome, seed) tasks to fitness records, serially or in processes.

    Results always come back in task order, and every task's randomness
    is fixed by its seed, so the outcome is bit-identical for any pool
    size.
    """

    def __init__(self, fitness_fn: FitnessFunction, jobs: int = 1):
        if jobs < 1:
            raise ConfigurationError("jobs must be at least 1")
        self.fitness_fn = fitness_fn
        self.jobs = jobs
        self._executor: ProcessPoolExecutor | None = None

    def evaluate(self, tasks: list[tuple[Genome, int]]) -> list[FitnessRecord]:
        if self.jobs == 1:
            return [self.fitness_fn(genome, seed) for genome, seed in tasks]
        if self._executor is None:
            self._executor = ProcessPoolExecutor(
                max_workers=self.jobs,
                initializer=_worker_init,
                initargs=(self.fitness_fn,),
            )
        return list(self._executor.map(_worker_call, tasks))

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None

    def __enter__(self) -> "EvaluatorPool":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def best_individual(population: list[Individual]) -> Individual:
    """Highest mean F-measure; ties broken towards the lower id."""
    return min(population, key=lambda ind: (-ind.fitness.mean_f_measure, ind.id))


def _evaluate_individuals(
    state: EvolutionState,
    individuals: list[Individual],
    pool: EvaluatorPool,
    generation: int,
) -> None:
    """Evaluate unevaluated individuals; seeds fix (run_seed, generation, id)."""
    tasks = [
        (ind.genome, derive_seed(state.run_seed, generation, ind.id))
        for ind in individuals
    ]
    for ind, record in zip(individuals, pool.evaluate(tasks)):
        ind.fitness = record
        state.models_trained += record.models_trained
        state.evaluations += 1
        doc = evaluation_doc(ind.id, genome_to_doc(ind.genome), record)
        doc["generation"] = generation
        state.events.append(doc)


def init(
    mode: Mode,
    config: EvolutionConfig,
    pool: EvaluatorPool,
    run_seed: int,
) -> EvolutionState:
    """Spawn and evaluate the initial random population."""
    rng = make_rng(run_seed, "init")
    if mode is Mode.NAS_PLUS:
        live = LiveParams(
            mutation_rate=config.mutation_rate,
            population_size=config.population_size,
            cloning_rate=config.cloning_rate,
            max_generations=config.max_generations,
            crossover_rate=config.crossover_rate,
            tournament_size=config.tournament_size,
            elitism_size=config.elitism_size,
        )
    else:
        # Before any individual has been evaluated there is no fittest to
        # copy from, so the initial live values are drawn from the same
        # priors as the genes; the first promotion replaces them.
        live = LiveParams(
            mutation_rate=sample_mutation_rate(rng, config.space),
            population_size=sample_population_size(config.space, rng),
            cloning_rate=sample_cloning_rate(rng, config.space),
            max_generations=sample_max_generations(config.space, rng),
            crossover_rate=config.crossover_rate,
            tournament_size=config.tournament_size,
            elitism_size=config.elitism_size,
        )
    if live.elitism_size >= live.population_size:
        raise ConfigurationError(
            f"elitism_size {live.elitism_size} needs a population larger than "
            f"{live.population_size}"
        )
    live.tournament_size = min(live.tournament_size, live.population_size)

    state = EvolutionState(mode=mode, run_seed=run_seed, space=config.space, live=live)
    newborns = [
        Individual(id=i, genome=sample_genome(config.space, rng), birth_generation=0)
        for i in range(live.population_size)
    ]
    state.next_id = len(newborns)
    _evaluate_individuals(state, newborns, pool, generation=0)
    state.population = newborns
    return state


def tournament_select(state: EvolutionState, rng) -> Individual:
    """Pick the fittest of `tournament_size` distinct random individuals.

    The effective tournament size is clamped to the population size, so
    a freshly shrunken population never starves selection.
    """
    population = state.population
    size = min(state.live.tournament_size, len(population))
    picks = rng.choice(len(population), size=size, replace=False)
    return best_individual([population[i] for i in picks])


def clone_count(population_size: int, cloning_rate: float, elitism_size: int) -> int:
    """Clones to select beyond the automatic elite copies.

    The total round(cloning_rate * population_size) includes the elite,
    so the elite count is subtracted; the floor keeps the elite alive
    even when the rate rounds to zero.
    """
    total = math.floor(population_size * cloning_rate + 0.5)
    total = max(total, elitism_size)
    return total - elitism_size


def next_generation(state: EvolutionState, pool: EvaluatorPool) -> EvolutionState:
    """Assemble and evaluate the next population: elites, clones, offspring."""
    live = state.live
    new_generation = state.generation + 1
    rng = make_rng(state.run_seed, "breed", new_generation)
    target = live.population_size

    ranked = sorted(
        state.population, key=lambda ind: (-ind.fitness.mean_f_measure, ind.id)
    )
    elites = ranked[: live.elitism_size]

    extra_clones = min(
        clone_count(target, live.cloning_rate, live.elitism_size),
        target - len(elites),
    )
    clones = []
    for _ in range(extra_clones):
        winner = tournament_select(state, rng)
        clones.append(
            Individual(
                id=state.next_id,
                genome=winner.genome,
                fitness=winner.fitness,  # cached, never retrained
                birth_generation=new_generation,
            )
        )
        state.next_id += 1

    offspring = []
    for _ in range(target - len(elites) - len(clones)):
        first = tournament_select(state, rng)
        if rng.random() < live.crossover_rate:
            second = tournament_select(state, rng)
            child = crossover(first.genome, second.genome, rng)
        else:
            child = first.genome
        child = mutate(child, live.mutation_rate, state.space, rng)
        offspring.append(
            Individual(id=state.next_id, genome=child, birth_generation=new_generation)
        )
        state.next_id += 1

    state.generation = new_generation
    _evaluate_individuals(state, offspring, pool, generation=new_generation)
    state.population = elites + clones + offspring
    state.events.append(
        {
            "type": "bred",
            "generation": new_generation,
            "elites": [ind.id for ind in elites],
            "clones": [ind.id for ind in clones],
            "offspring": [ind.id for ind in offspring],
        }
    )
    return state


def resize_population(
    state: EvolutionState, new_size: int, rng, pool: EvaluatorPool
) -> None:
    """Grow with fresh random genomes or cull the weakest down to `new_size`.

    Out-of-bounds targets are clamped to the search-space bounds and
    logged rather than aborting a running search.
    """
    lo, hi = state.space.population_size
    clamped = min(max(new_size, lo), hi)
    if clamped != new_size:
        state.events.append(
            {
                "type": "resize_clamped",
                "generation": state.generation,
                "requested": new_size,
                "clamped": clamped,
            }
        )
    current = len(state.population)
    if clamped > current:
        spawned = []
        for _ in range(clamped - current):
            spawned.append(
                Individual(
                    id=state.next_id,
                    genome=sample_genome(state.space, rng),
                    birth_generation=state.generation,
                )
            )
            state.next_id += 1
        _evaluate_individuals(state, spawned, pool, generation=state.generation)
        state.population.extend(spawned)
        state.events.append(
            {
                "type": "spawn",
                "generation": state.generation,
                "ids": [ind.id for ind in spawned],
            }
        )
    elif clamped < current:
        # Ascending fitness; among equals the older individual goes first,
        # which keeps fresher genetic material around.
        order = sorted(
            state.population,
            key=lambda ind: (ind.fitness.mean_f_measure, ind.birth_generation, ind.id),
        )
        removed = order[: current - clamped]
        removed_ids = {ind.id for ind in removed}
        state.population = [ind for ind in state.population if ind.id not in removed_ids]
        state.events.append(
            {
                "type": "cull",
                "generation": state.generation,
                "removed": [
                    {
                        "id": ind.id,
                        "fitness": ind.fitness.mean_f_measure,
                        "birth_generation": ind.birth_generation,
                    }
                    for ind in removed
                ],
                "survivor_fitness_min": min(
                    ind.fitness.mean_f_measure for ind in state.population
                ),
            }
        )
    state.live.population_size = clamped


def apply_eco_genes(state: EvolutionState, pool: EvaluatorPool) -> bool:
    """Promote the fittest individual's control genes to the live parameters.

    Returns True when the newly promoted generation budget is already
    exceeded, in which case the run halts immediately and the population
    is left untouched.
    """
    if state.mode is not Mode.ENAS:
        raise ConfigurationError("control genes only apply in adaptive mode")
    fittest = best_individual(state.population)
    genes = fittest.genome
    live = state.live
    live.mutation_rate = genes.mutation_rate
    live.cloning_rate = genes.cloning_rate
    live.max_generations = genes.max_generations

    halted = state.generation > genes.max_generations
    state.events.append(
        {
            "type": "promotion",
            "generation": state.generation,
            "fittest": fittest.id,
            "mutation_rate": genes.mutation_rate,
            "population_size": genes.population_size,
            "cloning_rate": genes.cloning_rate,
            "max_generations": genes.max_generations,
            "halted": halted,
        }
    )
    if halted:
        state.halted = True
        return True

    live.tournament_size = min(live.tournament_size, genes.population_size)
    rng = make_rng(state.run_seed, "resize", state.generation)
    resize_population(state, genes.population_size, rng, pool)
    return False


def _record_generation(state: EvolutionState) -> None:
    best = best_individual(state.population)
    mean = sum(ind.fitness.mean_f_measure for ind in state.population) / len(
        state.population
    )
    state.history.append(
        GenerationRecord(
            generation=state.generation,
            best_f1=best.fitness.mean_f_measure,
            mean_f1=mean,
            mutation_rate=state.live.mutation_rate,
            population_size=state.live.population_size,
            cloning_rate=state.live.cloning_rate,
            max_generations=state.live.max_generations,
            models_trained_cumulative=state.models_trained,
        )
    )
    state.events.append(
        {
            "type": "generation_end",
            "generation": state.generation,
            "population_len": len(state.population),
            "live_population_size": state.live.population_size,
            "tournament_size": state.live.tournament_size,
            "best": best.id,
        }
    )


def run(
    mode: Mode | str,
    config: EvolutionConfig,
    fitness_fn: FitnessFunction,
    run_seed: int,
    jobs: int = 1,
) -> RunResult:
    """Execute one full search and return its best individual and history.

    Per generation: evaluate, promote control genes (adaptive mode,
    which may resize the population or halt the run), record history,
    then breed, so freshly promoted rates govern the very next breeding
    step. The loop ends when the generation counter reaches the live
    budget or a promotion halts it.
    """
    mode = Mode(mode)
    started = time.perf_counter()
    with EvaluatorPool(fitness_fn, jobs) as pool:
        state = init(mode, config, pool, run_seed)
        if mode is Mode.ENAS:
            apply_eco_genes(state, pool)
        _record_generation(state)
        while not state.halted and state.generation < state.live.max_generations:
            next_generation(state, pool)
            if mode is Mode.ENAS:
                apply_eco_genes(state, pool)
            _record_generation(state)
    return RunResult(
        mode=mode,
        run_seed=run_seed,
        best=best_individual(state.population),
        history=state.history,
        events=state.events,
        models_trained=state.models_trained,
        evaluations=state.evaluations,
        generations=state.generation,
        halted=state.halted,
        wall_time=time.perf_counter() - started,
    )


def run_on_dataset(
    mode: Mode | str,
    config: EvolutionConfig,
    dataset,
    split,
    run_seed: int,
    jobs: int = 1,
) -> RunResult:
    """Run the search with cross-validated network training as the fitness."""
    from .fitness import CrossValFitness

    return run(mode, config, CrossValFitness(dataset, split), run_seed, jobs=jobs)
