"""Genetic algorithm over design chromosomes, plus the warm-started design engine."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .designs import Design, GeneSchema

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaParams:
    population_size: int = 70
    generations: int = 50
    crossover_rate: float = 0.75
    mutation_rate: float = 0.25
    tournament_size: int = 2
    per_gene_mutation_prob: float | None = None  # None -> 1 / chromosome length

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        for name in ("crossover_rate", "mutation_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        p = self.per_gene_mutation_prob
        if p is not None and not 0.0 < p <= 1.0:
            raise ValueError("per_gene_mutation_prob must be in (0, 1]")


def tournament_select(population: Sequence[Design], fitnesses: Sequence[float],
                      tournament_size: int, rng: np.random.Generator) -> Design:
    """Sample tournament_size candidates with replacement and return the fittest.

    Ties go to the earliest-drawn candidate, so the result is deterministic
    given the rng and all-equal fitness degenerates to a uniform draw.
    """
    if not population:
        raise ValueError("empty population")
    idx = rng.integers(0, len(population), size=tournament_size)
    best = int(idx[0])
    for i in idx[1:]:
        if fitnesses[i] > fitnesses[best]:
            best = int(i)
    return population[best]


def single_point_crossover(a: Design, b: Design,
                           rng: np.random.Generator) -> tuple[Design, Design]:
    """Swap gene tails at a point drawn uniformly from 1..len-1.

    Length-1 chromosomes have no interior point and come back unchanged.
    """
    if len(a.genes) != len(b.genes):
        raise ValueError("parents must share a chromosome length")
    if len(a.genes) < 2:
        return a, b
    x = int(rng.integers(1, len(a.genes)))
    return (Design(a.schema_id, a.genes[:x] + b.genes[x:]),
            Design(b.schema_id, b.genes[:x] + a.genes[x:]))


def mutate(design: Design, schema: GeneSchema, per_gene_prob: float,
           rng: np.random.Generator) -> Design:
    """Resample each gene from its domain with probability per_gene_prob."""
    vals = list(design.genes)
    for i in range(len(vals)):
        if rng.random() < per_gene_prob:
            vals[i] = schema.sample_gene(i, rng)
    return Design(design.schema_id, tuple(vals))


def evolve(schema: GeneSchema, fitness_fn: Callable[[Design], float], params: GaParams,
           rng: np.random.Generator,
           warm_start: Sequence[Design] | None = None) -> tuple[Design, list[Design]]:
    """Run the GA and return (best-ever design, final population).

    The initial population is the warm start truncated to population_size and
    completed with fresh samples. Each generation: evaluate, copy the current
    best forward (elitism of 1), then fill with tournament selection,
    crossover at crossover_rate, and mutation at mutation_rate (each mutated
    child resamples genes at per_gene_mutation_prob, default 1/len). Fitness
    failures score 0 and are logged; fitness values are cached per gene tuple.
    With generations = 0 the initial population is still evaluated once.
    """
    pgm = params.per_gene_mutation_prob
    if pgm is None:
        pgm = 1.0 / len(schema)
    pop: list[Design] = list(warm_start[: params.population_size]) if warm_start else []
    for d in pop:
        schema.validate(d)
    while len(pop) < params.population_size:
        pop.append(schema.sample(rng))

    cache: dict[tuple, float] = {}

    def fit_of(d: Design) -> float:
        got = cache.get(d.genes)
        if got is None:
            try:
                got = float(fitness_fn(d))
            except Exception:
                log.warning("fitness evaluation failed for %r; scoring 0", d.genes, exc_info=True)
                got = 0.0
            cache[d.genes] = got
        return got

    best_design = pop[0]
    best_fit = -np.inf
    for gen in range(params.generations + 1):
        fits = [fit_of(d) for d in pop]
        i_best = int(np.argmax(fits))
        if fits[i_best] > best_fit:
            best_fit = fits[i_best]
            best_design = pop[i_best]
        if gen == params.generations:
            break
        nxt = [pop[i_best]]
        while len(nxt) < params.population_size:
            p1 = tournament_select(pop, fits, params.tournament_size, rng)
            p2 = tournament_select(pop, fits, params.tournament_size, rng)
            if rng.random() < params.crossover_rate:
                c1, c2 = single_point_crossover(p1, p2, rng)
            else:
                c1, c2 = p1, p2
            for c in (c1, c2):
                if rng.random() < params.mutation_rate:
                    c = mutate(c, schema, pgm, rng)
                schema.validate(c)
                if len(nxt) < params.population_size:
                    nxt.append(c)
        pop = nxt
    return best_design, pop


class GaDesignEngine:
    """Design engine: evolve() seeded with the previous invocation's population."""

    def __init__(self, schema: GeneSchema, params: GaParams | None = None,
                 warm_start: bool = True):
        self.schema = schema
        self.params = params if params is not None else GaParams()
        self.warm_start = warm_start
        self.invocations = 0
        self._population: list[Design] | None = None

    def propose(self, fitness_fn: Callable[[Design], float],
                rng: np.random.Generator) -> Design:
        seed_pop = self._population if self.warm_start else None
        best, pop = evolve(self.schema, fitness_fn, self.params, rng, warm_start=seed_pop)
        self._population = pop
        self.invocations += 1
        return best

    def reset(self) -> None:
        self._population = None
        self.invocations = 0
