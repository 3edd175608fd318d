"""
Minimize Test Suite
Runs the genetic search for a budget-exact, requirement-covering subset
"""
from apps.common.commands import EngineCommand
from apps.corpus.services import parse_corpus
from apps.minimizer.services import minimize
from apps.minimizer.types import InitStrategy, Objective, ga_config
from apps.similarity.services import import_matrix


class Command(EngineCommand):
    help = "Minimize a test suite with the genetic algorithm"

    def add_arguments(self, parser):
        parser.add_argument('--corpus', type=str, help='Corpus file (JSON Lines)')
        parser.add_argument('--sim-matrix', type=str, help='Normalized similarity matrix file')
        parser.add_argument('--budget', type=float, help='Fraction of the suite to keep, in (0, 1]')
        parser.add_argument('--init', choices=[s.value for s in InitStrategy], default=None)
        parser.add_argument('--objective', choices=[o.value for o in Objective], default=None)
        parser.add_argument('--population-size', type=int, default=None)
        parser.add_argument('--max-generations', type=int, default=None)
        parser.add_argument('--repair', action='store_true', default=None, help='Repair offspring')

    def handle(self, *args, **options):
        corpus = parse_corpus(self.require(options, 'corpus'))
        sim = import_matrix(self.require(options, 'sim_matrix'))
        out = self.require(options, 'out')

        config = ga_config(
            budget=self.require(options, 'budget', cast=float),
            init_strategy=self.option(options, 'init', key='GA_INIT', default='s2'),
            objective=self.option(options, 'objective', key='GA_OBJECTIVE'),
            population_size=self.option(options, 'population_size', key='GA_POPULATION_SIZE', cast=int),
            max_generations=self.option(options, 'max_generations', key='GA_MAX_GENERATIONS', cast=int),
            repair_enabled=self.option(options, 'repair', key='GA_REPAIR_ENABLED', cast=bool),
            seed=self.option(options, 'seed', default=0, cast=int),
        )
        result = minimize(corpus, sim, config)

        self.stdout.write(
            f"Selected {result.best.selected_count}/{corpus.m} test cases, "
            f"fitness {result.best.fitness:.6f} after {result.generations_run} generations "
            f"({result.wall_time:.1f}s)"
        )
        self.write_json(out, {'technique': 'ga', **result.to_payload()})
