"""
Baseline Minimization
Random (with or without the coverage constraint) or greedy maximin subsets,
written in the same format as the GA result
"""
from apps.baselines.services import BaselineKind, greedy_diversity, random_minimize
from apps.common.commands import EngineCommand
from apps.corpus.services import parse_corpus
from apps.minimizer.services import fitness
from apps.minimizer.types import MinimizationResult
from apps.similarity.services import import_matrix


class Command(EngineCommand):
    help = "Run a baseline minimization strategy"

    def add_arguments(self, parser):
        parser.add_argument('--kind', choices=[k.value for k in BaselineKind], default=None)
        parser.add_argument('--corpus', type=str, help='Corpus file (JSON Lines)')
        parser.add_argument('--sim-matrix', type=str, help='Similarity matrix (needed by greedy)')
        parser.add_argument('--budget', type=float, help='Fraction of the suite to keep, in (0, 1]')

    def handle(self, *args, **options):
        kind = BaselineKind(self.require(options, 'kind'))
        corpus = parse_corpus(self.require(options, 'corpus'))
        budget = self.require(options, 'budget', cast=float)
        seed = self.option(options, 'seed', default=0, cast=int)
        out = self.require(options, 'out')

        matrix_path = self.option(options, 'sim_matrix')
        sim = import_matrix(matrix_path) if matrix_path else None

        if kind is BaselineKind.GREEDY_DIVERSITY:
            if sim is None:
                sim = import_matrix(self.require(options, 'sim_matrix'))
            solution = greedy_diversity(corpus, sim, budget)
        else:
            solution = random_minimize(
                corpus, budget, constrained=kind is BaselineKind.RANDOM_CONSTRAINED, seed=seed
            )

        score = fitness(solution, sim) if sim is not None else None
        result = MinimizationResult(
            best=solution.evaluated(solution.valid, score) if score is not None else solution,
            generations_run=0,
            fitness_history=(score,) if score is not None else (),
            selected_ids=tuple(corpus.ids[i] for i in solution.selected),
            config={'kind': kind.value, 'budget': budget, 'seed': seed},
        )
        self.stdout.write(
            f"{kind.value}: {solution.selected_count}/{corpus.m} test cases, valid={solution.valid}"
        )
        self.write_json(out, {'technique': kind.value, **result.to_payload()})
