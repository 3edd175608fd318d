"""
Best Achievable FDR
Exact (or time-capped) search for the subset that detects the most faults
under the budget and full requirement coverage
"""
from apps.common.commands import EngineCommand
from apps.corpus.services import parse_corpus, parse_faults
from apps.oracle.branch_bound import best_fdr


class Command(EngineCommand):
    help = "Compute the best FDR any covering subset of the budget can reach"

    def add_arguments(self, parser):
        parser.add_argument('--corpus', type=str, help='Corpus file (JSON Lines)')
        parser.add_argument('--faults', type=str, help='Fault matrix file (JSON Lines)')
        parser.add_argument('--budget', type=float, help='Fraction of the suite to keep, in (0, 1]')
        parser.add_argument('--time-cap', type=float, default=None, help='Seconds before giving up on proof')

    def handle(self, *args, **options):
        corpus = parse_corpus(self.require(options, 'corpus'))
        faults = parse_faults(self.require(options, 'faults'))
        budget = self.require(options, 'budget', cast=float)
        time_cap = self.option(options, 'time_cap', key='ORACLE_TIME_CAP', cast=float)
        out = self.require(options, 'out')

        result = best_fdr(corpus, faults, budget, time_cap=time_cap)
        label = 'optimal' if result.exact else 'best found (time cap)'
        self.stdout.write(f"FDR {result.fdr:.4f} ({result.detected}/{result.total_faults} faults), {label}")
        self.write_json(out, {'technique': 'oracle', 'budget': budget, **result.to_payload()})
