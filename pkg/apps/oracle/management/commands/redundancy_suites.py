"""
Redundancy-Level Suites
Generates diverse fully covering sub-suites at a target redundancy level and
writes each one as a corpus and fault file pair
"""
from pathlib import Path

from apps.common.commands import EngineCommand
from apps.corpus.services import parse_corpus, parse_faults, redundancy_level, write_corpus, write_faults
from apps.oracle.suites import DEFAULT_POOL_SIZE, DEFAULT_TOLERANCE, generate_redundancy_suites, suite_corpus


class Command(EngineCommand):
    help = "Generate sub-suites with a controlled redundancy level"

    def add_arguments(self, parser):
        parser.add_argument('--corpus', type=str, help='Corpus file (JSON Lines)')
        parser.add_argument('--faults', type=str, help='Fault matrix file (JSON Lines)')
        parser.add_argument('--rl', type=float, help='Target redundancy level')
        parser.add_argument('--count', type=int, default=None)
        parser.add_argument('--tol', type=float, default=None)
        parser.add_argument('--pool-size', type=int, default=None)

    def handle(self, *args, **options):
        corpus = parse_corpus(self.require(options, 'corpus'))
        faults = parse_faults(self.require(options, 'faults'))
        target = self.require(options, 'rl', cast=float)
        out = Path(self.require(options, 'out'))

        suites = generate_redundancy_suites(
            corpus,
            faults,
            target,
            count=self.option(options, 'count', default=10, cast=int),
            tol=self.option(options, 'tol', default=DEFAULT_TOLERANCE, cast=float),
            pool_size=self.option(options, 'pool_size', default=DEFAULT_POOL_SIZE, cast=int),
            seed=self.option(options, 'seed', default=0, cast=int),
        )

        out.mkdir(parents=True, exist_ok=True)
        for number, case_ids in enumerate(suites, start=1):
            sub_corpus, sub_faults = suite_corpus(corpus, faults, case_ids)
            write_corpus(sub_corpus, out / f'suite_{number:02d}.corpus.jsonl')
            write_faults(sub_faults, out / f'suite_{number:02d}.faults.jsonl', corpus=sub_corpus)
            self.stdout.write(
                f"suite {number:02d}: {sub_corpus.m} test cases, RL {redundancy_level(sub_corpus, sub_faults):.3f}"
            )
        self.stdout.write(self.style.SUCCESS(f"{len(suites)} suites written to {out}"))
