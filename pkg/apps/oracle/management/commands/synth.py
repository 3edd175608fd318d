"""
Synthesize Corpus
Generates a requirement-traced corpus with planted faults and writes it in
the corpus and fault interchange formats
"""
from pathlib import Path

from apps.common.commands import EngineCommand
from apps.corpus.services import redundancy_level, write_corpus, write_faults
from apps.oracle.synth import synth_config, synth_corpus


class Command(EngineCommand):
    help = "Generate a synthetic corpus and fault matrix"

    def add_arguments(self, parser):
        parser.add_argument('--n-req', type=int, default=None)
        parser.add_argument('--n-cases', type=int, default=None)
        parser.add_argument('--n-faults', type=int, default=None)
        parser.add_argument('--target-rl', type=float, default=None)
        parser.add_argument('--clone-rate', type=float, default=None)

    def handle(self, *args, **options):
        out = Path(self.require(options, 'out'))
        config = synth_config(
            n_req=self.option(options, 'n_req', key='SYNTH_N_REQ', cast=int),
            n_cases=self.option(options, 'n_cases', key='SYNTH_N_CASES', cast=int),
            n_faults=self.option(options, 'n_faults', key='SYNTH_N_FAULTS', cast=int),
            target_rl=self.option(options, 'target_rl', key='SYNTH_TARGET_RL', cast=float),
            clone_rate=self.option(options, 'clone_rate', key='SYNTH_CLONE_RATE', cast=float),
            seed=self.option(options, 'seed', default=0, cast=int),
        )
        corpus, faults = synth_corpus(config)

        out.mkdir(parents=True, exist_ok=True)
        write_corpus(corpus, out / 'corpus.jsonl')
        write_faults(faults, out / 'faults.jsonl', corpus=corpus)
        self.stdout.write(self.style.SUCCESS(
            f"{corpus.m} test cases, {corpus.n_req} requirements, {faults.f_unique} faults, "
            f"RL {redundancy_level(corpus, faults):.2f} -> {out}"
        ))
