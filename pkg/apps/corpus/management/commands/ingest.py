"""
Ingest Corpus
Parses a corpus (and optional fault matrix), prints its statistics and
optionally re-serializes it in canonical form
"""
from pathlib import Path

from apps.common.commands import EngineCommand
from apps.corpus.services import (
    parse_corpus,
    parse_faults,
    redundancy_level,
    write_corpus,
    write_faults,
)


class Command(EngineCommand):
    help = "Parse a test-case corpus and report its size"

    def add_arguments(self, parser):
        parser.add_argument('--corpus', type=str, help='Corpus file (JSON Lines)')
        parser.add_argument('--faults', type=str, help='Fault matrix file (JSON Lines)')

    def handle(self, *args, **options):
        corpus = parse_corpus(self.require(options, 'corpus'))
        faults_path = self.option(options, 'faults')
        faults = parse_faults(faults_path) if faults_path else None

        self.stdout.write(f"Requirements: {corpus.n_req}")
        self.stdout.write(f"Test cases:   {corpus.m}")
        if faults is not None:
            self.stdout.write(f"Faults:       {faults.f_unique}")
            self.stdout.write(f"RL:           {redundancy_level(corpus, faults):.4f}")

        out = self.option(options, 'out')
        if out:
            out = Path(out)
            out.mkdir(parents=True, exist_ok=True)
            write_corpus(corpus, out / 'corpus.jsonl')
            if faults is not None:
                write_faults(faults, out / 'faults.jsonl', corpus=corpus)
            self.stdout.write(self.style.SUCCESS(f"Canonical files written to {out}"))
