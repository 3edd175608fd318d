"""
Validate Corpus
Checks coverage, steps and fault references; exits with status 2 on errors
"""
from django.core.management.base import CommandError

from apps.common.commands import EXIT_VALIDATION_FAILURE, EngineCommand
from apps.corpus.services import parse_corpus, parse_faults, validate_corpus


class Command(EngineCommand):
    help = "Validate a corpus and its fault matrix"

    def add_arguments(self, parser):
        parser.add_argument('--corpus', type=str, help='Corpus file (JSON Lines)')
        parser.add_argument('--faults', type=str, help='Fault matrix file (JSON Lines)')

    def handle(self, *args, **options):
        corpus = parse_corpus(self.require(options, 'corpus'))
        faults_path = self.option(options, 'faults')
        faults = parse_faults(faults_path) if faults_path else None

        report = validate_corpus(corpus, faults)
        for finding in report.warnings:
            self.stdout.write(self.style.WARNING(f"warning {finding.code}: {finding.message}"))
        for finding in report.errors:
            self.stdout.write(self.style.ERROR(f"error {finding.code}: {finding.message}"))

        out = self.option(options, 'out')
        if out:
            self.write_json(out, {
                'ok': report.ok,
                'errors': [{'code': f.code, 'message': f.message} for f in report.errors],
                'warnings': [{'code': f.code, 'message': f.message} for f in report.warnings],
                'stats': report.stats,
            })

        if not report.ok:
            raise CommandError(
                f"{len(report.errors)} validation error(s)", returncode=EXIT_VALIDATION_FAILURE
            )
        self.stdout.write(self.style.SUCCESS(f"Corpus is valid: {report.stats}"))
