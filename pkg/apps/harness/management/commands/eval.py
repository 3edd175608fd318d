"""
Evaluate
Runs the experiment grid (and optionally the redundancy-level study) and
writes CSV/JSON reports
"""
from apps.common.commands import EngineCommand
from apps.harness.config import ExperimentConfig
from apps.harness.services import run_experiment, run_redundancy_study
from apps.oracle.suites import REDUNDANCY_LEVELS


class Command(EngineCommand):
    help = "Run the evaluation grid and write reports"

    def add_arguments(self, parser):
        parser.add_argument('--corpus', type=str, help='Corpus file (overrides CORPUS)')
        parser.add_argument('--faults', type=str, help='Fault matrix file (overrides FAULTS)')
        parser.add_argument('--repeats', type=int, default=None)
        parser.add_argument('--adequate', action='store_true', default=None, help='Add the adequate budget')
        parser.add_argument('--redundancy', action='store_true', help='Also run the redundancy-level study')
        parser.add_argument('--levels', type=str, default=None, help='Comma-separated redundancy levels')
        parser.add_argument('--suites', type=int, default=10, help='Suites per redundancy level')

    def handle(self, *args, **options):
        overrides = {
            'corpus_path': options.get('corpus'),
            'faults_path': options.get('faults'),
            'output_dir': options.get('out'),
            'repeats': options.get('repeats'),
            'include_adequate': options.get('adequate'),
        }
        if options.get('config'):
            config = ExperimentConfig.from_file(options['config'], **overrides)
        else:
            config = ExperimentConfig(**{
                key: value for key, value in overrides.items() if value is not None
            })
        if options.get('seed') is not None:
            config = config.model_copy(update={
                'seeds': tuple(options['seed'] + i for i in range(config.repeats)),
            })

        self.stdout.write(self.style.SUCCESS(
            f"\n{'=' * 70}\n  Evaluation grid\n{'=' * 70}\n"
        ))
        self.stdout.write(f"Techniques: {len(config.techniques())}  Budgets: {len(config.budgets)}  "
                          f"Seeds: {len(config.seed_list)}")

        outcome = run_experiment(config)
        failed = sum(1 for record in outcome.records if not record.ok)
        self.stdout.write(f"Runs: {len(outcome.records)} ({failed} failed)")
        for name, path in outcome.files.items():
            self.stdout.write(f"  {name}: {path}")

        if options.get('redundancy'):
            levels = (
                tuple(float(level) for level in options['levels'].split(','))
                if options.get('levels') else REDUNDANCY_LEVELS
            )
            study = run_redundancy_study(config, levels=levels, count=options['suites'])
            self.stdout.write(f"Redundancy study: {len(study.records)} runs -> {study.files['redundancy']}")

        self.stdout.write(self.style.SUCCESS("Evaluation complete"))
