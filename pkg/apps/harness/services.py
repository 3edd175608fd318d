"""
Experiment orchestration: the technique grid, baselines and the oracle
over budgets and seeds, plus the redundancy-level study.

Grid cells run one after another; each run owns its seed. A failing run
is recorded with its error and never aborts the grid.
"""
import logging
import time
from dataclasses import asdict, dataclass, replace
from typing import Optional


from apps.baselines.services import BaselineKind, greedy_diversity, random_minimize
from apps.common.errors import EngineError, ValidationFailure
from apps.common.logging_config import performance_logger
from apps.corpus.services import parse_corpus, parse_faults, validate_corpus
from apps.embed.tfidf import tfidf_embed
from apps.embed.vectors import import_sentence_vectors, import_word_vectors
from apps.embed.word2vec import Architecture, cbow_config, train_cbow
from apps.minimizer.budget import adequate_budget
from apps.minimizer.services import fitness, minimize
from apps.minimizer.types import ga_config
from apps.oracle.branch_bound import best_fdr
from apps.oracle.errors import SuiteGenerationError
from apps.oracle.suites import DEFAULT_POOL_SIZE, DEFAULT_TOLERANCE, REDUNDANCY_LEVELS, generate_redundancy_suites, suite_corpus
from apps.preprocess.services import preprocess_corpus
from apps.similarity.services import build_similarity_matrix

from .metrics import coverage, fdr
from .reports import ExperimentReports

logger = logging.getLogger(__name__)

NOT_APPLICABLE = '-'


class ExperimentError(ValidationFailure):
    pass


@dataclass(frozen=True)
class RunRecord:
    technique: str
    preprocessing: str
    representation: str
    metric: str
    init: str
    budget: float
    seed: int
    fdr: Optional[float] = None
    coverage: Optional[float] = None
    fitness: Optional[float] = None
    generations: Optional[int] = None
    wall_time: float = 0.0
    adequate: bool = False
    rl: Optional[float] = None
    suite: Optional[int] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_row(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ExperimentOutcome:
    records: tuple[RunRecord, ...]
    summary: tuple[dict, ...]
    files: dict


def _load(config):
    corpus = parse_corpus(config.corpus_path)
    faults = parse_faults(config.faults_path)
    report = validate_corpus(corpus, faults)
    if not report.ok:
        codes = sorted({finding.code for finding in report.errors})
        raise ExperimentError(f'Corpus does not validate: {codes}')
    return corpus, faults


def _representation(config, corpus, docs, representation, seed):
    if representation == 'tfidf':
        return tfidf_embed(docs)
    if representation == 'imported':
        if config.vectors_path is None:
            raise ExperimentError('The imported representation needs VECTORS.')
        if config.imported_kind == 'word':
            return import_word_vectors(config.vectors_path, docs=docs)
        return import_sentence_vectors(config.vectors_path, corpus=corpus)
    return train_cbow(docs, cbow_config(
        dim=config.cbow_dim,
        epochs=config.cbow_epochs,
        window=config.cbow_window,
        seed=seed,
        architecture=Architecture(representation),
    ))


def _similarity_matrices(config, corpus):
    """Normalized matrices per compatible (preprocessing, representation, metric) cell."""
    matrices = {}
    docs_by_method = {}
    vectors = {}
    base_seed = config.seed_list[0]
    for method, representation, metric in config.techniques():
        key = (method.value, representation, metric.value)
        try:
            if method not in docs_by_method:
                docs_by_method[method] = preprocess_corpus(corpus, method)
            docs = docs_by_method[method]
            if (method, representation) not in vectors:
                vectors[method, representation] = _representation(config, corpus, docs, representation, base_seed)
            matrices[key] = build_similarity_matrix(
                corpus, vectors[method, representation], metric, docs=docs,
                provenance=f'{representation}/{method.value}',
            )
        except Exception as e:
            logger.error(f'Similarity cell {key} failed: {str(e)}')
            matrices[key] = e
    return matrices


def _failed(record, error):
    return replace(record, error=f'{type(error).__name__}: {error}')


def _guarded(record, run):
    """Result of ``run()``, or ``record`` carrying the error when the run raises."""
    try:
        return run()
    except Exception as e:
        if not isinstance(e, EngineError):
            logger.exception(f'{record.technique} run crashed (budget={record.budget}, seed={record.seed})')
        else:
            logger.error(f'{record.technique} run failed (budget={record.budget}, seed={record.seed}): {str(e)}')
        return _failed(record, e)


def _scored(record, subset, corpus, faults, **values):
    return replace(
        record,
        fdr=fdr(subset, faults),
        coverage=coverage(subset, corpus),
        **values,
    )


def _run_grid(config, corpus, faults, matrices, budgets):
    """Every technique, baseline and oracle run over ``budgets``; ``budgets`` maps budget -> adequate flag."""
    records = []
    seeds = config.seed_list
    ids = corpus.ids

    def run_ga(record, matrix, budget, init, seed):
        result = minimize(corpus, matrix, ga_config(
            budget=budget,
            init_strategy=init,
            seed=seed,
            population_size=config.population_size,
            max_generations=config.max_generations,
        ))
        return _scored(
            record, result.selected_ids, corpus, faults,
            fitness=result.best.fitness,
            generations=result.generations_run,
            wall_time=result.wall_time,
        )

    def run_greedy(record, matrix, budget):
        solution = greedy_diversity(corpus, matrix, budget)
        return _scored(record, [ids[i] for i in solution.selected], corpus, faults, fitness=fitness(solution, matrix))

    def run_random(record, kind, budget, seed):
        solution = random_minimize(corpus, budget, constrained=kind is BaselineKind.RANDOM_CONSTRAINED, seed=seed)
        return _scored(record, [ids[i] for i in solution.selected], corpus, faults)

    def run_oracle(record, budget):
        started = time.perf_counter()
        result = best_fdr(corpus, faults, budget, time_cap=config.oracle_time_cap)
        return _scored(record, result.subset, corpus, faults, wall_time=time.perf_counter() - started)

    for budget, is_adequate in budgets:
        for (method, representation, metric), matrix in matrices.items():
            for init in config.init_strategies:
                for seed in seeds:
                    record = RunRecord('ga', method, representation, metric, init.value, budget, seed, adequate=is_adequate)
                    if isinstance(matrix, Exception):
                        records.append(_failed(record, matrix))
                    else:
                        records.append(_guarded(record, lambda: run_ga(record, matrix, budget, init, seed)))

            if config.include_baselines:
                record = RunRecord(
                    BaselineKind.GREEDY_DIVERSITY.value, method, representation, metric,
                    NOT_APPLICABLE, budget, 0, adequate=is_adequate,
                )
                if isinstance(matrix, Exception):
                    records.append(_failed(record, matrix))
                else:
                    records.append(_guarded(record, lambda: run_greedy(record, matrix, budget)))

        if config.include_baselines:
            for kind in (BaselineKind.RANDOM_CONSTRAINED, BaselineKind.RANDOM_UNCONSTRAINED):
                for seed in seeds:
                    record = RunRecord(
                        kind.value, NOT_APPLICABLE, NOT_APPLICABLE, NOT_APPLICABLE,
                        NOT_APPLICABLE, budget, seed, adequate=is_adequate,
                    )
                    records.append(_guarded(record, lambda: run_random(record, kind, budget, seed)))

        if config.include_oracle:
            record = RunRecord(
                'oracle', NOT_APPLICABLE, NOT_APPLICABLE, NOT_APPLICABLE,
                NOT_APPLICABLE, budget, 0, adequate=is_adequate,
            )
            records.append(_guarded(record, lambda: run_oracle(record, budget)))
    return records


def _budgets(config, corpus):
    budgets = [(float(b), False) for b in config.budgets]
    if config.include_adequate:
        budgets.append((adequate_budget(corpus), True))
    return budgets


def run_experiment(config) -> ExperimentOutcome:
    """Run the full grid and write every report into ``config.output_dir``."""
    corpus, faults = _load(config)
    logger.info(
        f'Experiment: {len(config.techniques())} technique cells x {len(config.init_strategies)} inits '
        f'x {len(config.budgets)} budgets x {len(config.seed_list)} seeds'
    )
    with performance_logger.stage('experiment', m=corpus.m, budgets=len(config.budgets)):
        matrices = _similarity_matrices(config, corpus)
        records = _run_grid(config, corpus, faults, matrices, _budgets(config, corpus))

    failed = [record for record in records if not record.ok]
    if failed:
        logger.warning(f'{len(failed)} of {len(records)} runs failed; see the error column of runs.csv')

    summary = ExperimentReports.summarize(records)
    files = ExperimentReports.write_experiment(config.output_dir, records, summary)
    return ExperimentOutcome(records=tuple(records), summary=tuple(summary), files=files)


def run_redundancy_study(config, levels=REDUNDANCY_LEVELS, count=10, tol=DEFAULT_TOLERANCE, pool_size=DEFAULT_POOL_SIZE):
    """
    For each redundancy level, generate ``count`` diverse sub-suites and
    run the technique grid on each one. Writes ``redundancy.csv``.
    """
    corpus, faults = _load(config)
    base_seed = config.seed_list[0]
    records = []

    for level in levels:
        try:
            suites = generate_redundancy_suites(
                corpus, faults, level, count=count, tol=tol, pool_size=pool_size, seed=base_seed
            )
        except SuiteGenerationError as exc:
            logger.warning(f'RL {level}: {exc}')
            records.append(RunRecord(
                'suites', NOT_APPLICABLE, NOT_APPLICABLE, NOT_APPLICABLE, NOT_APPLICABLE,
                0.0, base_seed, rl=level, error=f'{type(exc).__name__}: {exc}',
            ))
            continue

        for number, case_ids in enumerate(suites, start=1):
            sub_corpus, sub_faults = suite_corpus(corpus, faults, case_ids)
            with performance_logger.stage('redundancy-suite', rl=level, suite=number, m=sub_corpus.m):
                matrices = _similarity_matrices(config, sub_corpus)
                grid = _run_grid(config, sub_corpus, sub_faults, matrices, _budgets(config, sub_corpus))
            records.extend(replace(record, rl=level, suite=number) for record in grid)

    rows = ExperimentReports.summarize_redundancy(records)
    path = ExperimentReports.write_csv(
        config.output_dir / 'redundancy.csv', rows, ExperimentReports.REDUNDANCY_FIELDS
    )
    return ExperimentOutcome(records=tuple(records), summary=tuple(rows), files={'redundancy': path})
