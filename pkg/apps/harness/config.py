"""
Experiment grid configuration.

Built directly or from a key-value file read with python-decouple, e.g.::

    CORPUS=data/corpus.jsonl
    FAULTS=data/faults.jsonl
    PREPROCESSING=pm1,pm2
    REPRESENTATIONS=tfidf,cbow
    METRICS=cosine,wmd
    BUDGETS=0.3,0.4,0.5
    REPEATS=10
"""
from pathlib import Path
from typing import Optional

from decouple import Config, Csv, RepositoryEnv
from django.conf import settings
from pydantic import BaseModel, ConfigDict, Field, field_validator

from apps.minimizer.types import InitStrategy
from apps.preprocess.services import PreprocessMethod
from apps.similarity.services import Metric

REPRESENTATIONS = ('tfidf', 'cbow', 'skipgram', 'imported')
SENTENCE_LEVEL = {'tfidf'}
WORD_LEVEL = {'cbow', 'skipgram'}


def compatible(representation: str, metric: Metric, imported_kind: str = 'sentence') -> bool:
    """Sentence vectors pair with cosine and Euclidean, word vectors with WMD."""
    if representation == 'imported':
        word_level = imported_kind == 'word'
    else:
        word_level = representation in WORD_LEVEL
    return (metric is Metric.WMD) == word_level


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    corpus_path: Path
    faults_path: Path
    output_dir: Path = Path('reports')
    preprocessing: tuple[PreprocessMethod, ...] = (PreprocessMethod.PM2,)
    representations: tuple[str, ...] = ('tfidf',)
    metrics: tuple[Metric, ...] = (Metric.COSINE,)
    init_strategies: tuple[InitStrategy, ...] = (InitStrategy.REQUIREMENT_RANDOM,)
    budgets: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    repeats: int = Field(10, ge=1)
    seeds: tuple[int, ...] = ()
    include_baselines: bool = True
    include_oracle: bool = True
    include_adequate: bool = False
    oracle_time_cap: Optional[float] = Field(None, gt=0)
    # optional GA / word2vec overrides; unset keeps project defaults
    population_size: Optional[int] = Field(None, ge=2)
    max_generations: Optional[int] = Field(None, ge=1)
    cbow_dim: Optional[int] = Field(None, ge=2)
    cbow_epochs: Optional[int] = Field(None, ge=1)
    cbow_window: Optional[int] = Field(None, ge=1)
    vectors_path: Optional[Path] = None
    # 'word' or 'sentence'; what an imported vector file holds
    imported_kind: str = 'sentence'

    @field_validator('budgets')
    @classmethod
    def _budgets_in_range(cls, budgets):
        if not budgets:
            raise ValueError('at least one budget is required')
        for budget in budgets:
            if not 0 < budget <= 1:
                raise ValueError(f'budget {budget} is outside (0, 1]')
        return budgets

    @field_validator('representations')
    @classmethod
    def _known_representations(cls, representations):
        unknown = [r for r in representations if r not in REPRESENTATIONS]
        if unknown:
            raise ValueError(f'unknown representations: {unknown}')
        return representations

    @field_validator('imported_kind')
    @classmethod
    def _known_kind(cls, kind):
        if kind not in ('word', 'sentence'):
            raise ValueError("imported_kind must be 'word' or 'sentence'")
        return kind

    @property
    def seed_list(self) -> tuple[int, ...]:
        """Explicit seeds, or 0..repeats-1."""
        return self.seeds if self.seeds else tuple(range(self.repeats))

    def techniques(self):
        """Compatible (preprocessing, representation, metric) cells in grid order."""
        return [
            (method, representation, metric)
            for method in self.preprocessing
            for representation in self.representations
            for metric in self.metrics
            if compatible(representation, metric, self.imported_kind)
        ]

    @classmethod
    def from_file(cls, path, **overrides):
        """Read the grid from a key-value file; ``overrides`` win over the file."""
        source = Config(RepositoryEnv(str(path)))
        default_budgets = ','.join(str(b) for b in getattr(settings, 'HARNESS_DEFAULT_BUDGETS', cls.model_fields['budgets'].default))
        values = {
            'corpus_path': source('CORPUS', default=None),
            'faults_path': source('FAULTS', default=None),
            'output_dir': source('OUTPUT_DIR', default=str(getattr(settings, 'REPORTS_DIR', 'reports'))),
            'preprocessing': source('PREPROCESSING', default='pm2', cast=Csv()),
            'representations': source('REPRESENTATIONS', default='tfidf', cast=Csv()),
            'metrics': source('METRICS', default='cosine', cast=Csv()),
            'init_strategies': source('INIT_STRATEGIES', default='s2', cast=Csv()),
            'budgets': source('BUDGETS', default=default_budgets, cast=Csv(float)),
            'repeats': source('REPEATS', default=getattr(settings, 'HARNESS_DEFAULT_REPEATS', 10), cast=int),
            'seeds': source('SEEDS', default='', cast=Csv(int)),
            'include_baselines': source('INCLUDE_BASELINES', default=True, cast=bool),
            'include_oracle': source('INCLUDE_ORACLE', default=True, cast=bool),
            'include_adequate': source('INCLUDE_ADEQUATE', default=False, cast=bool),
            'oracle_time_cap': source('ORACLE_TIME_CAP', default=None),
            'population_size': source('GA_POPULATION_SIZE', default=None),
            'max_generations': source('GA_MAX_GENERATIONS', default=None),
            'cbow_dim': source('CBOW_DIM', default=None),
            'cbow_epochs': source('CBOW_EPOCHS', default=None),
            'cbow_window': source('CBOW_WINDOW', default=None),
            'vectors_path': source('VECTORS', default=None),
            'imported_kind': source('IMPORTED_KIND', default='sentence'),
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**{key: value for key, value in values.items() if value is not None})
