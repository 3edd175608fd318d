"""
Factories for corpora, fault matrices and similarity matrices used in tests.
"""
import factory
import numpy as np

from apps.corpus.types import Corpus, FaultMatrix, TestCase
from apps.similarity.services import Metric, SimilarityMatrix


class CaseFactory(factory.Factory):
    class Meta:
        model = TestCase

    id = factory.Sequence(lambda n: f'TC-{n:04d}')
    requirement_ids = ('REQ-001',)
    steps = factory.Sequence(lambda n: (
        'Set Global Preconditions: BRAKE_ECU mode = NORMAL',
        f'Set Wheel_Speed_Sig = {n}',
        'Check Brake_Light_Sig == 1',
    ))


class CorpusFactory(factory.Factory):
    class Meta:
        model = Corpus

    requirements = ('REQ-001', 'REQ-002')
    test_cases = factory.LazyAttribute(lambda corpus: tuple(
        CaseFactory(requirement_ids=(corpus.requirements[i % len(corpus.requirements)],))
        for i in range(2 * len(corpus.requirements))
    ))


def traced_corpus(requirement_lists, texts=None, prefix='T'):
    """
    Corpus whose i-th case traces to ``requirement_lists[i]``; case ids are
    ``T0``, ``T1``, ... and requirements are declared in first-use order.
    """
    requirements = []
    for reqs in requirement_lists:
        for req in reqs:
            if req not in requirements:
                requirements.append(req)
    cases = tuple(
        TestCase(
            id=f'{prefix}{i}',
            requirement_ids=tuple(reqs),
            steps=((texts[i],) if texts else (f'Set Signal_{i} = {i}', f'Check Output_{i} == 1')),
        )
        for i, reqs in enumerate(requirement_lists)
    )
    return Corpus(requirements=tuple(requirements), test_cases=cases)


def fault_matrix(detections):
    """``detections`` maps case id -> iterable of fault ids."""
    fault_ids = []
    for faults in detections.values():
        for fault in faults:
            if fault not in fault_ids:
                fault_ids.append(fault)
    return FaultMatrix(
        fault_ids=tuple(fault_ids),
        detects={case_id: frozenset(faults) for case_id, faults in detections.items() if faults},
    )


def similarity_matrix(values, metric=Metric.COSINE):
    values = np.array(values, dtype=np.float64)
    np.fill_diagonal(values, 1.0)
    return SimilarityMatrix(values=values, metric=metric)


def random_similarity(m, rng):
    raw = rng.random((m, m))
    return similarity_matrix((raw + raw.T) / 2)


def paired_corpus():
    """Twelve cases over two requirements; every case detects two of four faults."""
    corpus = traced_corpus([[f'R{i % 2}'] for i in range(12)])
    pairs = [('F0', 'F1'), ('F2', 'F3'), ('F0', 'F2')]
    return corpus, fault_matrix({case_id: pairs[i // 4] for i, case_id in enumerate(corpus.ids)})
