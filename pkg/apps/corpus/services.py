"""
Corpus services: parse, serialize, validate and summarize requirement-traced
test suites and their fault matrices.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable, Optional

import orjson
from pydantic import ValidationError

from apps.common.errors import EngineError, ValidationFailure
from .records import CorpusHeaderRecord, FaultRecord, TestCaseRecord
from .types import Corpus, FaultMatrix, TestCase, ValidationReport

logger = logging.getLogger(__name__)


class CorpusError(ValidationFailure):
    """Base exception for unusable corpus or fault files."""
    pass


class MalformedRecord(CorpusError):
    """Raised when a line is not a valid record."""

    def __init__(self, line_no: int, detail: str):
        self.line_no = line_no
        super().__init__(f'line {line_no}: {detail}')


class DuplicateId(CorpusError):
    """Raised when a test case id appears twice."""

    def __init__(self, case_id: str, line_no: Optional[int] = None):
        self.case_id = case_id
        self.line_no = line_no
        where = f' (line {line_no})' if line_no else ''
        super().__init__(f'DuplicateId("{case_id}"){where}')


class UnknownRequirement(CorpusError):
    """Raised when a test case traces to an undeclared requirement."""

    def __init__(self, requirement_id: str, line_no: Optional[int] = None):
        self.requirement_id = requirement_id
        self.line_no = line_no
        where = f' (line {line_no})' if line_no else ''
        super().__init__(f'UnknownRequirement("{requirement_id}"){where}')


class RedundancyUndefined(EngineError):
    """Raised when the redundancy level has an empty fault union."""
    pass


class EmptySetsError(EngineError):
    """Raised when the Jaccard similarity of two empty sets is requested."""
    pass


def _records(lines: Iterable[str]):
    """Yield (line number, decoded object) for every non-blank line."""
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            yield line_no, orjson.loads(line)
        except orjson.JSONDecodeError as exc:
            raise MalformedRecord(line_no, f'invalid JSON ({exc})') from exc


def _validated(model, line_no, payload):
    try:
        return model.model_validate(payload)
    except ValidationError as exc:
        detail = '; '.join(
            f"{'.'.join(str(p) for p in err['loc']) or 'record'}: {err['msg']}" for err in exc.errors()
        )
        raise MalformedRecord(line_no, detail) from exc


def parse_corpus_text(text: str) -> Corpus:
    """Parse corpus JSON Lines held in memory."""
    header = None
    cases: list[TestCase] = []
    seen: set[str] = set()

    for line_no, payload in _records(text.splitlines()):
        if header is None:
            header = _validated(CorpusHeaderRecord, line_no, payload)
            declared = set(header.requirements)
            if len(declared) != len(header.requirements):
                raise MalformedRecord(line_no, 'duplicate requirement id in header')
            continue

        record = _validated(TestCaseRecord, line_no, payload)
        if record.id in seen:
            raise DuplicateId(record.id, line_no)
        for requirement_id in record.requirement_ids:
            if requirement_id not in declared:
                raise UnknownRequirement(requirement_id, line_no)
        seen.add(record.id)
        cases.append(TestCase(
            id=record.id,
            requirement_ids=tuple(record.requirement_ids),
            steps=tuple(record.steps),
        ))

    if header is None:
        raise MalformedRecord(1, 'missing requirements header record')

    corpus = Corpus(requirements=tuple(header.requirements), test_cases=tuple(cases))
    logger.debug(f'Parsed corpus: m={corpus.m} n_req={corpus.n_req}')
    return corpus


def parse_corpus(path) -> Corpus:
    """Load a corpus file; test-case order is file order."""
    path = Path(path)
    if not path.exists():
        raise CorpusError(f'Corpus file {path} does not exist.')
    return parse_corpus_text(path.read_text(encoding='utf-8'))


def serialize_corpus(corpus: Corpus) -> str:
    lines = [orjson.dumps({'requirements': list(corpus.requirements)})]
    for case in corpus.test_cases:
        lines.append(orjson.dumps({
            'id': case.id,
            'requirement_ids': list(case.requirement_ids),
            'steps': list(case.steps),
        }))
    return ''.join(line.decode('utf-8') + '\n' for line in lines)


def write_corpus(corpus: Corpus, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_corpus(corpus), encoding='utf-8')


def parse_faults_text(text: str) -> FaultMatrix:
    """Parse fault-matrix JSON Lines held in memory."""
    detects: dict[str, frozenset[str]] = {}
    fault_ids: dict[str, None] = {}

    for line_no, payload in _records(text.splitlines()):
        record = _validated(FaultRecord, line_no, payload)
        if record.test_case_id in detects:
            raise DuplicateId(record.test_case_id, line_no)
        detects[record.test_case_id] = frozenset(record.fault_ids)
        for fault_id in record.fault_ids:
            fault_ids.setdefault(fault_id, None)

    return FaultMatrix(fault_ids=tuple(fault_ids), detects=detects)


def parse_faults(path) -> FaultMatrix:
    path = Path(path)
    if not path.exists():
        raise CorpusError(f'Fault matrix file {path} does not exist.')
    return parse_faults_text(path.read_text(encoding='utf-8'))


def serialize_faults(faults: FaultMatrix, corpus: Optional[Corpus] = None) -> str:
    """One record per test case; corpus order when a corpus is given."""
    order = corpus.ids if corpus is not None else tuple(faults.detects)
    lines = []
    for case_id in order:
        if case_id not in faults.detects:
            continue
        detected = faults.detects[case_id]
        ranked = [fault_id for fault_id in faults.fault_ids if fault_id in detected]
        lines.append(orjson.dumps({'test_case_id': case_id, 'fault_ids': ranked}).decode('utf-8') + '\n')
    return ''.join(lines)


def write_faults(faults: FaultMatrix, path, corpus: Optional[Corpus] = None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_faults(faults, corpus), encoding='utf-8')


def redundancy_level(corpus: Corpus, faults: FaultMatrix, subset=None) -> float:
    """
    Total detections divided by unique detected faults, over ``subset``
    (test-case ids) or the whole corpus.
    """
    case_ids = corpus.ids if subset is None else tuple(subset)
    unknown = [case_id for case_id in case_ids if case_id not in corpus.positions]
    if unknown:
        raise CorpusError(f'Unknown test case ids in subset: {sorted(unknown)[:5]}')

    total_detections = sum(len(faults.faults_of(case_id)) for case_id in case_ids)
    unique = len(faults.union(case_ids))
    if unique == 0:
        raise RedundancyUndefined('Redundancy level is undefined: the selection detects no fault.')
    return total_detections / unique


def jaccard(a, b) -> float:
    a, b = set(a), set(b)
    union = a | b
    if not union:
        raise EmptySetsError('Jaccard similarity is undefined for two empty sets.')
    return len(a & b) / len(union)


def validate_corpus(corpus: Corpus, faults: Optional[FaultMatrix] = None) -> ValidationReport:
    """Collect every finding about the corpus; never raises, never mutates."""
    report = ValidationReport()

    covered = set()
    for case in corpus.test_cases:
        if not case.requirement_ids:
            report.error('EmptyCoverage', f'Test case {case.id} covers no requirement.')
        elif len(case.cover) > 1:
            report.warn('MultiRequirementCase', f'Test case {case.id} covers {len(case.cover)} requirements.')
        if not any(step.strip() for step in case.steps):
            report.error('EmptySteps', f'Test case {case.id} has no step text.')
        covered.update(case.requirement_ids)

    for requirement in corpus.requirements:
        if requirement not in covered:
            report.error('UncoveredRequirement', f'Requirement {requirement} is not covered by any test case.')

    report.stats = {'m': corpus.m, 'n_req': corpus.n_req}

    if faults is not None:
        for case_id in faults.detects:
            if case_id not in corpus.positions:
                report.error('DanglingFaultRef', f'Fault record references unknown test case {case_id}.')
        report.stats['F_unique'] = faults.f_unique
        if faults.f_unique == 0:
            report.error('NoFaults', 'Fault matrix detects no fault.')
        else:
            try:
                report.stats['RL'] = round(redundancy_level(corpus, faults), 6)
            except RedundancyUndefined:
                report.error('NoFaults', 'No corpus test case detects a fault.')

    for finding in report.warnings:
        logger.warning(f'{finding.code}: {finding.message}')
    return report
