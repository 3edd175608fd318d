"""
Domain types for requirement-traced test suites.

Test case order inside a ``Corpus`` is file order; it defines the position
of each test case in every selection vector.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np


@dataclass(frozen=True)
class TestCase:
    """A natural-language test case traced to one or more requirements."""

    __test__ = False  # not a pytest test class

    id: str
    requirement_ids: tuple[str, ...]
    steps: tuple[str, ...]

    @property
    def raw_text(self) -> str:
        return '\n'.join(self.steps)

    @property
    def cover(self) -> frozenset[str]:
        return frozenset(self.requirement_ids)


@dataclass(frozen=True)
class Corpus:
    """Requirements plus the ordered test suite that covers them."""

    requirements: tuple[str, ...]
    test_cases: tuple[TestCase, ...]

    @property
    def m(self) -> int:
        return len(self.test_cases)

    @property
    def n_req(self) -> int:
        return len(self.requirements)

    @cached_property
    def ids(self) -> tuple[str, ...]:
        return tuple(case.id for case in self.test_cases)

    @cached_property
    def positions(self) -> dict[str, int]:
        return {case_id: index for index, case_id in enumerate(self.ids)}

    @cached_property
    def requirement_positions(self) -> dict[str, int]:
        return {req: index for index, req in enumerate(self.requirements)}

    @cached_property
    def coverage_matrix(self) -> np.ndarray:
        """Boolean m x n_req incidence matrix: case i covers requirement r."""
        matrix = np.zeros((self.m, self.n_req), dtype=bool)
        for i, case in enumerate(self.test_cases):
            for req in case.requirement_ids:
                position = self.requirement_positions.get(req)
                if position is not None:
                    matrix[i, position] = True
        matrix.setflags(write=False)
        return matrix

    @cached_property
    def cases_by_requirement(self) -> tuple[tuple[int, ...], ...]:
        """Case positions under each requirement, in requirement order."""
        return tuple(
            tuple(int(i) for i in np.flatnonzero(self.coverage_matrix[:, r]))
            for r in range(self.n_req)
        )

    def case(self, case_id: str) -> TestCase:
        return self.test_cases[self.positions[case_id]]

    def covers_all(self, bits: np.ndarray) -> bool:
        """True when the selected positions cover every requirement."""
        selected = np.asarray(bits, dtype=bool)
        if not selected.any():
            return self.n_req == 0
        return bool(self.coverage_matrix[selected].any(axis=0).all())


@dataclass(frozen=True)
class FaultMatrix:
    """Evaluation-only ground truth: which faults each test case detects."""

    fault_ids: tuple[str, ...]
    detects: Mapping[str, frozenset[str]] = field(default_factory=dict)

    @property
    def f_unique(self) -> int:
        return len(self.fault_ids)

    def faults_of(self, case_id: str) -> frozenset[str]:
        return self.detects.get(case_id, frozenset())

    def union(self, case_ids) -> frozenset[str]:
        detected = set()
        for case_id in case_ids:
            detected.update(self.faults_of(case_id))
        return frozenset(detected)


@dataclass(frozen=True)
class Finding:
    code: str
    message: str


@dataclass
class ValidationReport:
    errors: list[Finding] = field(default_factory=list)
    warnings: list[Finding] = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.errors

    def error(self, code: str, message: str):
        self.errors.append(Finding(code, message))

    def warn(self, code: str, message: str):
        self.warnings.append(Finding(code, message))
