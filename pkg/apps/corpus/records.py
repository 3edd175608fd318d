"""
Wire records for the corpus and fault-matrix JSON Lines files.
"""
from pydantic import BaseModel, ConfigDict, Field


class CorpusHeaderRecord(BaseModel):
    """First line of a corpus file: the declared requirement ids."""

    model_config = ConfigDict(extra='forbid', frozen=True)

    requirements: list[str] = Field(min_length=1)


class TestCaseRecord(BaseModel):
    """One test case per line."""

    __test__ = False

    model_config = ConfigDict(extra='forbid', frozen=True)

    id: str = Field(min_length=1)
    # Empty traceability is accepted here and rejected by validate_corpus.
    requirement_ids: list[str]
    steps: list[str] = Field(min_length=1)


class FaultRecord(BaseModel):
    """Faults detected by one test case."""

    model_config = ConfigDict(extra='forbid', frozen=True)

    test_case_id: str = Field(min_length=1)
    fault_ids: list[str]
