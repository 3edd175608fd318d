"""
Evaluation metrics for a minimized suite.
"""


def fdr(subset, faults) -> float:
    """Unique faults detected by ``subset`` over unique faults detected by the full suite."""
    detected_by_full = faults.union(faults.detects)
    if not detected_by_full:
        return 0.0
    return len(faults.union(subset)) / len(detected_by_full)


def coverage(subset, corpus) -> float:
    """Share of requirements traced to at least one test case of ``subset``."""
    if corpus.n_req == 0:
        return 0.0
    covered = set()
    for case_id in subset:
        covered.update(corpus.case(case_id).requirement_ids)
    return len(covered & set(corpus.requirements)) / corpus.n_req
