"""
Synthetic requirement-traced corpora with planted faults.

Test cases come in families: a base case plus clones that copy its steps
with new parameter values and at most one renamed identifier. Faults are
attached to whole families, so clones always share their fault sets and
textual similarity carries information about fault overlap. Fault homes
are spread evenly over requirements, not over cases, so a small
requirement holds as many faults as a large one.
"""
import logging
import re

import numpy as np
from django.conf import settings
from faker import Faker
from pydantic import BaseModel, ConfigDict, Field, model_validator

from apps.corpus.types import Corpus, FaultMatrix, TestCase

from .errors import UnsatisfiableSynthConfig

logger = logging.getLogger(__name__)

DEFAULT_STEP_TEMPLATES = (
    'Set {signal} = {value}',
    'Set {signal} = {value} on {component}',
    'Create Fault Condition: {fault_signal} = {value}',
    'Remove Fault Condition: {fault_signal}',
    'Wait {duration} ms',
    'Send {message} on {bus}',
    'Read {signal} from {component}',
    'Check {signal} == {value}',
    'Check DTC {dtc} status is {status}',
)
PRECONDITION_TEMPLATE = 'Set Global Preconditions: {component} mode = {mode}'
CLOSING_TEMPLATE = 'Check {signal} == {value}'

MODES = ('NORMAL', 'SLEEP', 'DIAGNOSTIC', 'LIMP_HOME', 'STANDBY')
STATUSES = ('ACTIVE', 'PASSIVE', 'CONFIRMED', 'PENDING')
BUSES = ('CAN1', 'CAN2', 'LIN', 'FLEXRAY')

_PLACEHOLDER = re.compile(r'\{(\w+)\}')
_IDENTIFIER_FIELDS = ('signal', 'fault_signal', 'component', 'message', 'dtc')


class SynthConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    n_req: int = Field(54, ge=1)
    n_cases: int = Field(736, ge=1)
    n_faults: int = Field(220, ge=1)
    target_rl: float = Field(11.86, ge=1)
    clone_rate: float = Field(0.5, ge=0, lt=1)
    # Zipf exponent of cases per requirement; 0 spreads cases evenly
    cases_per_req_skew: float = Field(1.2, ge=0)
    # Zipf exponent of how many families detect each fault
    fault_skew: float = Field(1.0, ge=0)
    # chance that an extra fault detection stays within the fault's requirement
    fault_locality: float = Field(0.5, ge=0, le=1)
    steps_min: int = Field(4, ge=2)
    steps_max: int = Field(8, ge=2)
    step_templates: tuple[str, ...] = DEFAULT_STEP_TEMPLATES
    rl_tolerance: float = Field(0.05, gt=0)
    seed: int = 0

    @model_validator(mode='after')
    def _check(self):
        if self.n_cases < self.n_req:
            raise ValueError('n_cases must be at least n_req so every requirement gets a case')
        if self.steps_max < self.steps_min:
            raise ValueError('steps_max must be >= steps_min')
        return self


def synth_config(**overrides) -> SynthConfig:
    """``settings.SYNTH_DEFAULTS`` with non-None overrides applied."""
    values = dict(getattr(settings, 'SYNTH_DEFAULTS', {}))
    values.update({key: value for key, value in overrides.items() if value is not None})
    return SynthConfig(**values)


def _zipf_weights(n, exponent, rng):
    weights = 1.0 / np.arange(1, n + 1) ** exponent
    return rng.permutation(weights / weights.sum())


class _Vocabulary:
    """Identifier pools per requirement, drawn from a seeded Faker."""

    def __init__(self, seed):
        self.fake = Faker()
        self.fake.seed_instance(seed)

    def signal(self):
        return '_'.join(self.fake.word().capitalize() for _ in range(2)) + '_Sig'

    def component(self):
        return self.fake.word().upper() + '_ECU'

    def message(self):
        return 'MSG_' + self.fake.lexify('????').upper()

    def dtc(self):
        return self.fake.bothify('P0###')

    def pool(self):
        return {
            'signal': [self.signal() for _ in range(4)],
            'fault_signal': [self.signal() for _ in range(2)],
            'component': [self.component() for _ in range(2)],
            'message': [self.message() for _ in range(2)],
            'dtc': [self.dtc() for _ in range(2)],
        }


def _fill(template, values):
    return _PLACEHOLDER.sub(lambda match: str(values[match.group(1)]), template)


def _draw_values(pool, rng):
    return {
        'signal': pool['signal'][rng.integers(len(pool['signal']))],
        'fault_signal': pool['fault_signal'][rng.integers(len(pool['fault_signal']))],
        'component': pool['component'][rng.integers(len(pool['component']))],
        'message': pool['message'][rng.integers(len(pool['message']))],
        'dtc': pool['dtc'][rng.integers(len(pool['dtc']))],
        'bus': BUSES[rng.integers(len(BUSES))],
        'mode': MODES[rng.integers(len(MODES))],
        'status': STATUSES[rng.integers(len(STATUSES))],
        'value': int(rng.integers(0, 256)),
        'duration': int(rng.integers(1, 51)) * 10,
    }


def _base_case(config, pool, rng):
    """Steps as (template, values) pairs so clones can re-render them."""
    n_steps = int(rng.integers(config.steps_min, config.steps_max + 1))
    steps = [(PRECONDITION_TEMPLATE, _draw_values(pool, rng))]
    for _ in range(n_steps - 2):
        template = config.step_templates[rng.integers(len(config.step_templates))]
        steps.append((template, _draw_values(pool, rng)))
    steps.append((CLOSING_TEMPLATE, _draw_values(pool, rng)))
    return steps


def _clone_case(base_steps, vocabulary, rng):
    """New parameter values everywhere, and at most one identifier renamed."""
    used = {}
    for template, values in base_steps:
        for field in _PLACEHOLDER.findall(template):
            if field in _IDENTIFIER_FIELDS:
                used.setdefault(values[field], field)
    old = new = None
    if used and rng.random() < 0.5:
        identifiers = list(used)
        old = identifiers[rng.integers(len(identifiers))]
        field = used[old]
        new = getattr(vocabulary, 'signal' if field == 'fault_signal' else field)()

    steps = []
    for template, values in base_steps:
        values = dict(values)
        values['value'] = int(rng.integers(0, 256))
        values['duration'] = int(rng.integers(1, 51)) * 10
        if old is not None:
            for field in _IDENTIFIER_FIELDS:
                if values[field] == old:
                    values[field] = new
        steps.append((template, values))
    return steps


def _plant_faults(config, families, family_requirement, rng):
    """
    Home every fault on a family of a uniformly drawn requirement, then
    add detections until the target RL is met.
    """
    n_families = len(families)
    sizes = np.array([len(members) for members in families])
    target = int(round(config.target_rl * config.n_faults))
    if target > config.n_faults * int(sizes.sum()):
        raise UnsatisfiableSynthConfig(
            f'RL {config.target_rl} exceeds the {sizes.sum()} test cases available per fault'
        )

    detects = [set() for _ in range(n_families)]
    by_requirement = {}
    for family, requirement in enumerate(family_requirement):
        by_requirement.setdefault(requirement, []).append(family)

    owners = sorted(by_requirement)
    home = []
    for owner in rng.integers(len(owners), size=config.n_faults):
        siblings = by_requirement[owners[owner]]
        home.append(siblings[rng.integers(len(siblings))])
    total = 0
    for fault, family in enumerate(home):
        detects[family].add(fault)
        total += sizes[family]

    upper = target * (1 + config.rl_tolerance)
    if total > upper:
        raise UnsatisfiableSynthConfig(
            f'RL {config.target_rl} is below what {config.n_faults} faults over these families allow '
            f'(at least {total / config.n_faults:.2f})'
        )

    popularity = _zipf_weights(config.n_faults, config.fault_skew, rng)
    attempts = 0
    max_attempts = 50 * target + 1000
    while total < target and attempts < max_attempts:
        attempts += 1
        fault = int(rng.choice(config.n_faults, p=popularity))
        if rng.random() < config.fault_locality:
            siblings = by_requirement[family_requirement[home[fault]]]
            family = siblings[rng.integers(len(siblings))]
        else:
            family = int(rng.integers(n_families))
        if fault in detects[family] or total + sizes[family] > target:
            continue
        detects[family].add(fault)
        total += sizes[family]

    realized = total / config.n_faults
    if abs(realized - config.target_rl) > config.rl_tolerance * config.target_rl:
        raise UnsatisfiableSynthConfig(
            f'Realized RL {realized:.3f} is more than {config.rl_tolerance:.0%} from target {config.target_rl}'
        )
    return detects


def synth_corpus(config: SynthConfig):
    """Deterministic (Corpus, FaultMatrix) for ``config.seed``."""
    rng = np.random.default_rng(config.seed)
    vocabulary = _Vocabulary(config.seed)

    requirements = tuple(f'REQ-{i + 1:03d}' for i in range(config.n_req))
    per_requirement = 1 + rng.multinomial(
        config.n_cases - config.n_req, _zipf_weights(config.n_req, config.cases_per_req_skew, rng)
    )

    # family -> list of (requirement index, steps); first member is the base case
    families = []
    family_requirement = []
    for r, count in enumerate(per_requirement):
        pool = vocabulary.pool()
        local = []
        for _ in range(int(count)):
            if local and rng.random() < config.clone_rate:
                family = local[rng.integers(len(local))]
                base_steps = families[family][0]
                families[family].append(_clone_case(base_steps, vocabulary, rng))
            else:
                families.append([_base_case(config, pool, rng)])
                family_requirement.append(r)
                local.append(len(families) - 1)

    detects = _plant_faults(config, families, family_requirement, rng)

    members = [
        (family, member) for family, steps_list in enumerate(families) for member in range(len(steps_list))
    ]
    order = rng.permutation(len(members))
    fault_ids = tuple(f'F-{i + 1:03d}' for i in range(config.n_faults))

    test_cases = []
    fault_map = {}
    for position, member_index in enumerate(order):
        family, member = members[member_index]
        case_id = f'TC-{position + 1:04d}'
        steps = tuple(_fill(template, values) for template, values in families[family][member])
        test_cases.append(TestCase(
            id=case_id,
            requirement_ids=(requirements[family_requirement[family]],),
            steps=steps,
        ))
        if detects[family]:
            fault_map[case_id] = frozenset(fault_ids[f] for f in sorted(detects[family]))

    corpus = Corpus(requirements=requirements, test_cases=tuple(test_cases))
    faults = FaultMatrix(fault_ids=fault_ids, detects=fault_map)
    logger.info(
        f'Synthesized {corpus.m} test cases over {corpus.n_req} requirements in '
        f'{len(families)} families; {config.n_faults} faults'
    )
    return corpus, faults
