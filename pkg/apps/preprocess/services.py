"""
Preprocessing methods PM1/PM2/PM3 and deterministic tokenization.

PM1 lowercases and flattens whitespace, PM2 additionally strips punctuation,
tokenizes and lemmatizes, PM3 keeps the raw text untouched.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from apps.common.errors import ValidationFailure


class EmptyDocument(ValidationFailure):
    """Raised when a test case has no text to preprocess."""
    pass


class PreprocessMethod(str, Enum):
    PM1 = 'pm1'
    PM2 = 'pm2'
    PM3 = 'pm3'


@dataclass(frozen=True)
class TokenizedDoc:
    test_case_id: str
    tokens: tuple[str, ...]
    normalized_text: str


_WHITESPACE = re.compile(r'\s+')
# Word characters include "_"; "." is kept only between word characters.
_WORD = re.compile(r'\w+(?:\.\w+)*')
_HAS_WORD = re.compile(r'\w')
_IDENTIFIER_MARKS = re.compile(r'[\d_.]')

# Domain verbs are folded by table, never by suffix rules.
LEMMA_EXCEPTIONS = {
    'set': 'set', 'sets': 'set', 'setting': 'set',
    'read': 'read', 'reads': 'read', 'reading': 'read',
    'send': 'send', 'sends': 'send', 'sending': 'send', 'sent': 'send',
    'check': 'check', 'checks': 'check', 'checking': 'check', 'checked': 'check',
    'await': 'await', 'awaits': 'await', 'awaiting': 'await', 'awaited': 'await',
}

_PLURAL_ES = ('sses', 'ches', 'shes', 'xes', 'zes')
_KEEP_S = ('ss', 'us', 'is')


def tokenize(text: str) -> list[str]:
    """
    Split on whitespace. Inside a chunk, punctuation separates words except
    "_" and a "." between alphanumerics; a chunk made only of punctuation is
    kept whole.
    """
    tokens = []
    for chunk in text.split():
        words = _WORD.findall(chunk)
        if words:
            tokens.extend(words)
        else:
            tokens.append(chunk)
    return tokens


def _undouble(stem: str) -> str:
    if len(stem) >= 2 and stem[-1] == stem[-2] and stem[-1] not in 'lsz':
        return stem[:-1]
    return stem


def lemmatize(token: str) -> str:
    """Rule-based suffix lemmatizer; identifiers and numbers pass through."""
    if token in LEMMA_EXCEPTIONS:
        return LEMMA_EXCEPTIONS[token]
    if len(token) <= 3 or _IDENTIFIER_MARKS.search(token):
        return token

    if token.endswith('ies') and len(token) > 4:
        return token[:-3] + 'y'
    if token.endswith(_PLURAL_ES):
        return token[:-2]
    if token.endswith('s') and not token.endswith(_KEEP_S):
        return token[:-1]
    if token.endswith('ing') and len(token) - 3 >= 3:
        return _undouble(token[:-3])
    if token.endswith('ed') and len(token) - 2 >= 3:
        return _undouble(token[:-2])
    return token


def normalize_pm1(text: str) -> str:
    return _WHITESPACE.sub(' ', text.lower()).strip()


def preprocess(raw_text: str, method: PreprocessMethod, test_case_id: str = '') -> TokenizedDoc:
    method = PreprocessMethod(method)
    if not raw_text or not raw_text.strip():
        raise EmptyDocument(f'Test case {test_case_id or "<anonymous>"} has no text.')

    if method is PreprocessMethod.PM3:
        return TokenizedDoc(test_case_id, tuple(raw_text.split()), raw_text)

    normalized = normalize_pm1(raw_text)
    if method is PreprocessMethod.PM1:
        return TokenizedDoc(test_case_id, tuple(normalized.split()), normalized)

    tokens = tuple(lemmatize(token) for token in tokenize(normalized) if _HAS_WORD.search(token))
    if not tokens:
        raise EmptyDocument(f'Test case {test_case_id or "<anonymous>"} has no word tokens.')
    return TokenizedDoc(test_case_id, tokens, ' '.join(tokens))


def preprocess_corpus(corpus, method: PreprocessMethod) -> tuple[TokenizedDoc, ...]:
    """Preprocess every test case, in corpus order."""
    return tuple(preprocess(case.raw_text, method, case.id) for case in corpus.test_cases)
