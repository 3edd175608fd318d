"""
Tests for the preprocessing methods and tokenizer
"""
from django.test import SimpleTestCase

from apps.preprocess.services import (
    EmptyDocument,
    PreprocessMethod,
    lemmatize,
    normalize_pm1,
    preprocess,
    preprocess_corpus,
    tokenize,
)
from tests.factories import traced_corpus


class TokenizeTests(SimpleTestCase):
    """Test the deterministic tokenizer"""

    def test_punctuation_splits_words(self):
        self.assertEqual(tokenize('x,y'), ['x', 'y'])

    def test_operator_chunk_kept(self):
        """Test a chunk with no word characters survives as one token"""
        self.assertEqual(tokenize('SIGNAL_A = 1'), ['SIGNAL_A', '=', '1'])

    def test_dotted_identifier(self):
        self.assertEqual(tokenize('version v1.2 ready.'), ['version', 'v1.2', 'ready'])


class LemmatizeTests(SimpleTestCase):
    """Test suffix rules and the domain verb table"""

    def test_domain_verbs(self):
        for token, lemma in [('sets', 'set'), ('setting', 'set'), ('sent', 'send'),
                             ('checked', 'check'), ('awaiting', 'await')]:
            self.assertEqual(lemmatize(token), lemma)

    def test_plural_rules(self):
        self.assertEqual(lemmatize('responses'), 'response')
        self.assertEqual(lemmatize('bodies'), 'body')
        self.assertEqual(lemmatize('passes'), 'pass')
        self.assertEqual(lemmatize('status'), 'status')

    def test_verb_suffixes(self):
        self.assertEqual(lemmatize('running'), 'run')
        self.assertEqual(lemmatize('stopped'), 'stop')

    def test_identifiers_untouched(self):
        """Test identifiers and numbers pass through"""
        self.assertEqual(lemmatize('signal_speeds'), 'signal_speeds')
        self.assertEqual(lemmatize('100'), '100')
        self.assertEqual(lemmatize('v1.2s'), 'v1.2s')


class PreprocessTests(SimpleTestCase):
    """Test PM1, PM2 and PM3"""

    def test_pm1_lowercases_and_flattens(self):
        doc = preprocess('Read  variable\r\nVariable_A', PreprocessMethod.PM1, 'TC1')
        self.assertEqual(doc.normalized_text, 'read variable variable_a')
        self.assertEqual(doc.tokens, ('read', 'variable', 'variable_a'))
        self.assertEqual(doc.test_case_id, 'TC1')

    def test_pm1_idempotent(self):
        text = '  Set\tGlobal Preconditions:\n BRAKE_ECU mode = NORMAL '
        once = normalize_pm1(text)
        self.assertEqual(normalize_pm1(once), once)

    def test_pm2_lemmatizes(self):
        doc = preprocess('Checks responses.', PreprocessMethod.PM2)
        self.assertEqual(doc.tokens, ('check', 'response'))
        self.assertEqual(doc.normalized_text, 'check response')

    def test_pm2_drops_operators(self):
        """Test punctuation-only tokens are removed by PM2"""
        self.assertEqual(preprocess('SIGNAL_A = 1', PreprocessMethod.PM2).tokens, ('signal_a', '1'))

    def test_pm3_is_identity(self):
        text = 'Set Wheel_Speed = 10\nCheck Brake_Light == 1'
        doc = preprocess(text, PreprocessMethod.PM3)
        self.assertEqual(doc.normalized_text, text)
        self.assertEqual(doc.tokens, tuple(text.split()))

    def test_method_accepts_string(self):
        self.assertEqual(preprocess('A b', 'pm1').tokens, ('a', 'b'))

    def test_empty_document(self):
        for method in PreprocessMethod:
            with self.assertRaises(EmptyDocument):
                preprocess('  \n ', method, 'TC9')

    def test_punctuation_only_document(self):
        """Test PM2 rejects a document with no word tokens"""
        with self.assertRaises(EmptyDocument):
            preprocess('== !=', PreprocessMethod.PM2)

    def test_corpus_order(self):
        corpus = traced_corpus([['R1'], ['R2']], texts=['Reads A', 'Sends B'])
        docs = preprocess_corpus(corpus, PreprocessMethod.PM2)
        self.assertEqual([doc.test_case_id for doc in docs], ['T0', 'T1'])
        self.assertEqual(docs[1].tokens, ('send', 'b'))
