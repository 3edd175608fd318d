"""
Embed Corpus
Builds TF-IDF sentence vectors or trains CBOW / Skip-Gram word vectors and
writes them in the word2vec text format
"""
from apps.common.commands import EngineCommand
from apps.corpus.services import parse_corpus
from apps.embed.tfidf import tfidf_embed
from apps.embed.vectors import export_sentence_vectors, export_word_vectors
from apps.embed.word2vec import Architecture, cbow_config, train_cbow
from apps.preprocess.services import PreprocessMethod, preprocess_corpus


class Command(EngineCommand):
    help = "Compute test-case representations"

    def add_arguments(self, parser):
        parser.add_argument('--corpus', type=str, help='Corpus file (JSON Lines)')
        parser.add_argument('--preprocess', choices=[m.value for m in PreprocessMethod], default=None)
        parser.add_argument('--representation', choices=['tfidf', 'cbow', 'skipgram'], default=None)
        parser.add_argument('--window', type=int, default=None)
        parser.add_argument('--dim', type=int, default=None)
        parser.add_argument('--epochs', type=int, default=None)

    def handle(self, *args, **options):
        corpus = parse_corpus(self.require(options, 'corpus'))
        method = PreprocessMethod(self.option(options, 'preprocess', default='pm2'))
        representation = self.option(options, 'representation', default='tfidf')
        out = self.require(options, 'out')

        docs = preprocess_corpus(corpus, method)

        if representation == 'tfidf':
            vectors = tfidf_embed(docs)
            export_sentence_vectors(vectors, out)
            self.stdout.write(self.style.SUCCESS(
                f"TF-IDF: {len(vectors.keys)} vectors, dim {vectors.dim} -> {out}"
            ))
            return

        config = cbow_config(
            window=self.option(options, 'window', key='CBOW_WINDOW', cast=int),
            dim=self.option(options, 'dim', key='CBOW_DIM', cast=int),
            epochs=self.option(options, 'epochs', key='CBOW_EPOCHS', cast=int),
            seed=self.option(options, 'seed', default=1, cast=int),
            architecture=Architecture(representation),
        )
        vectors = train_cbow(docs, config)
        export_word_vectors(vectors, out)
        self.stdout.write(self.style.SUCCESS(
            f"{representation}: {vectors.vocab_size} word vectors, dim {vectors.dim} -> {out}"
        ))
