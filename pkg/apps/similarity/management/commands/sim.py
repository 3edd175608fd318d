"""
Build Similarity Matrix
Preprocesses a corpus, computes (or loads) its representation and writes
the normalized similarity matrix
"""
from apps.common.commands import EngineCommand
from apps.corpus.services import parse_corpus
from apps.embed.tfidf import tfidf_embed
from apps.embed.vectors import import_sentence_vectors, import_word_vectors
from apps.embed.word2vec import Architecture, cbow_config, train_cbow
from apps.preprocess.services import PreprocessMethod, preprocess_corpus
from apps.similarity.services import Metric, build_similarity_matrix, export_matrix


class Command(EngineCommand):
    help = "Compute the normalized pairwise similarity matrix of a corpus"

    def add_arguments(self, parser):
        parser.add_argument('--corpus', type=str, help='Corpus file (JSON Lines)')
        parser.add_argument('--preprocess', choices=[m.value for m in PreprocessMethod], default=None)
        parser.add_argument('--representation', choices=['tfidf', 'cbow', 'skipgram', 'imported'], default=None)
        parser.add_argument('--metric', choices=[m.value for m in Metric], default=None)
        parser.add_argument('--vectors', type=str, help='Imported word or sentence vectors')

    def handle(self, *args, **options):
        corpus = parse_corpus(self.require(options, 'corpus'))
        method = PreprocessMethod(self.option(options, 'preprocess', default='pm2'))
        representation = self.option(options, 'representation', default='tfidf')
        metric = Metric(self.option(options, 'metric', default='cosine'))
        out = self.require(options, 'out')
        seed = self.option(options, 'seed', default=1, cast=int)

        docs = preprocess_corpus(corpus, method)

        if representation == 'tfidf':
            vectors = tfidf_embed(docs)
        elif representation == 'imported':
            path = self.require(options, 'vectors')
            if metric is Metric.WMD:
                vectors = import_word_vectors(path, docs=docs)
            else:
                vectors = import_sentence_vectors(path, corpus=corpus)
        else:
            vectors = train_cbow(docs, cbow_config(seed=seed, architecture=Architecture(representation)))

        matrix = build_similarity_matrix(
            corpus, vectors, metric, docs=docs, provenance=f'{representation}/{method.value}'
        )
        export_matrix(matrix, out)
        self.stdout.write(self.style.SUCCESS(f"{metric.value} matrix ({matrix.m}x{matrix.m}) -> {out}"))
