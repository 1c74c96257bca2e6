import numpy as np
import pytest
from hypothesis import given, strategies as st

from mitra.embed import (
    EmbedderConfig,
    RemoteEmbedder,
    StubEmbedder,
    canonicalize,
    load_synonym_table,
    make_embedder,
    normalize,
)
from mitra.errors import DimensionMismatch, EmbedderUnavailable, FormatError, ZeroVector
from mitra.wire import RecordingTransport, TransportError


def cosine(a, b):
    return float(np.dot(a, b))


class TestNormalize:
    def test_three_four_vector(self):
        v = np.zeros(768)
        v[0], v[1] = 3.0, 4.0
        out = normalize(v)
        assert out[0] == pytest.approx(0.6)
        assert out[1] == pytest.approx(0.8)
        assert np.all(out[2:] == 0.0)

    def test_unit_vector_unchanged(self):
        v = np.zeros(16)
        v[3] = 1.0
        assert np.max(np.abs(normalize(v) - v)) < 1e-12

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroVector):
            normalize(np.zeros(8))


class TestStubEmbedder:
    def make(self, dimension=64, seed=0, synonym_table_path=None):
        return StubEmbedder(
            EmbedderConfig(
                mode="stub", dimension=dimension, stub_seed=seed, synonym_table_path=synonym_table_path
            )
        )

    def test_same_text_twice_is_bitwise_identical(self):
        embedder = self.make()
        vectors = embedder.embed_texts(["the muon selection", "the muon selection"])
        assert vectors[0].tobytes() == vectors[1].tobytes()

    def test_unit_norm_and_dimension(self):
        embedder = self.make(dimension=128)
        vectors = embedder.embed_texts(["alpha beta", "gamma"])
        assert vectors.shape == (2, 128)
        assert np.allclose(np.linalg.norm(vectors, axis=1), 1.0, atol=1e-9)

    def test_token_order_does_not_matter(self):
        embedder = self.make()
        a, b = embedder.embed_texts(["muon trigger threshold", "threshold muon trigger"])
        assert a.tobytes() == b.tobytes()

    def test_disjoint_vocabulary_far_from_self_similarity(self):
        embedder = self.make()
        a, b = embedder.embed_texts(["quark gluon plasma", "detector alignment campaign"])
        assert abs(cosine(a, b)) < cosine(a, a) - 0.5

    def test_synonym_table_pulls_paraphrase_close(self, tmp_path):
        table = tmp_path / "syn.tsv"
        table.write_text("transverse momentum\tpt\n", encoding="utf-8")
        embedder = self.make(synonym_table_path=str(table))
        phrase, paraphrase, unrelated = embedder.embed_texts(
            ["transverse momentum requirement", "pt cut requirement", "detector alignment"]
        )
        assert cosine(phrase, paraphrase) > cosine(phrase, unrelated)
        assert cosine(phrase, paraphrase) > cosine(paraphrase, unrelated)

    def test_empty_text_rejected(self):
        with pytest.raises(ValueError):
            self.make().embed_texts(["fine text", ""])

    def test_order_and_cardinality_preserved(self):
        embedder = self.make()
        texts = ["one fish", "two fish", "red fish"]
        vectors = embedder.embed_texts(texts)
        assert len(vectors) == 3
        single = embedder.embed_texts(["two fish"])[0]
        assert vectors[1].tobytes() == single.tobytes()

    def test_seed_changes_vectors(self):
        a = self.make(seed=1).embed_texts(["same text"])[0]
        b = self.make(seed=2).embed_texts(["same text"])[0]
        assert a.tobytes() != b.tobytes()

    @given(st.lists(st.sampled_from(["muon", "jet", "veto", "fit"]), min_size=1, max_size=6))
    def test_permutation_invariance_property(self, tokens):
        embedder = self.make(dimension=32)
        forward = embedder.embed_texts([" ".join(tokens)])[0]
        backward = embedder.embed_texts([" ".join(reversed(tokens))])[0]
        assert forward.tobytes() == backward.tobytes()


class TestSynonymTable:
    def test_round_trip_and_phrase_match(self, tmp_path):
        table_path = tmp_path / "syn.tsv"
        table_path.write_text("transverse momentum\tpt\nmissing energy\tmet\n", encoding="utf-8")
        table = load_synonym_table(table_path)
        assert canonicalize(["transverse", "momentum", "cut"], table) == ["pt", "cut"]
        assert canonicalize(["missing", "energy"], table) == ["met"]
        assert canonicalize(["unrelated"], table) == ["unrelated"]

    def test_longest_match_wins(self, tmp_path):
        table_path = tmp_path / "syn.tsv"
        table_path.write_text("missing\tabsent\nmissing energy\tmet\n", encoding="utf-8")
        table = load_synonym_table(table_path)
        assert canonicalize(["missing", "energy"], table) == ["met"]
        assert canonicalize(["missing", "muon"], table) == ["absent", "muon"]

    def test_malformed_line_raises(self, tmp_path):
        table_path = tmp_path / "syn.tsv"
        table_path.write_text("no tab separator here\n", encoding="utf-8")
        with pytest.raises(FormatError):
            load_synonym_table(table_path)


class TestRemoteEmbedder:
    def make(self, responder, dimension=8, max_batch=32):
        config = EmbedderConfig(
            mode="remote",
            endpoint_url="http://models.internal:9001/embed",
            dimension=dimension,
            max_batch=max_batch,
        )
        transport = RecordingTransport(responder)
        return RemoteEmbedder(config, transport), transport

    @staticmethod
    def good_responder(dimension):
        def respond(url, payload):
            vectors = []
            for i, _text in enumerate(payload["texts"]):
                v = [0.0] * dimension
                v[i % dimension] = 2.0
                vectors.append(v)
            return {"vectors": vectors}

        return respond

    def test_vectors_normalized_and_ordered(self):
        embedder, transport = self.make(self.good_responder(8))
        out = embedder.embed_texts(["a", "b"], role="passage")
        assert out.shape == (2, 8)
        assert np.allclose(np.linalg.norm(out, axis=1), 1.0)
        assert out[0][0] == 1.0 and out[1][1] == 1.0
        assert transport.calls[0][1] == {"texts": ["a", "b"], "role": "passage"}

    def test_batching_respects_max_batch(self):
        embedder, transport = self.make(self.good_responder(8), max_batch=2)
        embedder.embed_texts(["a", "b", "c", "d", "e"])
        assert [len(p["texts"]) for _, p in transport.calls] == [2, 2, 1]

    def test_wrong_dimension_raises(self):
        embedder, _ = self.make(lambda url, payload: {"vectors": [[1.0] * 512]}, dimension=768)
        with pytest.raises(DimensionMismatch):
            embedder.embed_texts(["text"])

    def test_wrong_count_raises(self):
        embedder, _ = self.make(lambda url, payload: {"vectors": []})
        with pytest.raises(DimensionMismatch):
            embedder.embed_texts(["text"])

    def test_transport_failure_maps_to_unavailable(self):
        def respond(url, payload):
            raise TransportError(url, "connection refused")

        embedder, _ = self.make(respond)
        with pytest.raises(EmbedderUnavailable):
            embedder.embed_texts(["text"])


def test_make_embedder_dispatch():
    assert isinstance(make_embedder(EmbedderConfig(mode="stub")), StubEmbedder)
    remote = make_embedder(EmbedderConfig(mode="remote", endpoint_url="http://x:1/e"))
    assert isinstance(remote, RemoteEmbedder)
    with pytest.raises(ValueError):
        EmbedderConfig(mode="remote")  # endpoint required
    with pytest.raises(ValueError):
        EmbedderConfig(dimension=0)
