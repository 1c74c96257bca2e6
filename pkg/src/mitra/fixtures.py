"""Synthetic corpus and gold-set generator for offline evaluation.

The generated corpus is built around *concepts*: each concept has a jargon
term that appears only in one "fact" chunk of one analysis, plus a
plain-language paraphrase that appears only in queries. The shipped synonym
table maps each paraphrase onto its jargon term, so:

  * exact-phrase queries (set1) are easy for both the dense pipeline and
    the BM25 baseline,
  * paraphrased queries (set2) stay easy for the synonym-aware dense stubs
    while BM25, which matches raw keywords, mostly misses.

The generator enforces the vocabulary split (paraphrase tokens never occur
in any document) so the contrast cannot silently erode as templates change.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import AnalysisRecord, CorpusStore, Document, split_paragraphs
from .evalkit import GoldQuery, save_gold
from .lexical import tokenize

# (document jargon term, query-side paraphrase); paraphrase tokens are
# reserved for queries and must never appear in generated document text.
CONCEPTS: list[tuple[str, str]] = [
    ("ptcut", "transverse momentum requirement"),
    ("metfloor", "missing energy threshold"),
    ("btagwp", "bottom quark tagging point"),
    ("isocone", "lepton isolation cone size"),
    ("trigcurve", "trigger efficiency shape"),
    ("puweight", "pileup reweighting scheme"),
    ("jescorr", "jet energy scale calibration"),
    ("fakerate", "misidentified lepton fraction"),
    ("mvacut", "multivariate discriminant boundary"),
    ("masswin", "invariant mass window"),
    ("vtxdisp", "vertex displacement criterion"),
    ("lumiscale", "luminosity normalization factor"),
    ("tauveto", "hadronic tau rejection"),
    ("qcdest", "multijet contamination assessment"),
    ("ssregion", "same sign validation area"),
    ("unfoldreg", "spectrum unfolding regularization"),
    ("pdfvar", "parton density variation"),
    ("genfilter", "generator level filtering"),
    ("ecalgap", "calorimeter crack exclusion"),
    ("muonsf", "muon reconstruction weight"),
    ("zwindow", "dilepton resonance veto"),
    ("htsum", "scalar activity sum"),
    ("dphicut", "azimuthal separation limit"),
    ("cosmicrej", "cosmic ray removal"),
]

TOPICS = [
    "higgs",
    "darkmatter",
    "monojet",
    "diphoton",
    "zprime",
    "squark",
    "leptoquark",
    "monotop",
    "dijet",
    "charmonium",
    "gravitino",
    "axion",
]

_FACT_TEMPLATE = (
    "The {term} is central to the {topic} selection. "
    "Candidate events must satisfy the {term} before entering the signal region. "
    "Relaxing the {term} doubles the expected background yield."
)

_SET1_TEMPLATE = "Candidate events must satisfy the {term} before entering the signal region"

_SET2_TEMPLATES = [
    "how tight is the {paraphrase} here",
    "what {paraphrase} did they pick",
    "tell me about the {paraphrase} please",
]

_FILLER_SENTENCES = [
    "The {topic} search applies a staged selection to all simulated samples and to the recorded collision data.",
    "Composition of the residual background in the sideband stays stable across every bin of the final distribution.",
    "Systematic effects from the smoothing procedure are assessed in a dedicated study and propagated to the expected totals.",
    "The observed distribution agrees with the predicted composition after the complete selection chain.",
    "An orthogonal sample enriched in residual background validates the extrapolation into the signal region.",
    "Tables summarize the expected and observed counts for each stage of the {topic} selection.",
    "The fit model floats the dominant background rate together with the slope parameters in the sideband.",
    "Stability of the result is checked by repeating the extraction with an alternative binning of the discriminating variable.",
    "Corrections derived from dedicated control samples are applied to the simulated {topic} events.",
    "Statistical treatment follows the standard profile likelihood construction used across the collaboration.",
    "The selection acceptance for the {topic} process is evaluated with the full detector simulation.",
    "Residual disagreement between data and simulation enters the total as a dedicated nuisance term.",
]


@dataclass
class FixtureSet:
    out_dir: Path
    corpus_path: Path
    gold_paths: dict[str, Path]
    synonym_table_path: Path
    config_path: Path
    n_analyses: int
    n_chunks: int
    n_queries: dict[str, int]


def _paragraphs_for_doc(
    rng: random.Random, topic: str, fact_paragraph: str, n_filler: int
) -> list[str]:
    paragraphs = []
    for _ in range(n_filler):
        first, second = rng.sample(_FILLER_SENTENCES, 2)
        paragraphs.append(f"{first} {second}".format(topic=topic))
    paragraphs.insert(rng.randrange(len(paragraphs) + 1), fact_paragraph)
    return paragraphs


def build_fixture_corpus(
    seed: int = 13,
    n_analyses: int = 12,
    filler_paragraphs_per_doc: int = 10,
) -> tuple[CorpusStore, list[GoldQuery], list[tuple[str, str]]]:
    """Build the synthetic store, gold queries, and synonym pairs in memory.

    Every analysis holds two documents of (filler + 1 fact) paragraphs each,
    so the default settings give 12 analyses x 22 chunks, 24 queries per set.
    """
    if not 1 <= n_analyses <= min(len(TOPICS), len(CONCEPTS) // 2):
        raise ValueError(f"n_analyses must be in [1, {min(len(TOPICS), len(CONCEPTS) // 2)}]")
    rng = random.Random(seed)
    store = CorpusStore()
    gold: list[GoldQuery] = []
    synonyms: list[tuple[str, str]] = []

    concept_index = 0
    for a in range(n_analyses):
        topic = TOPICS[a]
        analysis_id = f"an-{a + 1:03d}"
        terms = [CONCEPTS[concept_index], CONCEPTS[concept_index + 1]]
        concept_index += 2
        abstract = (
            f"This note documents the {topic} search. The selection relies in particular "
            f"on the {terms[0][0]} and the {terms[1][0]} described in detail, together with "
            f"the standard background strategy for the {topic} final state."
        )
        store.add_analysis(
            AnalysisRecord(
                analysis_id=analysis_id,
                title=f"Search for {topic} production",
                abstract_text=abstract,
            )
        )
        for d, (term, paraphrase) in enumerate(terms, start=1):
            doc_id = f"{analysis_id}-doc{d}"
            fact_paragraph = _FACT_TEMPLATE.format(term=term, topic=topic)
            paragraphs = _paragraphs_for_doc(rng, topic, fact_paragraph, filler_paragraphs_per_doc)
            body = "\n\n".join(paragraphs)
            assert split_paragraphs(body) == paragraphs, "fixture paragraphs must survive chunking 1:1"
            created = store.ingest_document(
                Document(doc_id=doc_id, analysis_id=analysis_id, body_text=body, version=1)
            )
            fact_chunk_id = created[paragraphs.index(fact_paragraph)].chunk_id

            qnum = len(synonyms) + 1
            synonyms.append((paraphrase, term))
            gold.append(
                GoldQuery(
                    query_id=f"s1-{qnum:02d}",
                    analysis_id=analysis_id,
                    query_text=_SET1_TEMPLATE.format(term=term),
                    relevant_chunk_ids=frozenset({fact_chunk_id}),
                    set_label="set1",
                )
            )
            template = _SET2_TEMPLATES[(qnum - 1) % len(_SET2_TEMPLATES)]
            gold.append(
                GoldQuery(
                    query_id=f"s2-{qnum:02d}",
                    analysis_id=analysis_id,
                    query_text=template.format(paraphrase=paraphrase),
                    relevant_chunk_ids=frozenset({fact_chunk_id}),
                    set_label="set2",
                )
            )

    _check_vocabulary_split(store, gold)
    return store, gold, synonyms


def _check_vocabulary_split(store: CorpusStore, gold: list[GoldQuery]) -> None:
    """Paraphrased queries must share (almost) no raw tokens with documents,
    otherwise the keyword baseline stops being a meaningful contrast."""
    doc_vocab: set[str] = set()
    for chunk in store.chunks.values():
        doc_vocab.update(tokenize(chunk.text))
    allowed_overlap = {"the", "is"}
    for query in gold:
        if query.set_label != "set2":
            continue
        overlap = set(tokenize(query.query_text)) & doc_vocab
        leaked = overlap - allowed_overlap
        if leaked:
            raise AssertionError(
                f"set2 query {query.query_id} leaks document vocabulary: {sorted(leaked)}"
            )


def write_fixtures(
    out_dir: str | Path,
    seed: int = 13,
    n_analyses: int = 12,
    filler_paragraphs_per_doc: int = 10,
    stub_seed: int = 7,
) -> FixtureSet:
    """Write corpus, gold sets, synonym table, and a ready-to-run stub-mode
    service config under out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    store, gold, synonyms = build_fixture_corpus(seed, n_analyses, filler_paragraphs_per_doc)

    corpus_path = out_dir / "corpus.jsonl"
    with corpus_path.open("w", encoding="utf-8") as fh:
        for analysis in sorted(store.analyses.values(), key=lambda x: x.analysis_id):
            fh.write(
                json.dumps(
                    {
                        "kind": "analysis",
                        "analysis_id": analysis.analysis_id,
                        "title": analysis.title,
                        "abstract_text": analysis.abstract_text,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
        for doc in sorted(store.documents.values(), key=lambda x: x.doc_id):
            fh.write(
                json.dumps(
                    {
                        "kind": "document",
                        "doc_id": doc.doc_id,
                        "analysis_id": doc.analysis_id,
                        "body_text": doc.body_text,
                        "version": doc.version,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )

    synonym_table_path = out_dir / "synonyms.tsv"
    synonym_table_path.write_text(
        "".join(f"{surface}\t{canonical}\n" for surface, canonical in synonyms),
        encoding="utf-8",
    )

    gold_paths: dict[str, Path] = {}
    for set_label in ("set1", "set2"):
        path = out_dir / f"gold_{set_label}.jsonl"
        save_gold([q for q in gold if q.set_label == set_label], path)
        gold_paths[set_label] = path

    config_path = out_dir / "config.json"
    config_path.write_text(
        json.dumps(
            {
                "listen": "127.0.0.1:8080",
                "data_dir": ".",
                "k_retrieve": 20,
                "k_final": 5,
                "embedder": {
                    "mode": "stub",
                    "stub_seed": stub_seed,
                    "dimension": 768,
                    "synonym_table_path": "synonyms.tsv",
                },
                "reranker": {"mode": "stub", "synonym_table_path": "synonyms.tsv"},
                "generator": {"mode": "stub"},
            },
            indent=2,
        ),
        encoding="utf-8",
    )

    return FixtureSet(
        out_dir=out_dir,
        corpus_path=corpus_path,
        gold_paths=gold_paths,
        synonym_table_path=synonym_table_path,
        config_path=config_path,
        n_analyses=len(store.analyses),
        n_chunks=len(store.chunks),
        n_queries={
            label: sum(1 for q in gold if q.set_label == label) for label in ("set1", "set2")
        },
    )
