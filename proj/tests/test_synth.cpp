#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "edrmq/graph.hpp"
#include "edrmq/marginalizer.hpp"
#include "edrmq/synth.hpp"

#include "test_util.hpp"

using namespace edrmq;
using testutil::TempDir;

namespace {

// The frozen 5-cluster fixture's generator settings (200 docs, 300 queries
// with a 10% bridge share, seed 42).
SynthSpec frozen_spec() {
    SynthSpec s;
    s.clusters = 5;
    s.docs_per_cluster = 40;
    s.vocab_per_cluster = 50;
    s.shared_vocab = 10;
    s.queries_per_cluster = 60;
    s.bridge_query_fraction = 0.1;
    s.seed = 42;
    return s;
}

} // namespace

TEST_CASE("generation is deterministic under the seed", "[synth]") {
    const auto spec = frozen_spec();
    const auto a = generate(spec);
    const auto b = generate(spec);
    REQUIRE(a.corpus.size() == b.corpus.size());
    for (std::size_t i = 0; i < a.corpus.size(); ++i) {
        CHECK(a.corpus[i].text == b.corpus[i].text);
        CHECK(a.corpus[i].external_id == b.corpus[i].external_id);
    }
    REQUIRE(a.queries.size() == b.queries.size());
    for (std::size_t i = 0; i < a.queries.size(); ++i)
        CHECK(a.queries[i].text == b.queries[i].text);
    CHECK(a.labels == b.labels);

    auto other = spec;
    other.seed = 43;
    const auto c = generate(other);
    CHECK(c.corpus[0].text != a.corpus[0].text);
}

TEST_CASE("budget accounting: docs, queries, bridge share", "[synth]") {
    const auto result = generate(frozen_spec());
    CHECK(result.corpus.size() == 200);
    CHECK(result.queries.size() == 300);
    CHECK(result.labels.size() == 200);

    // cluster labels are 0..4, 40 docs each
    std::map<std::int32_t, int> per_cluster;
    for (const auto l : result.labels) ++per_cluster[l];
    REQUIRE(per_cluster.size() == 5);
    for (const auto& [c, n] : per_cluster) CHECK(n == 40);

    // ~10% of queries mix two clusters' vocabularies
    int bridges = 0;
    for (const auto& q : result.queries) {
        std::set<char> clusters_seen;
        for (const auto& tok : tokenize(q.text, TokenizerConfig{64}).tokens)
            if (tok[0] == 'c') clusters_seen.insert(tok[1]);
        if (clusters_seen.size() > 1) ++bridges;
    }
    CHECK(bridges == 30);
}

TEST_CASE("single cluster degenerates to one label", "[synth]") {
    SynthSpec s;
    s.clusters = 1;
    s.docs_per_cluster = 6;
    s.vocab_per_cluster = 10;
    s.shared_vocab = 0;
    s.queries_per_cluster = 4;
    s.bridge_query_fraction = 0.0;
    s.seed = 9;
    const auto result = generate(s);
    for (const auto l : result.labels) CHECK(l == 0);
}

TEST_CASE("invalid specs are rejected", "[synth]") {
    SynthSpec bad = frozen_spec();
    bad.clusters = 0;
    CHECK_THROWS_AS(generate(bad), data_error);

    bad = frozen_spec();
    bad.bridge_query_fraction = 1.5;
    CHECK_THROWS_AS(generate(bad), data_error);

    // bridge queries are impossible with a single cluster's vocabulary
    bad = frozen_spec();
    bad.clusters = 1;
    bad.bridge_query_fraction = 0.5;
    CHECK_THROWS_AS(generate(bad), data_error);

    bad = frozen_spec();
    bad.doc_tokens_min = 20;
    bad.doc_tokens_max = 10;
    CHECK_THROWS_AS(generate(bad), data_error);
}

TEST_CASE("frozen fixture files match regeneration byte for byte", "[synth]") {
    const auto result = generate(frozen_spec());
    TempDir dir("synth_golden");
    write_corpus_jsonl(result.corpus, dir.file("corpus.jsonl"));
    write_queries_jsonl(result.queries, dir.file("queries.jsonl"));
    write_labels_csv(result, dir.file("labels.csv"));

    CHECK(testutil::read_file(dir.file("corpus.jsonl")) ==
          testutil::read_file(testutil::fixture_path("synth5x40/corpus.jsonl")));
    CHECK(testutil::read_file(dir.file("queries.jsonl")) ==
          testutil::read_file(testutil::fixture_path("synth5x40/queries.jsonl")));
    CHECK(testutil::read_file(dir.file("labels.csv")) ==
          testutil::read_file(testutil::fixture_path("synth5x40/labels.csv")));
}

TEST_CASE("written fixtures reload through the ingestion path", "[synth]") {
    const auto result = generate([] {
        SynthSpec s;
        s.clusters = 2;
        s.docs_per_cluster = 3;
        s.vocab_per_cluster = 10;
        s.shared_vocab = 2;
        s.queries_per_cluster = 5;
        s.bridge_query_fraction = 0.2;
        s.seed = 12;
        return s;
    }());
    TempDir dir("synth_roundtrip");
    write_corpus_jsonl(result.corpus, dir.file("corpus.jsonl"));
    write_queries_jsonl(result.queries, dir.file("queries.jsonl"));

    const auto docs = load_corpus(dir.file("corpus.jsonl"));
    REQUIRE(docs.size() == result.corpus.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        CHECK(docs[i].text == result.corpus[i].text);
        CHECK(docs[i].category == result.corpus[i].category);
    }
    const auto queries = load_queries(dir.file("queries.jsonl"), QueryFormat::jsonl);
    REQUIRE(queries.size() == result.queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i)
        CHECK(queries[i].text == result.queries[i].text);
}

TEST_CASE("disjoint vocabularies keep clusters disconnected", "[synth][integration]") {
    // no shared vocabulary, no bridge queries: the extracted graph can never
    // connect clusters, so it has at least C components at any positive
    // threshold
    SynthSpec s;
    s.clusters = 3;
    s.docs_per_cluster = 10;
    s.vocab_per_cluster = 20;
    s.shared_vocab = 0;
    s.queries_per_cluster = 10;
    s.bridge_query_fraction = 0.0;
    s.seed = 21;
    s.doc_tokens_min = 8;
    s.doc_tokens_max = 16;
    const auto data = generate(s);

    HashingEmbedder emb(32, 4);
    const auto doc_tokens = tokenize_corpus(data.corpus, document_tokenizer());
    const auto index = build_index(doc_tokens, emb);
    TwoStageParams params;
    params.k1 = params.k2 = 3;
    const auto matrix = extract_relations(index, doc_tokens, emb, data.queries, params);

    ExportConfig cfg;
    cfg.threshold = 1e-9;
    const auto graph = to_graph(matrix, data.corpus, cfg);
    const auto stats = network_stats(graph);
    CHECK(stats.component_count >= s.clusters);

    // stronger: no edge crosses cluster labels
    for (const auto& e : graph.edges)
        CHECK(data.labels[static_cast<std::size_t>(e.source)] ==
              data.labels[static_cast<std::size_t>(e.target)]);
}
