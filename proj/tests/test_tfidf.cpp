#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>

#include "edrmq/synth.hpp"
#include "edrmq/tfidf.hpp"

#include "test_util.hpp"

using namespace edrmq;
using testutil::TempDir;

namespace {

Document make_doc(std::int32_t id, const std::string& text) {
    Document d;
    d.doc_id = id;
    d.external_id = "d" + std::to_string(id);
    d.text = text;
    return d;
}

// Independent oracle: dense vectors computed straight from the formulas
// tf = count, idf = ln((1+M)/(1+df)) + 1, then L2 normalization; cosine as a
// dense dot over the vocabulary dimension.
std::vector<std::vector<double>> oracle_dense_vectors(const std::vector<Document>& corpus,
                                                      const TfIdfModel& model) {
    const std::size_t m = corpus.size();
    const std::size_t vocab = model.vocabulary.size();
    std::vector<std::map<std::string, int>> counts(m);
    for (std::size_t d = 0; d < m; ++d)
        for (const auto& t : tokenize(indexed_text(corpus[d]), TokenizerConfig{180}).tokens)
            ++counts[d][t];
    std::map<std::string, int> df;
    for (const auto& c : counts)
        for (const auto& [t, n] : c) ++df[t];

    std::vector<std::vector<double>> dense(m, std::vector<double>(vocab, 0.0));
    for (std::size_t d = 0; d < m; ++d) {
        for (const auto& [t, n] : counts[d]) {
            const double idf =
                std::log((1.0 + static_cast<double>(m)) / (1.0 + df.at(t))) + 1.0;
            dense[d][static_cast<std::size_t>(model.vocabulary.at(t))] = n * idf;
        }
        double ss = 0.0;
        for (double w : dense[d]) ss += w * w;
        if (ss > 0.0)
            for (double& w : dense[d]) w /= std::sqrt(ss);
    }
    return dense;
}

std::vector<WeightedEdge> oracle_topm(const std::vector<std::vector<double>>& dense,
                                      std::size_t m) {
    std::vector<WeightedEdge> edges;
    for (std::size_t i = 0; i < dense.size(); ++i) {
        std::vector<std::pair<double, std::int32_t>> scored;
        for (std::size_t j = 0; j < dense.size(); ++j) {
            if (j == i) continue;
            double s = 0.0;
            for (std::size_t t = 0; t < dense[i].size(); ++t) s += dense[i][t] * dense[j][t];
            scored.push_back({s, static_cast<std::int32_t>(j)});
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (std::size_t r = 0; r < std::min(m, scored.size()); ++r)
            edges.push_back({static_cast<std::int32_t>(i), scored[r].second, scored[r].first});
    }
    return edges;
}

} // namespace

TEST_CASE("idf of a token present in every document is 1", "[tfidf]") {
    const std::vector<Document> corpus{make_doc(0, "a b"), make_doc(1, "a c"),
                                       make_doc(2, "a")};
    const auto model = build_tfidf(corpus);
    CHECK(model.idf[static_cast<std::size_t>(model.vocabulary.at("a"))] ==
          Catch::Approx(1.0).margin(1e-12));
    const double expected = std::log(4.0 / 2.0) + 1.0;
    CHECK(model.idf[static_cast<std::size_t>(model.vocabulary.at("b"))] ==
          Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("3-doc toy corpus matches the formula oracle", "[tfidf]") {
    const std::vector<Document> corpus{make_doc(0, "a b"), make_doc(1, "a c"),
                                       make_doc(2, "a")};
    const auto model = build_tfidf(corpus);
    const auto dense = oracle_dense_vectors(corpus, model);

    for (std::size_t d = 0; d < corpus.size(); ++d) {
        const auto& vec = model.doc_vectors[d];
        std::vector<double> got(model.vocabulary.size(), 0.0);
        for (std::size_t t = 0; t < vec.term_ids.size(); ++t)
            got[static_cast<std::size_t>(vec.term_ids[t])] = vec.weights[t];
        for (std::size_t t = 0; t < got.size(); ++t)
            CHECK(got[t] == Catch::Approx(dense[d][t]).margin(1e-12));
    }

    // the one-token doc has the full weight on "a"
    CHECK(model.doc_vectors[2].term_ids.size() == 1);
    CHECK(model.doc_vectors[2].weights[0] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("identical documents produce identical vectors and unit cosine", "[tfidf]") {
    const std::vector<Document> corpus{make_doc(0, "shared tokens here"),
                                       make_doc(1, "shared tokens here"),
                                       make_doc(2, "something else entirely")};
    const auto model = build_tfidf(corpus);
    CHECK(model.doc_vectors[0].term_ids == model.doc_vectors[1].term_ids);
    CHECK(model.doc_vectors[0].weights == model.doc_vectors[1].weights);

    const auto edges = topk_similarity_graph(model, 1);
    // mutual top-1 edges between the twins with weight 1
    REQUIRE(edges.size() == 3);
    CHECK(edges[0].source == 0);
    CHECK(edges[0].target == 1);
    CHECK(edges[0].weight == Catch::Approx(1.0).margin(1e-9));
    CHECK(edges[1].source == 1);
    CHECK(edges[1].target == 0);
    CHECK(edges[1].weight == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("top-m graph equals the all-pairs oracle on a random corpus", "[tfidf]") {
    const auto synth = generate([] {
        SynthSpec s;
        s.clusters = 2;
        s.docs_per_cluster = 5;
        s.vocab_per_cluster = 15;
        s.shared_vocab = 5;
        s.queries_per_cluster = 1;
        s.bridge_query_fraction = 0.0;
        s.seed = 55;
        s.doc_tokens_min = 5;
        s.doc_tokens_max = 15;
        return s;
    }());
    const auto model = build_tfidf(synth.corpus);
    const auto dense = oracle_dense_vectors(synth.corpus, model);

    const auto got = topk_similarity_graph(model, 3);
    const auto want = oracle_topm(dense, 3);
    REQUIRE(got.size() == want.size());
    for (std::size_t e = 0; e < got.size(); ++e) {
        CHECK(got[e].source == want[e].source);
        CHECK(got[e].target == want[e].target);
        CHECK(got[e].weight == Catch::Approx(want[e].weight).margin(1e-12));
    }
}

TEST_CASE("out-degree is min(m, M-1) and weights lie in [0,1]", "[tfidf]") {
    const auto synth = generate([] {
        SynthSpec s;
        s.clusters = 3;
        s.docs_per_cluster = 4;
        s.vocab_per_cluster = 10;
        s.shared_vocab = 4;
        s.queries_per_cluster = 1;
        s.bridge_query_fraction = 0.0;
        s.seed = 77;
        s.doc_tokens_min = 4;
        s.doc_tokens_max = 10;
        return s;
    }());
    const auto model = build_tfidf(synth.corpus);
    const std::size_t m_docs = synth.corpus.size();

    for (const std::size_t m : {3ul, 25ul, 100ul}) {
        const auto edges = topk_similarity_graph(model, m);
        std::map<std::int32_t, std::size_t> outdeg;
        for (const auto& e : edges) {
            ++outdeg[e.source];
            CHECK(e.source != e.target);
            CHECK(e.weight >= 0.0);
            CHECK(e.weight <= 1.0 + 1e-12);
        }
        for (std::size_t d = 0; d < m_docs; ++d)
            CHECK(outdeg[static_cast<std::int32_t>(d)] == std::min(m, m_docs - 1));
    }

    CHECK_THROWS_AS(topk_similarity_graph(model, 0), data_error);
    CHECK_THROWS_AS(build_tfidf({}), data_error);
}

TEST_CASE("edge list CSV round-trips", "[tfidf]") {
    TempDir dir("edges");
    const std::vector<Document> corpus{make_doc(0, "x y"), make_doc(1, "x z"),
                                       make_doc(2, "y z")};
    const auto edges = topk_similarity_graph(build_tfidf(corpus), 2);
    write_edge_list(edges, dir.file("e.csv"));
    const auto loaded = read_edge_list(dir.file("e.csv"));
    REQUIRE(loaded.size() == edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
        CHECK(loaded[e].source == edges[e].source);
        CHECK(loaded[e].target == edges[e].target);
        CHECK(loaded[e].weight == edges[e].weight);  // exact round-trip
    }
}
