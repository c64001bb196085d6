#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "edrmq/corpus.hpp"
#include "edrmq/errors.hpp"
#include "edrmq/rng.hpp"

// Synthetic clustered corpora with known ground truth. Each cluster owns a
// private vocabulary; documents mix their cluster's tokens with an optional
// shared pool; intra-cluster queries draw from one cluster and bridge
// queries interleave two. Everything is a pure function of the seed.

namespace edrmq {

struct SynthSpec {
    std::size_t clusters = 5;
    std::size_t docs_per_cluster = 40;
    std::size_t vocab_per_cluster = 50;
    std::size_t shared_vocab = 10;
    // Total query budget is clusters * queries_per_cluster; a
    // bridge_query_fraction share of that budget becomes bridge queries and
    // the rest are assigned round-robin across clusters.
    std::size_t queries_per_cluster = 60;
    double bridge_query_fraction = 0.1;
    std::uint64_t seed = 42;

    std::size_t doc_tokens_min = 30;
    std::size_t doc_tokens_max = 60;
    std::size_t query_tokens_min = 6;
    std::size_t query_tokens_max = 10;
    double shared_token_rate = 0.2;  // chance a document token comes from the shared pool
};

struct SynthResult {
    std::vector<Document> corpus;
    std::vector<Query> queries;
    std::vector<std::int32_t> labels;  // cluster index per doc_id
};

namespace detail {

inline std::string zero_pad(std::size_t n, char prefix) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%04zu", prefix, n);
    return buf;
}

} // namespace detail

inline SynthResult generate(const SynthSpec& spec) {
    if (spec.clusters < 1 || spec.docs_per_cluster < 1 || spec.vocab_per_cluster < 1 ||
        spec.queries_per_cluster < 1)
        throw data_error("synth: all counts must be >= 1");
    if (spec.bridge_query_fraction < 0.0 || spec.bridge_query_fraction > 1.0)
        throw data_error("synth: bridge_query_fraction must lie in [0,1]");
    if (spec.doc_tokens_min < 1 || spec.doc_tokens_min > spec.doc_tokens_max ||
        spec.query_tokens_min < 1 || spec.query_tokens_min > spec.query_tokens_max)
        throw data_error("synth: bad token length range");

    const std::size_t total_queries = spec.clusters * spec.queries_per_cluster;
    const auto n_bridge = static_cast<std::size_t>(
        std::llround(spec.bridge_query_fraction * static_cast<double>(total_queries)));
    if (n_bridge > 0 && spec.clusters < 2)
        throw data_error("synth: bridge queries need at least two clusters");

    std::vector<std::vector<std::string>> cluster_vocab(spec.clusters);
    for (std::size_t c = 0; c < spec.clusters; ++c) {
        cluster_vocab[c].reserve(spec.vocab_per_cluster);
        for (std::size_t k = 0; k < spec.vocab_per_cluster; ++k)
            cluster_vocab[c].push_back("c" + std::to_string(c) + "w" + std::to_string(k));
    }
    std::vector<std::string> shared;
    shared.reserve(spec.shared_vocab);
    for (std::size_t k = 0; k < spec.shared_vocab; ++k)
        shared.push_back("sw" + std::to_string(k));

    SplitMix64 g(mix64(spec.seed));
    SynthResult result;

    for (std::size_t c = 0; c < spec.clusters; ++c) {
        for (std::size_t d = 0; d < spec.docs_per_cluster; ++d) {
            const std::size_t len = g.next_in(spec.doc_tokens_min, spec.doc_tokens_max);
            std::string text;
            for (std::size_t t = 0; t < len; ++t) {
                const bool from_shared =
                    !shared.empty() && g.next_unit() <= spec.shared_token_rate;
                const auto& pool = from_shared ? shared : cluster_vocab[c];
                if (!text.empty()) text += ' ';
                text += pool[g.next_below(pool.size())];
            }
            Document doc;
            doc.doc_id = static_cast<std::int32_t>(result.corpus.size());
            doc.external_id = detail::zero_pad(result.corpus.size(), 'd');
            doc.text = std::move(text);
            doc.category = "cluster" + std::to_string(c);
            result.corpus.push_back(std::move(doc));
            result.labels.push_back(static_cast<std::int32_t>(c));
        }
    }

    std::vector<std::string> query_texts;
    query_texts.reserve(total_queries);
    for (std::size_t n = 0; n + n_bridge < total_queries; ++n) {
        const std::size_t c = n % spec.clusters;
        const std::size_t len = g.next_in(spec.query_tokens_min, spec.query_tokens_max);
        std::string text;
        for (std::size_t t = 0; t < len; ++t) {
            if (!text.empty()) text += ' ';
            text += cluster_vocab[c][g.next_below(spec.vocab_per_cluster)];
        }
        query_texts.push_back(std::move(text));
    }
    for (std::size_t n = 0; n < n_bridge; ++n) {
        const std::size_t a = g.next_below(spec.clusters);
        const std::size_t b = (a + 1 + g.next_below(spec.clusters - 1)) % spec.clusters;
        const std::size_t len = g.next_in(spec.query_tokens_min, spec.query_tokens_max);
        std::string text;
        for (std::size_t t = 0; t < len; ++t) {
            const std::size_t c = (t % 2 == 0) ? a : b;
            if (!text.empty()) text += ' ';
            text += cluster_vocab[c][g.next_below(spec.vocab_per_cluster)];
        }
        query_texts.push_back(std::move(text));
    }
    // Shuffle so that any prefix (e.g. --max-queries 30) is already a
    // topically mixed sample rather than a single cluster's queries.
    shuffle(query_texts, g);

    result.queries.reserve(query_texts.size());
    for (std::size_t n = 0; n < query_texts.size(); ++n) {
        Query q;
        q.query_id = static_cast<std::int32_t>(n);
        q.external_id = detail::zero_pad(n, 'q');
        q.text = std::move(query_texts[n]);
        result.queries.push_back(std::move(q));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Fixture writers, matching the ingestion formats byte for byte.

inline void write_corpus_jsonl(const std::vector<Document>& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open corpus file for writing: " + path);
    for (const auto& doc : corpus) {
        nlohmann::ordered_json j;
        j["id"] = doc.external_id;
        if (!doc.title.empty()) j["title"] = doc.title;
        j["text"] = doc.text;
        if (!doc.category.empty()) j["category"] = doc.category;
        out << j.dump() << '\n';
    }
    if (!out) throw io_error("write failed: " + path);
}

inline void write_queries_jsonl(const std::vector<Query>& queries, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open query file for writing: " + path);
    for (const auto& q : queries) {
        nlohmann::ordered_json j;
        j["id"] = q.external_id;
        j["text"] = q.text;
        out << j.dump() << '\n';
    }
    if (!out) throw io_error("write failed: " + path);
}

inline void write_labels_csv(const SynthResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open labels file for writing: " + path);
    out << "doc_id,external_id,cluster\n";
    for (std::size_t d = 0; d < result.corpus.size(); ++d)
        out << d << ',' << result.corpus[d].external_id << ',' << result.labels[d] << '\n';
    if (!out) throw io_error("write failed: " + path);
}

} // namespace edrmq
