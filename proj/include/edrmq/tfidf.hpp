#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "edrmq/corpus.hpp"
#include "edrmq/errors.hpp"

// TF-IDF baseline network: smoothed-idf document vectors and a top-m cosine
// neighbor graph. Uses the same tokenizer as the main pipeline so both see
// identical token streams.

namespace edrmq {

struct TfIdfModel {
    // Term ids are assigned in lexicographic token order, which makes every
    // downstream accumulation order canonical and reproducible.
    std::map<std::string, std::int32_t> vocabulary;
    std::vector<double> idf;  // by term id; ln((1+M)/(1+df)) + 1, always > 0

    struct SparseVec {
        std::vector<std::int32_t> term_ids;  // ascending
        std::vector<double> weights;         // L2-normalized tf*idf
    };
    std::vector<SparseVec> doc_vectors;           // by doc_id
    std::vector<std::int32_t> zero_vector_docs;   // docs with no usable tokens
};

/// Build the model: tf = raw term count, idf(t) = ln((1+M)/(1+df(t))) + 1,
/// vectors tf*idf then L2-normalized. Documents whose text yields no tokens
/// get a zero vector and are flagged rather than failing the build.
inline TfIdfModel build_tfidf(const std::vector<Document>& corpus,
                              const TokenizerConfig& config = document_tokenizer(),
                              bool sublinear_tf = false) {
    if (corpus.empty()) throw data_error("build_tfidf: empty corpus");
    const std::size_t m = corpus.size();

    std::vector<std::map<std::string, std::int32_t>> counts(m);
    TfIdfModel model;
    model.doc_vectors.resize(m);

    for (std::size_t d = 0; d < m; ++d) {
        try {
            const TokenSequence toks = tokenize(indexed_text(corpus[d]), config,
                                                corpus[d].doc_id);
            for (const auto& t : toks.tokens) ++counts[d][t];
        } catch (const data_error&) {
            model.zero_vector_docs.push_back(static_cast<std::int32_t>(d));
            continue;
        }
        for (const auto& [token, n] : counts[d]) model.vocabulary.emplace(token, 0);
    }

    std::int32_t next_id = 0;
    for (auto& [token, id] : model.vocabulary) id = next_id++;
    model.idf.assign(model.vocabulary.size(), 0.0);

    std::vector<std::int32_t> df(model.vocabulary.size(), 0);
    for (std::size_t d = 0; d < m; ++d)
        for (const auto& [token, n] : counts[d]) ++df[model.vocabulary.at(token)];
    for (std::size_t t = 0; t < df.size(); ++t)
        model.idf[t] = std::log((1.0 + static_cast<double>(m)) /
                                (1.0 + static_cast<double>(df[t]))) + 1.0;

    for (std::size_t d = 0; d < m; ++d) {
        auto& vec = model.doc_vectors[d];
        for (const auto& [token, n] : counts[d]) {
            const std::int32_t id = model.vocabulary.at(token);
            const double tf = sublinear_tf ? 1.0 + std::log(static_cast<double>(n))
                                           : static_cast<double>(n);
            vec.term_ids.push_back(id);
            vec.weights.push_back(tf * model.idf[id]);
        }
        // counts[d] iterates tokens lexicographically, so term_ids ascend and
        // the norm below is summed in canonical term order
        double ss = 0.0;
        for (double w : vec.weights) ss += w * w;
        if (ss > 0.0) {
            const double nrm = std::sqrt(ss);
            for (double& w : vec.weights) w /= nrm;
        }
    }
    return model;
}

struct WeightedEdge {
    std::int32_t source = 0;
    std::int32_t target = 0;
    double weight = 0.0;
};

namespace detail {

// Merge dot product over sorted term ids; both vectors unit norm, so this is
// the cosine. Summation order is ascending term id on both sides.
inline double sparse_cosine(const TfIdfModel::SparseVec& a, const TfIdfModel::SparseVec& b) {
    double s = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.term_ids.size() && j < b.term_ids.size()) {
        if (a.term_ids[i] < b.term_ids[j]) {
            ++i;
        } else if (a.term_ids[i] > b.term_ids[j]) {
            ++j;
        } else {
            s += a.weights[i] * b.weights[j];
            ++i;
            ++j;
        }
    }
    return s;
}

} // namespace detail

/// Directed edges from each document to its m highest-cosine neighbors
/// (never itself), ties broken by ascending doc_id. m >= M connects every
/// document to all others. Symmetrization is left to graph export.
inline std::vector<WeightedEdge> topk_similarity_graph(const TfIdfModel& model, std::size_t m) {
    if (m == 0) throw data_error("topk_similarity_graph requires m >= 1");
    const std::size_t n_docs = model.doc_vectors.size();
    std::vector<WeightedEdge> edges;
    if (n_docs < 2) return edges;

    std::vector<std::pair<double, std::int32_t>> scored;
    for (std::size_t i = 0; i < n_docs; ++i) {
        scored.clear();
        scored.reserve(n_docs - 1);
        for (std::size_t j = 0; j < n_docs; ++j) {
            if (j == i) continue;
            scored.emplace_back(detail::sparse_cosine(model.doc_vectors[i], model.doc_vectors[j]),
                                static_cast<std::int32_t>(j));
        }
        const std::size_t take = std::min(m, scored.size());
        std::partial_sort(scored.begin(), scored.begin() + take, scored.end(),
                          [](const auto& a, const auto& b) {
                              if (a.first != b.first) return a.first > b.first;
                              return a.second < b.second;
                          });
        for (std::size_t r = 0; r < take; ++r)
            edges.push_back({static_cast<std::int32_t>(i), scored[r].second, scored[r].first});
    }
    return edges;
}

namespace detail {

inline std::string format_double_edge(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace detail

/// Raw directed edge list, header "i,j,weight", rows in emission order
/// (source ascending, then rank). Weights round-trip exactly.
inline void write_edge_list(const std::vector<WeightedEdge>& edges, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open edge list for writing: " + path);
    out << "i,j,weight\n";
    for (const auto& e : edges)
        out << e.source << ',' << e.target << ',' << detail::format_double_edge(e.weight)
            << '\n';
    if (!out) throw io_error("write failed: " + path);
}

inline std::vector<WeightedEdge> read_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open edge list: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "i,j,weight")
        throw data_error("bad edge list header in " + path);
    std::vector<WeightedEdge> edges;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw data_error("bad edge row at line " + std::to_string(line_no) + " in " + path);
        try {
            WeightedEdge e;
            e.source = std::stoi(line.substr(0, c1));
            e.target = std::stoi(line.substr(c1 + 1, c2 - c1 - 1));
            const std::string_view w = std::string_view(line).substr(c2 + 1);
            double v = 0.0;
            const auto res = std::from_chars(w.data(), w.data() + w.size(), v);
            if (res.ec != std::errc{} || res.ptr != w.data() + w.size())
                throw data_error("bad weight");
            e.weight = v;
            edges.push_back(e);
        } catch (const std::exception&) {
            throw data_error("bad edge row at line " + std::to_string(line_no) + " in " + path);
        }
    }
    return edges;
}

} // namespace edrmq
