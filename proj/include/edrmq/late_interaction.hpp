#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "edrmq/corpus.hpp"
#include "edrmq/embedder.hpp"
#include "edrmq/errors.hpp"

// Late-interaction (MaxSim) scoring and exhaustive top-k retrieval over a
// precomputed document-side index. Scoring is exact: every document is
// scanned, no approximate pruning.

namespace edrmq {

struct LateInteractionIndex {
    std::vector<TokenMatrix> doc_matrices;  // by doc_id
    std::size_t dim = 0;

    std::size_t corpus_size() const { return doc_matrices.size(); }
};

struct Candidate {
    std::int32_t doc_id = 0;
    double raw_score = 0.0;    // MaxSim value
    double probability = 0.0;  // 0 until normalize_scores assigns it
};

inline LateInteractionIndex build_index(const std::vector<TokenSequence>& doc_tokens,
                                        const Embedder& embedder) {
    if (doc_tokens.empty()) throw data_error("cannot build index over empty corpus");
    LateInteractionIndex index;
    index.dim = embedder.dim();
    index.doc_matrices.reserve(doc_tokens.size());
    for (const auto& toks : doc_tokens)
        index.doc_matrices.push_back(embed_tokens(toks, embedder));
    return index;
}

inline LateInteractionIndex build_index(const std::vector<Document>& corpus,
                                        const Embedder& embedder,
                                        const TokenizerConfig& config = document_tokenizer()) {
    return build_index(tokenize_corpus(corpus, config), embedder);
}

namespace detail {

// Dot products are accumulated left to right over the embedding dimension;
// the 4-wide blocking below interleaves independent documents' token chains
// without changing any individual sum's order.
inline double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t t = 0; t < n; ++t) s += a[t] * b[t];
    return s;
}

} // namespace detail

/// Score(q, d) = sum over query tokens of the max dot product against any
/// document token. With unit-norm rows the result lies in [-|q|, |q|].
inline double maxsim_score(const TokenMatrix& query, const TokenMatrix& doc) {
    if (query.dim != doc.dim)
        throw data_error("maxsim dimension mismatch: " + std::to_string(query.dim) +
                         " vs " + std::to_string(doc.dim));
    const std::size_t dim = query.dim;
    const std::size_t nq = query.rows();
    const std::size_t nd = doc.rows();
    const double* dbase = doc.data.data();

    double total = 0.0;
    for (std::size_t i = 0; i < nq; ++i) {
        const double* qi = query.data.data() + i * dim;
        double best = -std::numeric_limits<double>::infinity();
        std::size_t j = 0;
        for (; j + 4 <= nd; j += 4) {
            const double* d0 = dbase + j * dim;
            const double* d1 = d0 + dim;
            const double* d2 = d1 + dim;
            const double* d3 = d2 + dim;
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            for (std::size_t t = 0; t < dim; ++t) {
                const double q = qi[t];
                s0 += q * d0[t];
                s1 += q * d1[t];
                s2 += q * d2[t];
                s3 += q * d3[t];
            }
            if (s0 > best) best = s0;
            if (s1 > best) best = s1;
            if (s2 > best) best = s2;
            if (s3 > best) best = s3;
        }
        for (; j < nd; ++j) {
            const double s = detail::dot(dbase + j * dim, qi, dim);
            if (s > best) best = s;
        }
        total += best;  // query-token order is fixed for reproducibility
    }
    return total;
}

/// Exhaustive top-k: all documents scored, sorted by raw_score descending
/// with ties broken by ascending doc_id. Excluded ids never appear. Returns
/// min(k, eligible) candidates.
inline std::vector<Candidate> retrieve_topk(const LateInteractionIndex& index,
                                            const TokenMatrix& query_matrix,
                                            std::size_t k,
                                            std::span<const std::int32_t> exclude = {}) {
    if (k == 0) throw data_error("retrieve_topk requires k >= 1");
    std::vector<Candidate> scored;
    scored.reserve(index.corpus_size());
    for (std::size_t d = 0; d < index.corpus_size(); ++d) {
        const auto id = static_cast<std::int32_t>(d);
        if (std::find(exclude.begin(), exclude.end(), id) != exclude.end()) continue;
        scored.push_back({id, maxsim_score(query_matrix, index.doc_matrices[d]), 0.0});
    }
    const auto better = [](const Candidate& a, const Candidate& b) {
        if (a.raw_score != b.raw_score) return a.raw_score > b.raw_score;
        return a.doc_id < b.doc_id;
    };
    const std::size_t take = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + take, scored.end(), better);
    scored.resize(take);
    return scored;
}

// ---------------------------------------------------------------------------
// Index persistence. Little-endian binary layout:
//   bytes 0..7   magic "EDRMQIDX"
//   u32          version (1)
//   u32          embedding dim d
//   u64          corpus size M
//   u32 x M      per-document token counts
//   f32 x sum*d  row data, documents in doc_id order, rows row-major
// Rows are stored as float32; reloaded scores match fresh ones to ~1e-6.

namespace detail {

inline void put_u32(std::ofstream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

inline void put_u64(std::ofstream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}

inline void put_f32(std::ofstream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

inline std::uint32_t get_u32(std::ifstream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t get_u64(std::ifstream& in) {
    const std::uint64_t lo = get_u32(in);
    const std::uint64_t hi = get_u32(in);
    return lo | (hi << 32);
}

inline float get_f32(std::ifstream& in) {
    const std::uint32_t bits = get_u32(in);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

} // namespace detail

inline constexpr char kIndexMagic[8] = {'E', 'D', 'R', 'M', 'Q', 'I', 'D', 'X'};

inline void save_index(const LateInteractionIndex& index, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open index file for writing: " + path);
    out.write(kIndexMagic, 8);
    detail::put_u32(out, 1);
    detail::put_u32(out, static_cast<std::uint32_t>(index.dim));
    detail::put_u64(out, index.corpus_size());
    for (const auto& m : index.doc_matrices)
        detail::put_u32(out, static_cast<std::uint32_t>(m.rows()));
    for (const auto& m : index.doc_matrices)
        for (double v : m.data) detail::put_f32(out, static_cast<float>(v));
    if (!out) throw io_error("write failed: " + path);
}

inline LateInteractionIndex load_index(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open index file: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kIndexMagic, 8) != 0)
        throw data_error("not an index file: " + path);
    const std::uint32_t version = detail::get_u32(in);
    if (version != 1)
        throw data_error("unsupported index version " + std::to_string(version) + ": " + path);
    LateInteractionIndex index;
    index.dim = detail::get_u32(in);
    const std::uint64_t m = detail::get_u64(in);
    std::vector<std::uint32_t> counts(m);
    for (auto& c : counts) c = detail::get_u32(in);
    if (!in) throw data_error("truncated index file: " + path);
    index.doc_matrices.reserve(m);
    for (std::uint64_t d = 0; d < m; ++d) {
        TokenMatrix mat;
        mat.dim = index.dim;
        mat.source_id = static_cast<std::int64_t>(d);
        mat.data.resize(static_cast<std::size_t>(counts[d]) * index.dim);
        for (double& v : mat.data) v = detail::get_f32(in);
        index.doc_matrices.push_back(std::move(mat));
    }
    if (!in) throw data_error("truncated index file: " + path);
    return index;
}

} // namespace edrmq
