#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "edrmq/corpus.hpp"
#include "edrmq/errors.hpp"
#include "edrmq/rng.hpp"

// Token embedding backends. Both produce one unit-norm row per token and are
// pure: equal (tokens, spec) gives bitwise-equal matrices.

namespace edrmq {

/// Row-major matrix of per-token embedding rows. Every row is L2-normalized.
struct TokenMatrix {
    std::vector<double> data;  // rows() x dim, row-major
    std::size_t dim = 0;
    std::int64_t source_id = -1;

    std::size_t rows() const { return dim == 0 ? 0 : data.size() / dim; }
    std::span<const double> row(std::size_t i) const {
        return {data.data() + i * dim, dim};
    }
};

enum class EmbedderKind { hashing, precomputed };

struct EmbedderSpec {
    EmbedderKind kind = EmbedderKind::hashing;
    std::size_t dim = 64;       // >= 2; for precomputed, 0 means "take the file's"
    std::uint64_t seed = 0;     // hashing only
    std::string path;           // precomputed only
};

class Embedder {
public:
    virtual ~Embedder() = default;

    virtual std::size_t dim() const = 0;

    /// Write the unit-norm vector for one token into out (size dim()).
    virtual void embed_token(std::string_view token, std::span<double> out) const = 0;

    /// Stable identity hash of the embedder configuration, echoed into run
    /// metadata so outputs can be traced back to their embedding source.
    virtual std::uint64_t fingerprint() const = 0;
};

inline TokenMatrix embed_tokens(const TokenSequence& tokens, const Embedder& embedder) {
    TokenMatrix m;
    m.dim = embedder.dim();
    m.source_id = tokens.source_id;
    m.data.resize(tokens.tokens.size() * m.dim);
    for (std::size_t i = 0; i < tokens.tokens.size(); ++i)
        embedder.embed_token(tokens.tokens[i], {m.data.data() + i * m.dim, m.dim});
    return m;
}

namespace detail {

inline void l2_normalize(std::span<double> v) {
    double ss = 0.0;
    for (double x : v) ss += x * x;
    if (ss == 0.0) {  // cannot happen with Box-Muller draws, but keep rows valid
        v[0] = 1.0;
        return;
    }
    const double inv = 1.0 / std::sqrt(ss);
    for (double& x : v) x *= inv;
}

} // namespace detail

/// Deterministic per-token-type embeddings. Fixed recipe, stable across runs
/// and platforms up to libm rounding:
///   1. key   = mix64(seed + 0x9e3779b97f4a7c15 * fnv1a64(token))
///   2. draw  standard normal deviates from SplitMix64(key) via Box-Muller
///      (pairs; for odd dim the last second deviate is discarded)
///   3. L2-normalize the d-vector.
/// Identical tokens always map to identical rows; there is no context.
class HashingEmbedder final : public Embedder {
public:
    HashingEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
        if (dim < 2) throw data_error("embedding dim must be >= 2");
    }

    std::size_t dim() const override { return dim_; }

    void embed_token(std::string_view token, std::span<double> out) const override {
        SplitMix64 g(mix64(seed_ + 0x9e3779b97f4a7c15ull * fnv1a64(token)));
        std::size_t i = 0;
        while (i < dim_) {
            const auto [z0, z1] = gaussian_pair(g);
            out[i++] = z0;
            if (i < dim_) out[i++] = z1;
        }
        detail::l2_normalize(out);
    }

    std::uint64_t fingerprint() const override {
        return fnv1a64("hashing/" + std::to_string(dim_) + "/" + std::to_string(seed_));
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

/// token -> unit vector table loaded from TSV (see load_precomputed).
class PrecomputedEmbedder final : public Embedder {
public:
    using Table = std::unordered_map<std::string, std::vector<double>>;

    PrecomputedEmbedder(Table table, std::optional<std::vector<double>> unk,
                        std::size_t dim, std::uint64_t fingerprint)
        : table_(std::move(table)), unk_(std::move(unk)), dim_(dim),
          fingerprint_(fingerprint) {}

    std::size_t dim() const override { return dim_; }

    void embed_token(std::string_view token, std::span<double> out) const override {
        auto it = table_.find(std::string(token));
        const std::vector<double>* vec = nullptr;
        if (it != table_.end()) {
            vec = &it->second;
        } else if (unk_) {
            vec = &*unk_;
        } else {
            throw data_error("token '" + std::string(token) +
                             "' missing from embedding table and no <UNK> vector present");
        }
        for (std::size_t i = 0; i < dim_; ++i) out[i] = (*vec)[i];
    }

    std::uint64_t fingerprint() const override { return fingerprint_; }

    std::size_t size() const { return table_.size(); }
    bool has_unknown_vector() const { return unk_.has_value(); }

private:
    Table table_;
    std::optional<std::vector<double>> unk_;
    std::size_t dim_;
    std::uint64_t fingerprint_;
};

/// Load a token-embedding table. Format, byte-exact:
///   - UTF-8 text, one entry per line, '\n' line ends;
///   - line = token, then d decimal floats, all tab-separated;
///   - d is fixed by the first line and must match on every line;
///   - a line whose token is "<UNK>" (conventionally the first) supplies the
///     fallback vector for out-of-table tokens.
/// Vectors are re-normalized to unit norm on load.
inline PrecomputedEmbedder load_precomputed(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open embedding file: " + path);

    PrecomputedEmbedder::Table table;
    std::optional<std::vector<double>> unk;
    std::size_t dim = 0;
    std::uint64_t content_hash = 0xcbf29ce484222325ull;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        for (unsigned char c : line) {
            content_hash ^= c;
            content_hash *= 0x100000001b3ull;
        }

        std::vector<std::string_view> fields;
        std::string_view sv = line;
        std::size_t start = 0;
        while (true) {
            const std::size_t tab = sv.find('\t', start);
            fields.push_back(sv.substr(start, tab - start));
            if (tab == std::string_view::npos) break;
            start = tab + 1;
        }
        if (fields.size() < 2)
            throw data_error("embedding line " + std::to_string(line_no) + ": no vector data");

        std::vector<double> vec;
        vec.reserve(fields.size() - 1);
        for (std::size_t i = 1; i < fields.size(); ++i) {
            double v = 0.0;
            const auto* b = fields[i].data();
            const auto* e = b + fields[i].size();
            const auto res = std::from_chars(b, e, v);
            if (res.ec != std::errc{} || res.ptr != e)
                throw data_error("embedding line " + std::to_string(line_no) +
                                 ": bad float '" + std::string(fields[i]) + "'");
            vec.push_back(v);
        }
        if (dim == 0) {
            dim = vec.size();
            if (dim < 2)
                throw data_error("embedding file must have dim >= 2: " + path);
        } else if (vec.size() != dim) {
            throw data_error("embedding line " + std::to_string(line_no) +
                             ": dimension mismatch (" + std::to_string(vec.size()) +
                             " vs " + std::to_string(dim) + ")");
        }
        detail::l2_normalize(vec);

        const std::string token(fields[0]);
        if (token == "<UNK>") {
            unk = std::move(vec);
        } else if (!table.emplace(token, std::move(vec)).second) {
            throw data_error("embedding line " + std::to_string(line_no) +
                             ": duplicate token '" + token + "'");
        }
    }
    if (dim == 0) throw data_error("empty embedding file: " + path);
    return PrecomputedEmbedder(std::move(table), std::move(unk), dim, content_hash);
}

inline std::unique_ptr<Embedder> make_embedder(const EmbedderSpec& spec) {
    if (spec.kind == EmbedderKind::hashing)
        return std::make_unique<HashingEmbedder>(spec.dim, spec.seed);
    auto emb = std::make_unique<PrecomputedEmbedder>(load_precomputed(spec.path));
    if (spec.dim != 0 && spec.dim != emb->dim())
        throw data_error("embedding file dim " + std::to_string(emb->dim()) +
                         " does not match requested dim " + std::to_string(spec.dim));
    return emb;
}

} // namespace edrmq
