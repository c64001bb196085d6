#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"

#include "edrmq/conditional.hpp"
#include "edrmq/errors.hpp"

// Query marginalization: per-query joint retrieval probabilities p1*p2 are
// accumulated into a sparse M x M matrix, then averaged under the uniform
// query prior 1/N. Per-query work is parallelizable; the merge is sequential
// in query_id order so results are bitwise independent of the worker count.

namespace edrmq {

using PairKey = std::pair<std::int32_t, std::int32_t>;  // (i first-stage, j second-stage)
using SparsePairMap = std::map<PairKey, double>;

struct RelationMatrix {
    SparsePairMap entries;  // ordered by (i, j); all masses >= 0
    std::size_t corpus_size = 0;   // M
    std::size_t query_count = 0;   // N used for the 1/N prior
    std::uint64_t config_fingerprint = 0;
};

/// Joint mass contributed by a single query: R[i,j] += p1 * p2 over all
/// retrieved (stage-1, stage-2) pairs. Total mass is 1 when no stage-2 list
/// came back empty.
inline SparsePairMap accumulate_pairs(const TwoStageResult& result) {
    SparsePairMap partial;
    for (std::size_t s = 0; s < result.stage1.size(); ++s) {
        const auto& first = result.stage1[s];
        for (const auto& second : result.stage2[s])
            partial[{first.doc_id, second.doc_id}] += first.probability * second.probability;
    }
    return partial;
}

/// Combine per-query partials into the final matrix. Partials may arrive in
/// any order; they are reordered by query_id and must cover 0..N-1 exactly
/// once. Entries are summed in ascending query_id order and then scaled by
/// 1/N, so the result is bitwise identical for any worker count.
inline RelationMatrix merge_partials(std::vector<std::pair<std::int32_t, SparsePairMap>> partials,
                                     std::size_t corpus_size,
                                     std::uint64_t config_fingerprint = 0) {
    if (partials.empty()) throw data_error("merge_partials: no partials");
    std::sort(partials.begin(), partials.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t n = 0; n < partials.size(); ++n) {
        const auto id = partials[n].first;
        if (n > 0 && id == partials[n - 1].first)
            throw data_error("merge_partials: duplicate query_id " + std::to_string(id));
        if (id != static_cast<std::int32_t>(n))
            throw data_error("merge_partials: missing query_id " + std::to_string(n));
    }

    RelationMatrix matrix;
    matrix.corpus_size = corpus_size;
    matrix.query_count = partials.size();
    matrix.config_fingerprint = config_fingerprint;
    for (const auto& [qid, partial] : partials)
        for (const auto& [key, mass] : partial) matrix.entries[key] += mass;
    const double scale = 1.0 / static_cast<double>(partials.size());
    for (auto& [key, mass] : matrix.entries) mass *= scale;
    return matrix;
}

inline std::uint64_t params_fingerprint(const TwoStageParams& params,
                                        std::uint64_t embedder_fingerprint) {
    const std::string canon = "k1=" + std::to_string(params.k1) +
                              ";k2=" + std::to_string(params.k2) +
                              ";tau=" + std::to_string(params.temperature) +
                              ";selfex=" + std::to_string(params.self_exclusion ? 1 : 0) +
                              ";maxcond=" + std::to_string(params.max_cond_tokens) +
                              ";qtok=" + std::to_string(params.query_config.max_tokens) +
                              ";emb=" + std::to_string(embedder_fingerprint);
    return fnv1a64(canon);
}

/// Run the full extraction over a query collection. Workers > 1 distribute
/// queries across threads; output is bitwise identical to workers == 1.
/// When collect_results is given, each query's TwoStageResult is stored at
/// its position for debugging dumps.
inline RelationMatrix extract_relations(const LateInteractionIndex& index,
                                        const std::vector<TokenSequence>& doc_tokens,
                                        const Embedder& embedder,
                                        const std::vector<Query>& queries,
                                        const TwoStageParams& params = {},
                                        std::size_t workers = 1,
                                        std::vector<TwoStageResult>* collect_results = nullptr) {
    if (queries.empty()) throw data_error("extract_relations: empty query set");

    std::vector<std::pair<std::int32_t, SparsePairMap>> partials(queries.size());
    if (collect_results) collect_results->resize(queries.size());

    auto run_one = [&](std::size_t n) {
        TwoStageResult r = two_stage_retrieve(index, doc_tokens, embedder, queries[n], params);
        partials[n] = {queries[n].query_id, accumulate_pairs(r)};
        if (collect_results) (*collect_results)[n] = std::move(r);
    };

    if (workers <= 1 || queries.size() == 1) {
        for (std::size_t n = 0; n < queries.size(); ++n) run_one(n);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        const std::size_t count = std::min(workers, queries.size());
        pool.reserve(count);
        std::atomic<bool> failed{false};
        std::string first_error;
        std::mutex error_mu;
        for (std::size_t w = 0; w < count; ++w) {
            pool.emplace_back([&] {
                while (true) {
                    const std::size_t n = next.fetch_add(1);
                    if (n >= queries.size() || failed.load()) break;
                    try {
                        run_one(n);
                    } catch (const std::exception& e) {
                        std::lock_guard<std::mutex> lock(error_mu);
                        if (!failed.exchange(true)) first_error = e.what();
                        break;
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (failed.load()) throw data_error(first_error);
    }

    return merge_partials(std::move(partials), index.corpus_size(),
                          params_fingerprint(params, embedder.fingerprint()));
}

// ---------------------------------------------------------------------------
// Summary statistics

struct MatrixStats {
    std::size_t nonzero_count = 0;
    double total_mass = 0.0;
    std::vector<std::tuple<std::int32_t, std::int32_t, double>> top_entries;
    std::map<std::int32_t, double> row_marginals;  // i -> sum_j R[i,j]
};

/// Dense M x M view; intended for tiny corpora only.
inline std::vector<std::vector<double>> to_dense(const RelationMatrix& matrix) {
    std::vector<std::vector<double>> dense(matrix.corpus_size,
                                           std::vector<double>(matrix.corpus_size, 0.0));
    for (const auto& [key, mass] : matrix.entries)
        dense[static_cast<std::size_t>(key.first)][static_cast<std::size_t>(key.second)] = mass;
    return dense;
}

inline MatrixStats matrix_stats(const RelationMatrix& matrix, std::size_t top_n = 10) {
    MatrixStats stats;
    stats.nonzero_count = matrix.entries.size();
    for (const auto& [key, mass] : matrix.entries) {
        stats.total_mass += mass;
        stats.row_marginals[key.first] += mass;
    }
    std::vector<std::tuple<std::int32_t, std::int32_t, double>> all;
    all.reserve(matrix.entries.size());
    for (const auto& [key, mass] : matrix.entries)
        all.emplace_back(key.first, key.second, mass);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        if (std::get<2>(a) != std::get<2>(b)) return std::get<2>(a) > std::get<2>(b);
        if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
        return std::get<1>(a) < std::get<1>(b);
    });
    if (all.size() > top_n) all.resize(top_n);
    stats.top_entries = std::move(all);
    return stats;
}

// ---------------------------------------------------------------------------
// Persistence: CSV "i,j,mass" sorted by (i,j) plus a JSON sidecar with the
// run parameters. Masses are written with shortest round-trip formatting, so
// reading the CSV back reproduces the doubles exactly.

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw data_error("bad float '" + std::string(s) + "'");
    return v;
}

} // namespace detail

inline void write_matrix_csv(const RelationMatrix& matrix, const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary: stable bytes on all hosts
    if (!out) throw io_error("cannot open matrix file for writing: " + path);
    out << "i,j,mass\n";
    for (const auto& [key, mass] : matrix.entries)
        out << key.first << ',' << key.second << ',' << detail::format_double(mass) << '\n';
    if (!out) throw io_error("write failed: " + path);
}

struct MatrixMeta {
    std::size_t corpus_size = 0;
    std::size_t query_count = 0;
    std::size_t k1 = 0, k2 = 0;
    double temperature = 1.0;
    bool self_exclusion = true;
    std::uint64_t embedder_fingerprint = 0;
    std::uint64_t config_fingerprint = 0;
};

inline void write_matrix_sidecar(const RelationMatrix& matrix, const TwoStageParams& params,
                                 std::uint64_t embedder_fingerprint, const std::string& path) {
    nlohmann::ordered_json j;
    j["M"] = matrix.corpus_size;
    j["N"] = matrix.query_count;
    j["k1"] = params.k1;
    j["k2"] = params.k2;
    j["temperature"] = params.temperature;
    j["self_exclusion"] = params.self_exclusion;
    j["embedder_fingerprint"] = embedder_fingerprint;
    j["config_fingerprint"] = matrix.config_fingerprint;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open sidecar for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw io_error("write failed: " + path);
}

inline MatrixMeta read_matrix_sidecar(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open sidecar: " + path);
    nlohmann::json j;
    try {
        in >> j;
        MatrixMeta meta;
        meta.corpus_size = j.at("M").get<std::size_t>();
        meta.query_count = j.at("N").get<std::size_t>();
        meta.k1 = j.at("k1").get<std::size_t>();
        meta.k2 = j.at("k2").get<std::size_t>();
        meta.temperature = j.at("temperature").get<double>();
        meta.self_exclusion = j.at("self_exclusion").get<bool>();
        meta.embedder_fingerprint = j.at("embedder_fingerprint").get<std::uint64_t>();
        meta.config_fingerprint = j.at("config_fingerprint").get<std::uint64_t>();
        return meta;
    } catch (const nlohmann::json::exception& e) {
        throw data_error("bad sidecar " + path + ": " + e.what());
    }
}

inline RelationMatrix read_matrix_csv(const std::string& path, std::size_t corpus_size,
                                      std::size_t query_count = 0) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open matrix file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "i,j,mass")
        throw data_error("bad matrix header in " + path);
    RelationMatrix matrix;
    matrix.corpus_size = corpus_size;
    matrix.query_count = query_count;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw data_error("bad matrix row at line " + std::to_string(line_no));
        try {
            const int i = std::stoi(line.substr(0, c1));
            const int j = std::stoi(line.substr(c1 + 1, c2 - c1 - 1));
            matrix.entries[{i, j}] = detail::parse_double(
                std::string_view(line).substr(c2 + 1));
        } catch (const std::exception&) {
            throw data_error("bad matrix row at line " + std::to_string(line_no) +
                             " in " + path);
        }
    }
    return matrix;
}

} // namespace edrmq
