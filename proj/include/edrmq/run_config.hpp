#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>

#include "json.hpp"

#include "edrmq/conditional.hpp"
#include "edrmq/embedder.hpp"
#include "edrmq/errors.hpp"
#include "edrmq/graph.hpp"

// Effective configuration of a run. Every command echoes this as JSON into
// its output directory; re-running from that file reproduces the outputs
// byte for byte.

namespace edrmq {

struct RunConfig {
    std::string corpus_path;
    std::string queries_path;
    std::string queries_format = "jsonl";  // jsonl | lines
    std::string output_dir;

    std::size_t k1 = 5;
    std::size_t k2 = 5;
    double temperature = 1.0;
    bool self_exclusion = true;

    std::string embedder_kind = "hashing";  // hashing | precomputed
    std::size_t dim = 64;
    std::uint64_t seed = 0;
    std::string embeddings_path;

    std::size_t max_doc_tokens = 180;
    std::size_t max_query_tokens = 64;
    std::size_t max_cond_tokens = 244;

    std::optional<std::size_t> max_queries;
    std::size_t workers = 1;

    std::string symmetrize = "sum";  // sum | max | none
    double threshold = 0.0;
    std::optional<std::size_t> top_m;
    std::string format = "gexf";  // gexf | csv

    EmbedderSpec embedder_spec() const {
        EmbedderSpec spec;
        if (embedder_kind == "hashing") {
            spec.kind = EmbedderKind::hashing;
            spec.dim = dim;
            spec.seed = seed;
        } else if (embedder_kind == "precomputed") {
            spec.kind = EmbedderKind::precomputed;
            spec.dim = 0;
            spec.path = embeddings_path;
        } else {
            throw data_error("unknown embedder kind '" + embedder_kind + "'");
        }
        return spec;
    }

    TwoStageParams two_stage_params() const {
        TwoStageParams p;
        p.k1 = k1;
        p.k2 = k2;
        p.temperature = temperature;
        p.self_exclusion = self_exclusion;
        p.max_cond_tokens = max_cond_tokens;
        p.query_config = TokenizerConfig{max_query_tokens};
        return p;
    }

    ExportConfig export_config() const {
        ExportConfig c;
        c.symmetrize = symmetrize_from_string(symmetrize);
        c.threshold = threshold;
        c.top_m_per_node = top_m;
        return c;
    }

    void validate() const {
        if (k1 == 0 || k2 == 0) throw data_error("k1 and k2 must be >= 1");
        if (!(temperature > 0.0)) throw data_error("temperature must be > 0");
        if (embedder_kind == "hashing" && dim < 2) throw data_error("dim must be >= 2");
        if (max_doc_tokens == 0 || max_query_tokens == 0 || max_cond_tokens == 0)
            throw data_error("token budgets must be >= 1");
        if (max_queries && *max_queries == 0) throw data_error("max_queries must be >= 1");
        if (workers == 0) throw data_error("workers must be >= 1");
        if (threshold < 0.0) throw data_error("threshold must be >= 0");
        if (top_m && *top_m == 0) throw data_error("top_m must be >= 1");
        if (format != "gexf" && format != "csv")
            throw data_error("unknown export format '" + format + "'");
        if (queries_format != "jsonl" && queries_format != "lines")
            throw data_error("unknown queries format '" + queries_format + "'");
        symmetrize_from_string(symmetrize);
        embedder_spec();
    }
};

inline nlohmann::ordered_json to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["corpus"] = c.corpus_path;
    j["queries"] = c.queries_path;
    j["queries_format"] = c.queries_format;
    j["output_dir"] = c.output_dir;
    j["k1"] = c.k1;
    j["k2"] = c.k2;
    j["temperature"] = c.temperature;
    j["self_exclusion"] = c.self_exclusion;
    j["embedder"] = c.embedder_kind;
    j["dim"] = c.dim;
    j["seed"] = c.seed;
    j["embeddings_path"] = c.embeddings_path;
    j["max_doc_tokens"] = c.max_doc_tokens;
    j["max_query_tokens"] = c.max_query_tokens;
    j["max_cond_tokens"] = c.max_cond_tokens;
    if (c.max_queries) j["max_queries"] = *c.max_queries; else j["max_queries"] = nullptr;
    j["workers"] = c.workers;
    j["symmetrize"] = c.symmetrize;
    j["threshold"] = c.threshold;
    if (c.top_m) j["top_m"] = *c.top_m; else j["top_m"] = nullptr;
    j["format"] = c.format;
    return j;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig c;
    try {
        c.corpus_path = j.value("corpus", c.corpus_path);
        c.queries_path = j.value("queries", c.queries_path);
        c.queries_format = j.value("queries_format", c.queries_format);
        c.output_dir = j.value("output_dir", c.output_dir);
        c.k1 = j.value("k1", c.k1);
        c.k2 = j.value("k2", c.k2);
        c.temperature = j.value("temperature", c.temperature);
        c.self_exclusion = j.value("self_exclusion", c.self_exclusion);
        c.embedder_kind = j.value("embedder", c.embedder_kind);
        c.dim = j.value("dim", c.dim);
        c.seed = j.value("seed", c.seed);
        c.embeddings_path = j.value("embeddings_path", c.embeddings_path);
        c.max_doc_tokens = j.value("max_doc_tokens", c.max_doc_tokens);
        c.max_query_tokens = j.value("max_query_tokens", c.max_query_tokens);
        c.max_cond_tokens = j.value("max_cond_tokens", c.max_cond_tokens);
        if (j.contains("max_queries") && !j.at("max_queries").is_null())
            c.max_queries = j.at("max_queries").get<std::size_t>();
        c.workers = j.value("workers", c.workers);
        c.symmetrize = j.value("symmetrize", c.symmetrize);
        c.threshold = j.value("threshold", c.threshold);
        if (j.contains("top_m") && !j.at("top_m").is_null())
            c.top_m = j.at("top_m").get<std::size_t>();
        c.format = j.value("format", c.format);
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("bad config: ") + e.what());
    }
    return c;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw data_error("bad config file " + path + ": " + e.what());
    }
    return run_config_from_json(j);
}

inline void write_run_config(const RunConfig& c, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open config file for writing: " + path);
    out << to_json(c).dump(2) << '\n';
    if (!out) throw io_error("write failed: " + path);
}

} // namespace edrmq
