#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "edrmq/corpus.hpp"
#include "edrmq/embedder.hpp"
#include "edrmq/errors.hpp"
#include "edrmq/late_interaction.hpp"

// Two-stage conditional retrieval: stage 1 retrieves for the query alone,
// stage 2 retrieves for each stage-1 document with the conditional query
// [doc; query]. Raw MaxSim scores become probabilities by softmax over the
// retrieved candidate set, so each stage's mass sums to exactly one.

namespace edrmq {

struct NormalizationConfig {
    double temperature = 1.0;  // > 0
};

/// Softmax over the candidates' raw scores, max-subtracted for stability.
/// Order is preserved; probabilities sum to 1 within 1e-9.
inline std::vector<Candidate> normalize_scores(std::vector<Candidate> candidates,
                                               const NormalizationConfig& config = {}) {
    if (candidates.empty()) throw data_error("normalize_scores: empty candidate list");
    if (!(config.temperature > 0.0)) throw data_error("temperature must be > 0");
    double max_raw = candidates.front().raw_score;
    for (const auto& c : candidates) max_raw = std::max(max_raw, c.raw_score);
    double sum = 0.0;
    for (auto& c : candidates) {
        c.probability = std::exp((c.raw_score - max_raw) / config.temperature);
        sum += c.probability;
    }
    const double inv = 1.0 / sum;
    for (auto& c : candidates) c.probability *= inv;
    return candidates;
}

struct ConditionalQuery {
    TokenSequence tokens;
    // Set when max_len < |query|: the full query is kept anyway and every
    // document token is dropped.
    bool query_overflow = false;
};

/// Concatenate [doc; query] in that order, truncating to max_len by trimming
/// from the FRONT of the document segment. Query tokens are never dropped
/// before document tokens.
inline ConditionalQuery build_conditional_query(const TokenSequence& doc_tokens,
                                                const TokenSequence& query_tokens,
                                                std::size_t max_len) {
    if (doc_tokens.tokens.empty() || query_tokens.tokens.empty())
        throw data_error("build_conditional_query: empty token sequence");
    ConditionalQuery out;
    out.tokens.source_id = query_tokens.source_id;
    const std::size_t nq = query_tokens.tokens.size();
    std::size_t keep_doc = 0;
    if (max_len < nq) {
        out.query_overflow = true;
    } else {
        keep_doc = std::min(doc_tokens.tokens.size(), max_len - nq);
    }
    out.tokens.tokens.reserve(keep_doc + nq);
    const std::size_t skip = doc_tokens.tokens.size() - keep_doc;
    for (std::size_t i = skip; i < doc_tokens.tokens.size(); ++i)
        out.tokens.tokens.push_back(doc_tokens.tokens[i]);
    for (const auto& t : query_tokens.tokens) out.tokens.tokens.push_back(t);
    return out;
}

struct TwoStageParams {
    std::size_t k1 = 5;
    std::size_t k2 = 5;
    double temperature = 1.0;
    bool self_exclusion = true;       // forbid stage 2 from returning the stage-1 doc
    std::size_t max_cond_tokens = 244;  // doc budget (180) + query budget (64)
    TokenizerConfig query_config = query_tokenizer();
};

struct TwoStageResult {
    std::int32_t query_id = 0;
    std::vector<Candidate> stage1;               // probabilities sum to 1
    std::vector<std::vector<Candidate>> stage2;  // parallel to stage1; each sums to 1
    bool any_empty_stage2 = false;  // e.g. 1-document corpus with self-exclusion
    bool any_query_overflow = false;
};

/// Run both retrieval stages for one query. Pure: safe to call concurrently
/// on a shared index.
inline TwoStageResult two_stage_retrieve(const LateInteractionIndex& index,
                                         const std::vector<TokenSequence>& doc_tokens,
                                         const Embedder& embedder,
                                         const Query& query,
                                         const TwoStageParams& params = {}) {
    if (params.k1 == 0 || params.k2 == 0) throw data_error("k1 and k2 must be >= 1");
    if (doc_tokens.size() != index.corpus_size())
        throw data_error("doc token list does not match index size");

    TokenSequence qtoks;
    try {
        qtoks = tokenize(query.text, params.query_config, query.query_id);
    } catch (const data_error& e) {
        throw data_error("query " + std::to_string(query.query_id) + ": " + e.what());
    }
    const TokenMatrix qmat = embed_tokens(qtoks, embedder);

    const NormalizationConfig norm{params.temperature};
    TwoStageResult result;
    result.query_id = query.query_id;
    result.stage1 = normalize_scores(retrieve_topk(index, qmat, params.k1), norm);
    result.stage2.reserve(result.stage1.size());

    for (const auto& cand : result.stage1) {
        const ConditionalQuery cq = build_conditional_query(
            doc_tokens[static_cast<std::size_t>(cand.doc_id)], qtoks, params.max_cond_tokens);
        if (cq.query_overflow) result.any_query_overflow = true;
        const TokenMatrix cmat = embed_tokens(cq.tokens, embedder);
        const std::int32_t self[1] = {cand.doc_id};
        auto hits = retrieve_topk(index, cmat, params.k2,
                                  params.self_exclusion
                                      ? std::span<const std::int32_t>(self, 1)
                                      : std::span<const std::int32_t>());
        if (hits.empty()) {
            result.any_empty_stage2 = true;
            result.stage2.emplace_back();
        } else {
            result.stage2.push_back(normalize_scores(std::move(hits), norm));
        }
    }
    return result;
}

} // namespace edrmq
