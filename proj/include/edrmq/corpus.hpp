#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "edrmq/errors.hpp"

// Corpus and query ingestion plus the shared tokenizer. Loading is a pure
// function of the file bytes: the same file always yields the same ids and
// token sequences.

namespace edrmq {

struct Document {
    std::int32_t doc_id = 0;  // dense index, 0..M-1 in file order
    std::string external_id;
    std::string title;
    std::string text;
    std::string category;  // only used as a node attribute on export
};

struct Query {
    std::int32_t query_id = 0;  // dense index, 0..N-1 in file order
    std::string external_id;
    std::string text;
};

struct TokenizerConfig {
    std::size_t max_tokens = 180;  // truncate, never pad
};

inline TokenizerConfig document_tokenizer() { return TokenizerConfig{180}; }
inline TokenizerConfig query_tokenizer() { return TokenizerConfig{64}; }

struct TokenSequence {
    std::vector<std::string> tokens;
    std::int64_t source_id = -1;  // document or query id
};

/// Lowercased word tokens: maximal runs of ASCII letters/digits, with
/// non-ASCII bytes treated as word characters (case folding is ASCII-only).
/// Deterministic, and idempotent on its own space-joined output.
inline TokenSequence tokenize(std::string_view text, const TokenizerConfig& config,
                              std::int64_t source_id = -1) {
    TokenSequence seq;
    seq.source_id = source_id;
    std::string current;
    auto flush = [&] {
        if (!current.empty() && seq.tokens.size() < config.max_tokens)
            seq.tokens.push_back(std::move(current));
        current.clear();
    };
    for (unsigned char c : text) {
        if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80) {
            current.push_back(static_cast<char>(c));
        } else if (c >= 'A' && c <= 'Z') {
            current.push_back(static_cast<char>(c - 'A' + 'a'));
        } else {
            flush();
        }
        if (seq.tokens.size() == config.max_tokens) break;
    }
    flush();
    if (seq.tokens.empty()) throw data_error("untokenizable text");
    return seq;
}

/// Text a document is indexed under: title and body concatenated, so that
/// title-only matches still count.
inline std::string indexed_text(const Document& doc) {
    if (doc.title.empty()) return doc.text;
    return doc.title + " " + doc.text;
}

inline std::vector<TokenSequence> tokenize_corpus(const std::vector<Document>& corpus,
                                                  const TokenizerConfig& config) {
    std::vector<TokenSequence> out;
    out.reserve(corpus.size());
    for (const auto& doc : corpus) {
        try {
            out.push_back(tokenize(indexed_text(doc), config, doc.doc_id));
        } catch (const data_error& e) {
            throw data_error("document '" + doc.external_id + "' (doc_id " +
                             std::to_string(doc.doc_id) + "): " + e.what());
        }
    }
    return out;
}

namespace detail {

inline std::string trim_copy(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::string_view(" \t\r\n\f\v").find(s[b]) != std::string_view::npos) ++b;
    while (e > b && std::string_view(" \t\r\n\f\v").find(s[e - 1]) != std::string_view::npos) --e;
    return std::string(s.substr(b, e - b));
}

// Accepts string or integer ids so raw SciFact exports load unmodified.
inline std::string json_id(const nlohmann::json& obj, const char* key) {
    const auto& v = obj.at(key);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    throw data_error(std::string("field '") + key + "' must be a string or integer");
}

// "text" is the documented key; "abstract" (a list of sentences, as SciFact
// ships it) is accepted as a fallback and joined with spaces.
inline std::string json_text(const nlohmann::json& obj) {
    if (obj.contains("text")) return obj.at("text").get<std::string>();
    if (obj.contains("abstract")) {
        const auto& a = obj.at("abstract");
        if (a.is_string()) return a.get<std::string>();
        std::string joined;
        for (const auto& sent : a) {
            if (!joined.empty()) joined += " ";
            joined += sent.get<std::string>();
        }
        return joined;
    }
    throw data_error("missing required field 'text'");
}

} // namespace detail

/// Load a JSONL corpus: one object per line with keys "id" and "text"
/// (optional "title", "category"). doc_id is the zero-based record index.
inline std::vector<Document> load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open corpus file: " + path);

    std::vector<Document> docs;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim_copy(line).empty()) continue;
        Document doc;
        try {
            const auto obj = nlohmann::json::parse(line);
            doc.external_id = obj.contains("id") ? detail::json_id(obj, "id")
                                                 : detail::json_id(obj, "doc_id");
            doc.text = detail::json_text(obj);
            if (obj.contains("title") && obj.at("title").is_string())
                doc.title = obj.at("title").get<std::string>();
            if (obj.contains("category") && obj.at("category").is_string())
                doc.category = obj.at("category").get<std::string>();
        } catch (const data_error& e) {
            throw data_error("corpus line " + std::to_string(line_no) + ": " + e.what());
        } catch (const nlohmann::json::exception& e) {
            throw data_error("corpus line " + std::to_string(line_no) + ": " + e.what());
        }
        if (detail::trim_copy(doc.text).empty())
            throw data_error("corpus line " + std::to_string(line_no) + ": empty text");
        if (!seen_ids.insert(doc.external_id).second)
            throw data_error("corpus line " + std::to_string(line_no) +
                             ": duplicate external id '" + doc.external_id + "'");
        doc.doc_id = static_cast<std::int32_t>(docs.size());
        docs.push_back(std::move(doc));
    }
    if (docs.empty()) throw data_error("empty corpus: " + path);
    return docs;
}

enum class QueryFormat { jsonl, plain_lines };

/// Load queries either as JSONL ({"id", "text"}; "claim" is accepted for
/// "text" so SciFact claim files load directly) or as plain UTF-8 lines,
/// one query per non-blank line.
inline std::vector<Query> load_queries(const std::string& path, QueryFormat format) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open query file: " + path);

    std::vector<Query> queries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim_copy(line).empty()) continue;
        Query q;
        if (format == QueryFormat::plain_lines) {
            q.text = detail::trim_copy(line);
        } else {
            try {
                const auto obj = nlohmann::json::parse(line);
                if (obj.contains("id")) q.external_id = detail::json_id(obj, "id");
                if (obj.contains("text"))
                    q.text = obj.at("text").get<std::string>();
                else if (obj.contains("claim"))
                    q.text = obj.at("claim").get<std::string>();
                else
                    throw data_error("missing required field 'text'");
            } catch (const data_error& e) {
                throw data_error("query line " + std::to_string(line_no) + ": " + e.what());
            } catch (const nlohmann::json::exception& e) {
                throw data_error("query line " + std::to_string(line_no) + ": " + e.what());
            }
        }
        if (detail::trim_copy(q.text).empty())
            throw data_error("query line " + std::to_string(line_no) + ": empty text");
        q.query_id = static_cast<std::int32_t>(queries.size());
        queries.push_back(std::move(q));
    }
    if (queries.empty()) throw data_error("empty query set: " + path);
    return queries;
}

} // namespace edrmq
