// edrmq command line: build late-interaction indexes, extract document
// relation matrices by query marginalization, compute the TF-IDF baseline
// network, and export Gephi-compatible graphs.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 I/O error.

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "edrmq/edrmq.hpp"

namespace fs = std::filesystem;
using namespace edrmq;

namespace {

std::vector<Query> load_query_set(const RunConfig& cfg) {
    auto queries = load_queries(cfg.queries_path, cfg.queries_format == "lines"
                                                      ? QueryFormat::plain_lines
                                                      : QueryFormat::jsonl);
    if (cfg.max_queries && *cfg.max_queries < queries.size())
        queries.resize(*cfg.max_queries);
    return queries;
}

void apply_env_seed(RunConfig& cfg) {
    if (const char* env = std::getenv("RELEX_SEED")) {
        std::uint64_t v = 0;
        const std::string s(env);
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
            throw data_error("RELEX_SEED is not an unsigned integer: '" + s + "'");
        cfg.seed = v;
    }
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("cannot create output directory " + dir + ": " + ec.message());
}

void echo_config(const RunConfig& cfg, const std::string& command, const std::string& path) {
    auto j = to_json(cfg);
    j["command"] = command;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open config file for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw io_error("write failed: " + path);
}

struct Engine {
    std::vector<Document> corpus;
    std::vector<TokenSequence> doc_tokens;
    std::unique_ptr<Embedder> embedder;
    LateInteractionIndex index;
};

Engine build_engine(const RunConfig& cfg) {
    Engine e;
    e.corpus = load_corpus(cfg.corpus_path);
    e.doc_tokens = tokenize_corpus(e.corpus, TokenizerConfig{cfg.max_doc_tokens});
    e.embedder = make_embedder(cfg.embedder_spec());
    e.index = build_index(e.doc_tokens, *e.embedder);
    std::cout << "indexed " << e.index.corpus_size() << " documents (dim " << e.index.dim
              << ")\n";
    return e;
}

void dump_two_stage(const std::vector<TwoStageResult>& results, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open dump file for writing: " + path);
    for (const auto& r : results) {
        nlohmann::ordered_json j;
        j["query_id"] = r.query_id;
        auto stage1 = nlohmann::ordered_json::array();
        for (const auto& c : r.stage1)
            stage1.push_back({{"doc", c.doc_id}, {"score", c.raw_score}, {"p", c.probability}});
        j["stage1"] = stage1;
        auto stage2 = nlohmann::ordered_json::array();
        for (std::size_t s = 0; s < r.stage2.size(); ++s) {
            auto hits = nlohmann::ordered_json::array();
            for (const auto& c : r.stage2[s])
                hits.push_back({{"doc", c.doc_id}, {"score", c.raw_score}, {"p", c.probability}});
            stage2.push_back({{"given", r.stage1[s].doc_id}, {"hits", hits}});
        }
        j["stage2"] = stage2;
        out << j.dump() << '\n';
    }
    if (!out) throw io_error("write failed: " + path);
}

RelationMatrix run_extract(const Engine& engine, const RunConfig& cfg,
                           const std::string& dump_path) {
    const auto queries = load_query_set(cfg);
    std::vector<TwoStageResult> results;
    const auto matrix =
        extract_relations(engine.index, engine.doc_tokens, *engine.embedder, queries,
                          cfg.two_stage_params(), cfg.workers,
                          dump_path.empty() ? nullptr : &results);
    if (!dump_path.empty()) dump_two_stage(results, dump_path);
    std::cout << "extracted " << matrix.entries.size() << " document pairs from "
              << matrix.query_count << " queries\n";
    return matrix;
}

void write_extract_outputs(const RelationMatrix& matrix, const Engine& engine,
                           const RunConfig& cfg) {
    write_matrix_csv(matrix, (fs::path(cfg.output_dir) / "matrix.csv").string());
    write_matrix_sidecar(matrix, cfg.two_stage_params(), engine.embedder->fingerprint(),
                         (fs::path(cfg.output_dir) / "matrix.meta.json").string());
}

RelationGraph graph_from_inputs(const RunConfig& cfg, const std::string& matrix_path,
                                const std::string& meta_path, const std::string& edges_path,
                                const std::vector<Document>& corpus) {
    if (!matrix_path.empty()) {
        const std::string meta_file =
            meta_path.empty() ? matrix_path.substr(0, matrix_path.size() - 4) + ".meta.json"
                              : meta_path;
        const auto meta = read_matrix_sidecar(meta_file);
        const auto matrix = read_matrix_csv(matrix_path, meta.corpus_size, meta.query_count);
        return to_graph(matrix, corpus, cfg.export_config());
    }
    return to_graph(read_edge_list(edges_path), corpus, cfg.export_config());
}

void print_stats(const NetworkStats& stats) {
    std::cout << "nodes: " << stats.node_count << "\nedges: " << stats.edge_count
              << "\ndensity: " << stats.density << "\ncomponents: " << stats.component_count
              << "\nisolated nodes: " << stats.isolated_count << "\n";
}

// Options shared by the retrieval-driven commands.
void add_embedder_options(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--embedder", cfg.embedder_kind, "Embedder kind: hashing | precomputed")
        ->default_val(cfg.embedder_kind);
    cmd->add_option("--dim", cfg.dim, "Embedding dimension (hashing)")->default_val(cfg.dim);
    cmd->add_option("--seed", cfg.seed, "Embedder seed (hashing)")->default_val(cfg.seed);
    cmd->add_option("--embeddings", cfg.embeddings_path,
                    "Token embedding TSV (precomputed kind)");
    cmd->add_option("--max-doc-tokens", cfg.max_doc_tokens, "Document token budget")
        ->default_val(cfg.max_doc_tokens);
}

void add_retrieval_options(CLI::App* cmd, RunConfig& cfg, bool& allow_self_pairs) {
    cmd->add_option("--k1", cfg.k1, "Stage-1 top-k")->default_val(cfg.k1);
    cmd->add_option("--k2", cfg.k2, "Stage-2 top-k")->default_val(cfg.k2);
    cmd->add_option("--temperature", cfg.temperature, "Softmax temperature")
        ->default_val(cfg.temperature);
    cmd->add_flag("--allow-self-pairs", allow_self_pairs,
                  "Let stage 2 return the stage-1 document (diagonal entries)");
    cmd->add_option("--max-query-tokens", cfg.max_query_tokens, "Query token budget")
        ->default_val(cfg.max_query_tokens);
    cmd->add_option("--max-cond-tokens", cfg.max_cond_tokens,
                    "Conditional query token budget")
        ->default_val(cfg.max_cond_tokens);
    cmd->add_option("--max-queries", cfg.max_queries, "Use only the first K queries");
    cmd->add_option("--workers", cfg.workers, "Worker threads for extraction")
        ->default_val(cfg.workers);
}

void add_export_options(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--symmetrize", cfg.symmetrize, "Symmetrization: sum | max | none")
        ->default_val(cfg.symmetrize);
    cmd->add_option("--threshold", cfg.threshold, "Minimum edge weight")
        ->default_val(cfg.threshold);
    cmd->add_option("--top-m", cfg.top_m, "Keep each node's top-m heaviest edges");
    cmd->add_option("--format", cfg.format, "Graph format: gexf | csv")
        ->default_val(cfg.format);
}

// --config FILE seeds the defaults before normal flag parsing, so explicit
// flags win over the file and the echoed config stays self-reproducing.
std::string peek_config_path(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) return argv[i + 1];
        if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
    }
    return {};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"edrmq: document relationship extraction by query marginalization"};
    app.require_subcommand(1);

    RunConfig cfg;
    try {
        const std::string config_path = peek_config_path(argc, argv);
        if (!config_path.empty()) cfg = load_run_config(config_path);
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const data_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::string config_file;  // consumed by peek_config_path; registered so CLI11 accepts it
    bool allow_self_pairs = !cfg.self_exclusion;

    // index
    auto* cmd_index = app.add_subcommand("index", "Build and persist a late-interaction index");
    std::string index_out = "index.bin";
    cmd_index->add_option("--corpus", cfg.corpus_path, "Corpus JSONL")->required();
    cmd_index->add_option("--out", index_out, "Output index file")->default_val(index_out);
    cmd_index->add_option("--config", config_file, "Load defaults from a config JSON");
    add_embedder_options(cmd_index, cfg);

    // extract
    auto* cmd_extract = app.add_subcommand(
        "extract", "Run two-stage retrieval over all queries and write the relation matrix");
    std::string dump_path;
    cmd_extract->add_option("--corpus", cfg.corpus_path, "Corpus JSONL")->required();
    cmd_extract->add_option("--queries", cfg.queries_path, "Query file")->required();
    cmd_extract->add_option("--queries-format", cfg.queries_format, "jsonl | lines")
        ->default_val(cfg.queries_format);
    cmd_extract->add_option("--out-dir", cfg.output_dir, "Output directory")->required();
    cmd_extract->add_option("--dump-twostage", dump_path,
                            "Also dump per-query two-stage results as JSONL");
    cmd_extract->add_option("--config", config_file, "Load defaults from a config JSON");
    add_embedder_options(cmd_extract, cfg);
    add_retrieval_options(cmd_extract, cfg, allow_self_pairs);

    // baseline
    auto* cmd_baseline =
        app.add_subcommand("baseline", "TF-IDF top-m similarity network over the corpus");
    std::size_t baseline_m = 25;
    bool log_tf = false;
    cmd_baseline->add_option("--corpus", cfg.corpus_path, "Corpus JSONL")->required();
    cmd_baseline->add_option("--out-dir", cfg.output_dir, "Output directory")->required();
    cmd_baseline->add_option("--top-m", baseline_m, "Neighbors per document")
        ->default_val(baseline_m);
    cmd_baseline->add_flag("--log-tf", log_tf, "Use 1 + ln(tf) instead of raw counts");
    cmd_baseline->add_option("--max-doc-tokens", cfg.max_doc_tokens, "Document token budget")
        ->default_val(cfg.max_doc_tokens);
    cmd_baseline->add_option("--config", config_file, "Load defaults from a config JSON");

    // export
    auto* cmd_export = app.add_subcommand("export", "Convert a matrix or edge list to a graph");
    std::string matrix_path, meta_path, edges_path;
    cmd_export->add_option("--matrix", matrix_path, "Relation matrix CSV");
    cmd_export->add_option("--meta", meta_path, "Matrix sidecar JSON (default <matrix>.meta.json)");
    cmd_export->add_option("--edges", edges_path, "Baseline edge list CSV");
    cmd_export->add_option("--corpus", cfg.corpus_path, "Corpus JSONL (node attributes)")
        ->required();
    cmd_export->add_option("--out-dir", cfg.output_dir, "Output directory")->required();
    cmd_export->add_option("--config", config_file, "Load defaults from a config JSON");
    add_export_options(cmd_export, cfg);

    // stats
    auto* cmd_stats = app.add_subcommand("stats", "Network statistics of the exported graph");
    cmd_stats->add_option("--matrix", matrix_path, "Relation matrix CSV");
    cmd_stats->add_option("--meta", meta_path, "Matrix sidecar JSON (default <matrix>.meta.json)");
    cmd_stats->add_option("--edges", edges_path, "Baseline edge list CSV");
    cmd_stats->add_option("--corpus", cfg.corpus_path, "Corpus JSONL")->required();
    cmd_stats->add_option("--out-dir", cfg.output_dir, "Output directory")->required();
    cmd_stats->add_option("--config", config_file, "Load defaults from a config JSON");
    add_export_options(cmd_stats, cfg);

    // pipeline
    auto* cmd_pipeline = app.add_subcommand(
        "pipeline", "index -> extract -> export -> stats in one run directory");
    cmd_pipeline->add_option("--corpus", cfg.corpus_path, "Corpus JSONL")->required();
    cmd_pipeline->add_option("--queries", cfg.queries_path, "Query file")->required();
    cmd_pipeline->add_option("--queries-format", cfg.queries_format, "jsonl | lines")
        ->default_val(cfg.queries_format);
    cmd_pipeline->add_option("--out-dir", cfg.output_dir, "Output directory")->required();
    cmd_pipeline->add_option("--dump-twostage", dump_path,
                             "Also dump per-query two-stage results as JSONL");
    cmd_pipeline->add_option("--config", config_file, "Load defaults from a config JSON");
    add_embedder_options(cmd_pipeline, cfg);
    add_retrieval_options(cmd_pipeline, cfg, allow_self_pairs);
    add_export_options(cmd_pipeline, cfg);

    // synth
    auto* cmd_synth = app.add_subcommand(
        "synth", "Generate a synthetic clustered corpus with ground-truth labels");
    SynthSpec synth;
    cmd_synth->add_option("--out-dir", cfg.output_dir, "Output directory")->required();
    cmd_synth->add_option("--clusters", synth.clusters)->default_val(synth.clusters);
    cmd_synth->add_option("--docs-per-cluster", synth.docs_per_cluster)
        ->default_val(synth.docs_per_cluster);
    cmd_synth->add_option("--vocab-per-cluster", synth.vocab_per_cluster)
        ->default_val(synth.vocab_per_cluster);
    cmd_synth->add_option("--shared-vocab", synth.shared_vocab)->default_val(synth.shared_vocab);
    cmd_synth->add_option("--queries-per-cluster", synth.queries_per_cluster)
        ->default_val(synth.queries_per_cluster);
    cmd_synth->add_option("--bridge-fraction", synth.bridge_query_fraction)
        ->default_val(synth.bridge_query_fraction);
    cmd_synth->add_option("--seed", synth.seed)->default_val(synth.seed);
    cmd_synth->add_option("--doc-tokens-min", synth.doc_tokens_min)
        ->default_val(synth.doc_tokens_min);
    cmd_synth->add_option("--doc-tokens-max", synth.doc_tokens_max)
        ->default_val(synth.doc_tokens_max);
    cmd_synth->add_option("--query-tokens-min", synth.query_tokens_min)
        ->default_val(synth.query_tokens_min);
    cmd_synth->add_option("--query-tokens-max", synth.query_tokens_max)
        ->default_val(synth.query_tokens_max);
    cmd_synth->add_option("--shared-token-rate", synth.shared_token_rate)
        ->default_val(synth.shared_token_rate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        cfg.self_exclusion = !allow_self_pairs;
        apply_env_seed(cfg);

        if (cmd_index->parsed()) {
            cfg.validate();
            const Engine engine = build_engine(cfg);
            save_index(engine.index, index_out);
            echo_config(cfg, "index", index_out + ".config.json");
            std::cout << "wrote " << index_out << "\n";
        } else if (cmd_extract->parsed()) {
            cfg.validate();
            ensure_dir(cfg.output_dir);
            const Engine engine = build_engine(cfg);
            const auto matrix = run_extract(
                engine, cfg,
                dump_path.empty() ? "" : (fs::path(cfg.output_dir) / dump_path).string());
            write_extract_outputs(matrix, engine, cfg);
            echo_config(cfg, "extract", (fs::path(cfg.output_dir) / "config.json").string());
            std::cout << "wrote " << (fs::path(cfg.output_dir) / "matrix.csv").string() << "\n";
        } else if (cmd_baseline->parsed()) {
            ensure_dir(cfg.output_dir);
            const auto corpus = load_corpus(cfg.corpus_path);
            const auto model = build_tfidf(corpus, TokenizerConfig{cfg.max_doc_tokens}, log_tf);
            if (!model.zero_vector_docs.empty())
                std::cout << "warning: " << model.zero_vector_docs.size()
                          << " documents have empty tf-idf vectors\n";
            const auto edges = topk_similarity_graph(model, baseline_m);
            const auto out = (fs::path(cfg.output_dir) / "baseline_edges.csv").string();
            write_edge_list(edges, out);
            cfg.top_m = baseline_m;
            echo_config(cfg, "baseline", (fs::path(cfg.output_dir) / "config.json").string());
            std::cout << "wrote " << out << " (" << edges.size() << " edges)\n";
        } else if (cmd_export->parsed() || cmd_stats->parsed()) {
            if (matrix_path.empty() == edges_path.empty())
                throw data_error("pass exactly one of --matrix or --edges");
            cfg.validate();
            ensure_dir(cfg.output_dir);
            const auto corpus = load_corpus(cfg.corpus_path);
            const auto graph = graph_from_inputs(cfg, matrix_path, meta_path, edges_path, corpus);
            const std::string command = cmd_export->parsed() ? "export" : "stats";
            if (cmd_export->parsed()) {
                const std::string out =
                    (fs::path(cfg.output_dir) /
                     (cfg.format == "gexf" ? "graph.gexf" : "graph_edges.csv"))
                        .string();
                if (cfg.format == "gexf")
                    write_gexf(graph, out);
                else
                    write_csv(graph, out);
                std::cout << "wrote " << out << " (" << graph.edges.size() << " edges)\n";
            } else {
                const auto stats = network_stats(graph);
                write_stats_json(stats, (fs::path(cfg.output_dir) / "stats.json").string());
                print_stats(stats);
            }
            echo_config(cfg, command, (fs::path(cfg.output_dir) / "config.json").string());
        } else if (cmd_pipeline->parsed()) {
            cfg.validate();
            ensure_dir(cfg.output_dir);
            const Engine engine = build_engine(cfg);
            save_index(engine.index, (fs::path(cfg.output_dir) / "index.bin").string());
            const auto matrix = run_extract(
                engine, cfg,
                dump_path.empty() ? "" : (fs::path(cfg.output_dir) / dump_path).string());
            write_extract_outputs(matrix, engine, cfg);
            const auto graph = to_graph(matrix, engine.corpus, cfg.export_config());
            const std::string out =
                (fs::path(cfg.output_dir) /
                 (cfg.format == "gexf" ? "graph.gexf" : "graph_edges.csv"))
                    .string();
            if (cfg.format == "gexf")
                write_gexf(graph, out);
            else
                write_csv(graph, out);
            const auto stats = network_stats(graph);
            write_stats_json(stats, (fs::path(cfg.output_dir) / "stats.json").string());
            echo_config(cfg, "pipeline", (fs::path(cfg.output_dir) / "config.json").string());
            print_stats(stats);
        } else if (cmd_synth->parsed()) {
            ensure_dir(cfg.output_dir);
            const auto result = generate(synth);
            write_corpus_jsonl(result.corpus, (fs::path(cfg.output_dir) / "corpus.jsonl").string());
            write_queries_jsonl(result.queries,
                                (fs::path(cfg.output_dir) / "queries.jsonl").string());
            write_labels_csv(result, (fs::path(cfg.output_dir) / "labels.csv").string());
            nlohmann::ordered_json j;
            j["command"] = "synth";
            j["clusters"] = synth.clusters;
            j["docs_per_cluster"] = synth.docs_per_cluster;
            j["vocab_per_cluster"] = synth.vocab_per_cluster;
            j["shared_vocab"] = synth.shared_vocab;
            j["queries_per_cluster"] = synth.queries_per_cluster;
            j["bridge_query_fraction"] = synth.bridge_query_fraction;
            j["seed"] = synth.seed;
            j["doc_tokens_min"] = synth.doc_tokens_min;
            j["doc_tokens_max"] = synth.doc_tokens_max;
            j["query_tokens_min"] = synth.query_tokens_min;
            j["query_tokens_max"] = synth.query_tokens_max;
            j["shared_token_rate"] = synth.shared_token_rate;
            std::ofstream out((fs::path(cfg.output_dir) / "synth_config.json").string(),
                              std::ios::binary);
            if (!out) throw io_error("cannot write synth config");
            out << j.dump(2) << '\n';
            std::cout << "wrote " << result.corpus.size() << " documents and "
                      << result.queries.size() << " queries to " << cfg.output_dir << "\n";
        }
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const data_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
