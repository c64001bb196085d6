#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "edrmq/corpus.hpp"
#include "edrmq/errors.hpp"
#include "edrmq/marginalizer.hpp"
#include "edrmq/tfidf.hpp"

// Thresholded weighted graphs from a relation matrix or a baseline edge
// list, basic network statistics, and Gephi-compatible exports (GEXF 1.2,
// edge CSV). All outputs are sorted so equal graphs produce identical bytes.

namespace edrmq {

struct GraphNode {
    std::int32_t id = 0;
    std::string external_id;
    std::string title;
    std::string category;
};

struct GraphEdge {
    std::int32_t source = 0;
    std::int32_t target = 0;  // source < target after symmetrization
    double weight = 0.0;      // > 0
};

struct RelationGraph {
    std::vector<GraphNode> nodes;  // all corpus documents, by doc_id
    std::vector<GraphEdge> edges;  // sorted by (source, target), no duplicates
    bool directed = false;
};

enum class Symmetrize { none, sum, max };

struct ExportConfig {
    Symmetrize symmetrize = Symmetrize::sum;
    double threshold = 0.0;                  // drop edges with weight < threshold
    std::optional<std::size_t> top_m_per_node;  // keep edges in either endpoint's top m
};

inline const char* to_string(Symmetrize s) {
    switch (s) {
        case Symmetrize::none: return "none";
        case Symmetrize::sum: return "sum";
        case Symmetrize::max: return "max";
    }
    return "sum";
}

inline Symmetrize symmetrize_from_string(const std::string& s) {
    if (s == "none") return Symmetrize::none;
    if (s == "sum") return Symmetrize::sum;
    if (s == "max") return Symmetrize::max;
    throw data_error("unknown symmetrize mode '" + s + "'");
}

namespace detail {

inline std::vector<GraphNode> corpus_nodes(const std::vector<Document>& corpus) {
    std::vector<GraphNode> nodes;
    nodes.reserve(corpus.size());
    for (const auto& d : corpus)
        nodes.push_back({d.doc_id, d.external_id, d.title, d.category});
    return nodes;
}

// Threshold, then optionally keep each node's top_m heaviest incident edges.
// An edge survives the cap if it ranks in the top m of either endpoint.
inline std::vector<GraphEdge> filter_edges(std::map<PairKey, double> weights,
                                           std::size_t node_count,
                                           const ExportConfig& config) {
    std::vector<GraphEdge> edges;
    for (const auto& [key, w] : weights) {
        if (w <= 0.0 || w < config.threshold) continue;
        edges.push_back({key.first, key.second, w});
    }
    if (config.top_m_per_node && !edges.empty()) {
        const std::size_t m = *config.top_m_per_node;
        if (m == 0) throw data_error("top_m_per_node must be >= 1");
        // rank of each edge among its endpoint's incident edges, weight
        // descending with (source, target) ascending on ties
        std::vector<std::vector<std::size_t>> incident(node_count);
        for (std::size_t e = 0; e < edges.size(); ++e) {
            incident[static_cast<std::size_t>(edges[e].source)].push_back(e);
            if (edges[e].target != edges[e].source)
                incident[static_cast<std::size_t>(edges[e].target)].push_back(e);
        }
        std::vector<bool> keep(edges.size(), false);
        for (auto& list : incident) {
            std::sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
                if (edges[a].weight != edges[b].weight) return edges[a].weight > edges[b].weight;
                if (edges[a].source != edges[b].source) return edges[a].source < edges[b].source;
                return edges[a].target < edges[b].target;
            });
            for (std::size_t r = 0; r < std::min(m, list.size()); ++r) keep[list[r]] = true;
        }
        std::vector<GraphEdge> kept;
        kept.reserve(edges.size());
        for (std::size_t e = 0; e < edges.size(); ++e)
            if (keep[e]) kept.push_back(edges[e]);
        edges = std::move(kept);
    }
    return edges;  // map iteration order keeps (source, target) sorted
}

} // namespace detail

/// Graph view of a relation matrix. sum: w = R[i,j] + R[j,i]; max: the larger
/// of the two; none: keep the directed pairs. Self-loops are always dropped.
inline RelationGraph to_graph(const RelationMatrix& matrix,
                              const std::vector<Document>& corpus,
                              const ExportConfig& config = {}) {
    if (corpus.size() != matrix.corpus_size)
        throw data_error("corpus size does not match matrix");
    RelationGraph graph;
    graph.nodes = detail::corpus_nodes(corpus);
    graph.directed = config.symmetrize == Symmetrize::none;

    std::map<PairKey, double> weights;
    for (const auto& [key, mass] : matrix.entries) {
        const auto [i, j] = key;
        if (i == j) continue;
        if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= corpus.size() ||
            static_cast<std::size_t>(j) >= corpus.size())
            throw data_error("matrix entry out of range: (" + std::to_string(i) + "," +
                             std::to_string(j) + ")");
        switch (config.symmetrize) {
            case Symmetrize::none:
                weights[{i, j}] += mass;
                break;
            case Symmetrize::sum:
                weights[{std::min(i, j), std::max(i, j)}] += mass;
                break;
            case Symmetrize::max: {
                auto& w = weights[{std::min(i, j), std::max(i, j)}];
                w = std::max(w, mass);
                break;
            }
        }
    }
    graph.edges = detail::filter_edges(std::move(weights), corpus.size(), config);
    return graph;
}

/// Graph view of a directed weighted edge list (the TF-IDF baseline).
inline RelationGraph to_graph(const std::vector<WeightedEdge>& edge_list,
                              const std::vector<Document>& corpus,
                              const ExportConfig& config = {}) {
    RelationGraph graph;
    graph.nodes = detail::corpus_nodes(corpus);
    graph.directed = config.symmetrize == Symmetrize::none;

    std::map<PairKey, double> weights;
    for (const auto& e : edge_list) {
        if (e.source == e.target) continue;
        if (e.source < 0 || e.target < 0 || static_cast<std::size_t>(e.source) >= corpus.size() ||
            static_cast<std::size_t>(e.target) >= corpus.size())
            throw data_error("edge endpoint out of range");
        switch (config.symmetrize) {
            case Symmetrize::none:
                weights[{e.source, e.target}] += e.weight;
                break;
            case Symmetrize::sum:
                weights[{std::min(e.source, e.target), std::max(e.source, e.target)}] += e.weight;
                break;
            case Symmetrize::max: {
                auto& w = weights[{std::min(e.source, e.target), std::max(e.source, e.target)}];
                w = std::max(w, e.weight);
                break;
            }
        }
    }
    graph.edges = detail::filter_edges(std::move(weights), corpus.size(), config);
    return graph;
}

// ---------------------------------------------------------------------------
// Network statistics

struct NetworkStats {
    std::size_t node_count = 0;
    std::size_t edge_count = 0;
    double density = 0.0;
    std::size_t component_count = 0;  // weakly connected, over the undirected view
    std::size_t isolated_count = 0;
    std::map<std::size_t, std::size_t> degree_histogram;  // degree -> node count
};

inline NetworkStats network_stats(const RelationGraph& graph) {
    NetworkStats stats;
    stats.node_count = graph.nodes.size();
    stats.edge_count = graph.edges.size();
    const double n = static_cast<double>(graph.nodes.size());
    if (graph.nodes.size() > 1) {
        const double pairs = n * (n - 1.0);
        stats.density = graph.directed ? static_cast<double>(graph.edges.size()) / pairs
                                       : 2.0 * static_cast<double>(graph.edges.size()) / pairs;
    }

    std::vector<std::size_t> degree(graph.nodes.size(), 0);
    std::vector<std::size_t> parent(graph.nodes.size());
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (const auto& e : graph.edges) {
        const auto s = static_cast<std::size_t>(e.source);
        const auto t = static_cast<std::size_t>(e.target);
        ++degree[s];
        ++degree[t];
        parent[find(s)] = find(t);
    }
    for (std::size_t v = 0; v < graph.nodes.size(); ++v) {
        if (find(v) == v) ++stats.component_count;
        if (degree[v] == 0) ++stats.isolated_count;
        ++stats.degree_histogram[degree[v]];
    }
    return stats;
}

inline void write_stats_json(const NetworkStats& stats, const std::string& path) {
    nlohmann::ordered_json j;
    j["node_count"] = stats.node_count;
    j["edge_count"] = stats.edge_count;
    j["density"] = stats.density;
    j["component_count"] = stats.component_count;
    j["isolated_count"] = stats.isolated_count;
    nlohmann::ordered_json hist;
    for (const auto& [deg, cnt] : stats.degree_histogram) hist[std::to_string(deg)] = cnt;
    j["degree_histogram"] = hist;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open stats file for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw io_error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// File exports. Nodes are written by ascending id and edges by (source,
// target), so identical graphs serialize to identical bytes.

namespace detail {

inline std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

} // namespace detail

/// GEXF 1.2 with node attributes external_id/title/category and weighted
/// edges. The attvalues block is emitted for every node.
inline void write_gexf(const RelationGraph& graph, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open gexf file for writing: " + path);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<gexf xmlns=\"http://www.gexf.net/1.2draft\" version=\"1.2\">\n";
    out << "  <graph defaultedgetype=\"" << (graph.directed ? "directed" : "undirected")
        << "\">\n";
    out << "    <attributes class=\"node\">\n";
    out << "      <attribute id=\"0\" title=\"external_id\" type=\"string\"/>\n";
    out << "      <attribute id=\"1\" title=\"title\" type=\"string\"/>\n";
    out << "      <attribute id=\"2\" title=\"category\" type=\"string\"/>\n";
    out << "    </attributes>\n";
    out << "    <nodes>\n";
    for (const auto& node : graph.nodes) {
        const std::string label = node.title.empty() ? node.external_id : node.title;
        out << "      <node id=\"" << node.id << "\" label=\"" << detail::xml_escape(label)
            << "\">\n";
        out << "        <attvalues>\n";
        out << "          <attvalue for=\"0\" value=\"" << detail::xml_escape(node.external_id)
            << "\"/>\n";
        out << "          <attvalue for=\"1\" value=\"" << detail::xml_escape(node.title)
            << "\"/>\n";
        out << "          <attvalue for=\"2\" value=\"" << detail::xml_escape(node.category)
            << "\"/>\n";
        out << "        </attvalues>\n";
        out << "      </node>\n";
    }
    out << "    </nodes>\n";
    out << "    <edges>\n";
    std::size_t edge_id = 0;
    for (const auto& e : graph.edges) {
        out << "      <edge id=\"" << edge_id++ << "\" source=\"" << e.source << "\" target=\""
            << e.target << "\" weight=\"" << detail::format_double(e.weight) << "\"/>\n";
    }
    out << "    </edges>\n";
    out << "  </graph>\n";
    out << "</gexf>\n";
    if (!out) throw io_error("write failed: " + path);
}

inline void write_csv(const RelationGraph& graph, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open csv file for writing: " + path);
    out << "source,target,weight\n";
    for (const auto& e : graph.edges)
        out << e.source << ',' << e.target << ',' << detail::format_double(e.weight) << '\n';
    if (!out) throw io_error("write failed: " + path);
}

/// Read back an edge CSV written by write_csv (or cmd_baseline).
inline std::vector<WeightedEdge> read_edge_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open csv file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "source,target,weight")
        throw data_error("bad edge csv header in " + path);
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
            e.weight = detail::parse_double(std::string_view(line).substr(c2 + 1));
            edges.push_back(e);
        } catch (const std::exception&) {
            throw data_error("bad edge row at line " + std::to_string(line_no) + " in " + path);
        }
    }
    return edges;
}

} // namespace edrmq
