#pragma once

#include <string>

#include <json.hpp>

#include "fractalwalk/augtree.hpp"
#include "fractalwalk/manifest.hpp"

namespace fractalwalk {

enum class GraphFormat { dot, json_adjacency, csv_edges };

inline GraphFormat graph_format_of(const std::string& s) {
  if (s == "dot") return GraphFormat::dot;
  if (s == "json") return GraphFormat::json_adjacency;
  if (s == "csv") return GraphFormat::csv_edges;
  throw ConfigError("unknown graph format: " + s);
}

inline std::string word_str(const AugmentedTree& t, int v) {
  return Word{t.word[v]}.str();
}

/// Deterministic graph dump; vertices in id order (level-major, lex within
/// level), every file prefixed with the build manifest.
inline std::string export_graph(const AugmentedTree& t, GraphFormat format,
                                const Manifest& manifest) {
  std::string out;
  switch (format) {
    case GraphFormat::dot: {
      out += manifest.comment_block("//");
      out += "graph augtree {\n";
      for (int v = 0; v < t.vertex_count(); ++v)
        out += "  \"" + word_str(t, v) + "\" [level=" +
               std::to_string(t.level[v]) + "];\n";
      for (int v = 1; v < t.vertex_count(); ++v)
        out += "  \"" + word_str(t, t.parent[v]) + "\" -- \"" + word_str(t, v) +
               "\" [kind=v];\n";
      for (int v = 0; v < t.vertex_count(); ++v)
        for (int u : t.horizontal[v])
          if (v < u)
            out += "  \"" + word_str(t, v) + "\" -- \"" + word_str(t, u) +
                   "\" [kind=h];\n";
      out += "}\n";
      return out;
    }
    case GraphFormat::json_adjacency: {
      nlohmann::ordered_json j;
      for (const auto& [k, v] : manifest.entries) j["manifest"][k] = v;
      j["manifest"]["config_hash"] = manifest.hash_hex();
      j["gamma"] = t.gamma;
      j["max_level"] = t.max_level;
      auto& adj = j["adjacency"];
      for (int v = 0; v < t.vertex_count(); ++v) {
        nlohmann::ordered_json entry;
        entry["level"] = t.level[v];
        if (t.parent[v] < 0)
          entry["parent"] = nullptr;
        else
          entry["parent"] = word_str(t, t.parent[v]);
        auto& ch = entry["children"] = nlohmann::ordered_json::array();
        for (int c : t.children[v]) ch.push_back(word_str(t, c));
        auto& ho = entry["horizontal"] = nlohmann::ordered_json::array();
        for (int u : t.horizontal[v]) ho.push_back(word_str(t, u));
        adj[word_str(t, v)] = std::move(entry);
      }
      return j.dump(1) + "\n";
    }
    case GraphFormat::csv_edges: {
      out += manifest.comment_block("#");
      out += "level,kind,x,y\n";
      for (int n = 1; n <= t.max_level; ++n) {
        for (int v = t.level_first(n); v < t.count_up_to(n); ++v)
          out += std::to_string(n) + ",v," + word_str(t, t.parent[v]) + "," +
                 word_str(t, v) + "\n";
        for (int v = t.level_first(n); v < t.count_up_to(n); ++v)
          for (int u : t.horizontal[v])
            if (v < u)
              out += std::to_string(n) + ",h," + word_str(t, v) + "," +
                     word_str(t, u) + "\n";
      }
      return out;
    }
  }
  throw ConfigError("unknown graph format");
}

}  // namespace fractalwalk
