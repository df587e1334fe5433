#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "strl/errors.hpp"

namespace strl {

// Immutable undirected graph of PoP nodes. Node indices are assigned by
// sorting names lexicographically at load time; every matrix and state
// tensor in the system uses this order.
class Topology {
 public:
  Topology(std::vector<std::string> names, std::vector<std::pair<int, int>> edges)
      : names_(std::move(names)) {
    const int n = static_cast<int>(names_.size());
    if (n == 0) throw ValidationError("topology has no nodes");
    for (int i = 1; i < n; ++i)
      if (names_[i] == names_[i - 1]) throw ValidationError("duplicate node name: " + names_[i]);
    adjacency_.assign(static_cast<std::size_t>(n) * n, 0);
    for (auto [a, b] : edges) {
      if (a < 0 || a >= n || b < 0 || b >= n) throw ValidationError("edge index out of range");
      if (a == b) throw ValidationError("self-loop on node " + names_[a]);
      if (a > b) std::swap(a, b);
      if (adjacency_[static_cast<std::size_t>(a) * n + b] != 0)
        throw ValidationError("duplicate edge " + names_[a] + " -- " + names_[b]);
      adjacency_[static_cast<std::size_t>(a) * n + b] = 1;
      adjacency_[static_cast<std::size_t>(b) * n + a] = 1;
      edges_.emplace_back(a, b);
    }
    std::sort(edges_.begin(), edges_.end());
  }

  int node_count() const { return static_cast<int>(names_.size()); }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(int i) const { return names_.at(static_cast<std::size_t>(i)); }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<std::uint8_t>& adjacency() const { return adjacency_; }

  bool has_edge(int a, int b) const {
    const int n = node_count();
    if (a < 0 || a >= n || b < 0 || b >= n) return false;
    return adjacency_[static_cast<std::size_t>(a) * n + b] != 0;
  }

  int index_of(const std::string& name) const {
    const auto it = std::lower_bound(names_.begin(), names_.end(), name);
    if (it == names_.end() || *it != name) throw ArgumentError("unknown node name: " + name);
    return static_cast<int>(it - names_.begin());
  }

  // Ascending neighbor indices of `node`.
  std::vector<int> neighbors(int node) const {
    const int n = node_count();
    if (node < 0 || node >= n)
      throw ArgumentError("node index " + std::to_string(node) + " out of range [0, " +
                          std::to_string(n) + ")");
    std::vector<int> out;
    for (int j = 0; j < n; ++j)
      if (adjacency_[static_cast<std::size_t>(node) * n + j] != 0) out.push_back(j);
    return out;
  }

  int degree(int node) const { return static_cast<int>(neighbors(node).size()); }

  int max_degree() const {
    int best = 0;
    for (int i = 0; i < node_count(); ++i) best = std::max(best, degree(i));
    return best;
  }

  // Component label per node (labels are the smallest node index in the component).
  std::vector<int> components() const {
    const int n = node_count();
    std::vector<int> comp(static_cast<std::size_t>(n), -1);
    for (int s = 0; s < n; ++s) {
      if (comp[static_cast<std::size_t>(s)] != -1) continue;
      std::vector<int> stack{s};
      comp[static_cast<std::size_t>(s)] = s;
      while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v : neighbors(u)) {
          if (comp[static_cast<std::size_t>(v)] == -1) {
            comp[static_cast<std::size_t>(v)] = s;
            stack.push_back(v);
          }
        }
      }
    }
    return comp;
  }

  bool connected(int a, int b) const {
    const auto comp = components();
    return comp.at(static_cast<std::size_t>(a)) == comp.at(static_cast<std::size_t>(b));
  }

  bool adjacency_equal(const Topology& other) const {
    return names_ == other.names_ && adjacency_ == other.adjacency_;
  }

  // Canonical edge-list text: one "nameA nameB" line per edge, sorted.
  std::string to_edge_list() const {
    std::vector<std::string> lines;
    lines.reserve(edges_.size());
    for (auto [a, b] : edges_) lines.push_back(names_[a] + " " + names_[b]);
    std::sort(lines.begin(), lines.end());
    std::string out;
    for (const auto& l : lines) {
      out += l;
      out += '\n';
    }
    return out;
  }

 private:
  std::vector<std::string> names_;            // sorted
  std::vector<std::pair<int, int>> edges_;    // normalized (a < b), sorted
  std::vector<std::uint8_t> adjacency_;       // N x N row-major
};

// Named edge changes. Added edges must be absent, removed edges present,
// and a removal may not disconnect any pair that was connected before.
struct TopologyMutation {
  std::vector<std::pair<std::string, std::string>> added_edges;
  std::vector<std::pair<std::string, std::string>> removed_edges;

  bool empty() const { return added_edges.empty() && removed_edges.empty(); }
};

namespace detail {

inline void validate_node_name(const std::string& name, int line_no) {
  if (name.empty()) throw ValidationError("empty node name at line " + std::to_string(line_no));
  for (char c : name)
    if (std::isspace(static_cast<unsigned char>(c)) || c == '#')
      throw ValidationError("invalid character in node name '" + name + "'");
}

inline Topology build_from_named_edges(
    const std::vector<std::pair<std::string, std::string>>& named_edges) {
  std::set<std::string> name_set;
  for (const auto& [a, b] : named_edges) {
    name_set.insert(a);
    name_set.insert(b);
  }
  std::vector<std::string> names(name_set.begin(), name_set.end());
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < names.size(); ++i) index[names[i]] = static_cast<int>(i);
  std::vector<std::pair<int, int>> edges;
  edges.reserve(named_edges.size());
  for (const auto& [a, b] : named_edges) edges.emplace_back(index[a], index[b]);
  return Topology(std::move(names), std::move(edges));
}

// Minimal GraphML reader: node ids/labels and edge endpoints only.
inline Topology parse_graphml(const std::string& text) {
  auto attr = [](const std::string& tag, const std::string& key) -> std::string {
    const std::string needle = key + "=\"";
    const auto pos = tag.find(needle);
    if (pos == std::string::npos) return {};
    const auto end = tag.find('"', pos + needle.size());
    if (end == std::string::npos) return {};
    return tag.substr(pos + needle.size(), end - pos - needle.size());
  };

  // Key declarations: map key id -> attr.name, to locate a label/name key.
  std::map<std::string, std::string> key_names;
  std::size_t at = 0;
  while (true) {
    const auto open = text.find('<', at);
    if (open == std::string::npos) break;
    const auto close = text.find('>', open);
    if (close == std::string::npos) throw ParseError("graphml: unterminated tag at offset " +
                                                     std::to_string(open));
    const std::string tag = text.substr(open + 1, close - open - 1);
    at = close + 1;
    if (tag.rfind("key", 0) == 0) key_names[attr(tag, "id")] = attr(tag, "attr.name");
  }

  std::map<std::string, std::string> node_names;  // id -> display name
  std::vector<std::pair<std::string, std::string>> edge_ids;
  at = 0;
  std::string current_node;
  int line_guess = 1;
  while (true) {
    const auto open = text.find('<', at);
    if (open == std::string::npos) break;
    line_guess += static_cast<int>(std::count(text.begin() + static_cast<std::ptrdiff_t>(at),
                                              text.begin() + static_cast<std::ptrdiff_t>(open), '\n'));
    const auto close = text.find('>', open);
    if (close == std::string::npos) throw ParseError("graphml: unterminated tag");
    const std::string tag = text.substr(open + 1, close - open - 1);
    at = close + 1;
    if (tag.rfind("node", 0) == 0) {
      current_node = attr(tag, "id");
      if (current_node.empty())
        throw ParseError("graphml: node without id near line " + std::to_string(line_guess));
      node_names.emplace(current_node, current_node);
      if (tag.back() == '/') current_node.clear();
    } else if (tag.rfind("/node", 0) == 0) {
      current_node.clear();
    } else if (tag.rfind("edge", 0) == 0) {
      const std::string src = attr(tag, "source");
      const std::string dst = attr(tag, "target");
      if (src.empty() || dst.empty())
        throw ParseError("graphml: edge missing source/target near line " + std::to_string(line_guess));
      edge_ids.emplace_back(src, dst);
    } else if (!current_node.empty() && tag.rfind("data", 0) == 0 && tag.back() != '/') {
      const std::string key = attr(tag, "key");
      const auto it = key_names.find(key);
      const bool is_label = it != key_names.end() && (it->second == "label" || it->second == "name");
      const auto end = text.find('<', at);
      if (end == std::string::npos) throw ParseError("graphml: unterminated data element");
      if (is_label) {
        std::string value = text.substr(at, end - at);
        // Edge-list serialization is whitespace-delimited, so flatten spaces.
        std::replace(value.begin(), value.end(), ' ', '_');
        if (!value.empty()) node_names[current_node] = value;
      }
    }
  }
  if (node_names.empty()) throw ParseError("graphml: no nodes found");

  std::vector<std::pair<std::string, std::string>> named_edges;
  named_edges.reserve(edge_ids.size());
  for (const auto& [s, t] : edge_ids) {
    const auto si = node_names.find(s);
    const auto ti = node_names.find(t);
    if (si == node_names.end() || ti == node_names.end())
      throw ParseError("graphml: edge references undeclared node '" +
                       (si == node_names.end() ? s : t) + "'");
    named_edges.emplace_back(si->second, ti->second);
  }
  return build_from_named_edges(named_edges);
}

inline Topology parse_edge_list(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> named_edges;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string a, b, extra;
    if (!(ls >> a)) continue;  // blank/comment line
    if (!(ls >> b))
      throw ParseError("edge list line " + std::to_string(line_no) + ": expected two node names");
    if (ls >> extra)
      throw ParseError("edge list line " + std::to_string(line_no) + ": trailing token '" + extra + "'");
    validate_node_name(a, line_no);
    validate_node_name(b, line_no);
    named_edges.emplace_back(a, b);
  }
  if (named_edges.empty()) throw ParseError("edge list contains no edges");
  return build_from_named_edges(named_edges);
}

}  // namespace detail

// Parses GraphML (sniffed by a leading '<') or the native edge-list format.
inline Topology load_topology_from_string(const std::string& text) {
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (c == '<') return detail::parse_graphml(text);
    break;
  }
  return detail::parse_edge_list(text);
}

inline Topology load_topology(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open topology file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_topology_from_string(buf.str());
}

// Returns a new topology; the input is untouched. Adds must not duplicate,
// removes must exist, and previously connected node pairs must stay connected.
inline Topology apply_mutation(const Topology& topo, const TopologyMutation& mutation) {
  std::vector<std::pair<int, int>> edges = topo.edges();
  auto norm = [&](const std::pair<std::string, std::string>& e) {
    int a = topo.index_of(e.first);
    int b = topo.index_of(e.second);
    if (a == b) throw ValidationError("mutation self-loop on " + e.first);
    if (a > b) std::swap(a, b);
    return std::make_pair(a, b);
  };
  for (const auto& e : mutation.removed_edges) {
    const auto key = norm(e);
    const auto it = std::find(edges.begin(), edges.end(), key);
    if (it == edges.end())
      throw ValidationError("mutation removes missing edge " + e.first + " -- " + e.second);
    edges.erase(it);
  }
  for (const auto& e : mutation.added_edges) {
    const auto key = norm(e);
    if (std::find(edges.begin(), edges.end(), key) != edges.end())
      throw ValidationError("mutation adds existing edge " + e.first + " -- " + e.second);
    edges.push_back(key);
  }
  Topology result(topo.names(), std::move(edges));
  const auto before = topo.components();
  const auto after = result.components();
  for (int i = 0; i < topo.node_count(); ++i)
    for (int j = i + 1; j < topo.node_count(); ++j)
      if (before[static_cast<std::size_t>(i)] == before[static_cast<std::size_t>(j)] &&
          after[static_cast<std::size_t>(i)] != after[static_cast<std::size_t>(j)])
        throw ValidationError("mutation disconnects " + topo.name(i) + " from " + topo.name(j));
  return result;
}

}  // namespace strl
