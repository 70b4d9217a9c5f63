#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "msbm/common.hpp"

namespace msbm {

struct Edge {
  VertexId u = 0;
  VertexId v = 0;
  Key key = 0;

  bool touches(VertexId w) const { return u == w || v == w; }
  bool adjacent(const Edge& other) const {
    return touches(other.u) || touches(other.v);
  }
  bool operator==(const Edge&) const = default;
};

// Immutable graph stream: dense 0-based vertex ids, per-vertex capacities,
// edges in arrival order (edge index i has arrival index i+1). Parallel
// edges are allowed and distinguished by arrival index; self loops are not.
class Instance {
 public:
  Instance(int num_vertices, std::vector<int> capacities, std::vector<Edge> edges);

  int num_vertices() const { return num_vertices_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int idx) const { return edges_.at(static_cast<std::size_t>(idx)); }
  int capacity(VertexId v) const { return capacities_.at(static_cast<std::size_t>(v)); }
  const std::vector<int>& capacities() const { return capacities_; }
  bool unit_capacities() const;

 private:
  int num_vertices_;
  std::vector<int> capacities_;
  std::vector<Edge> edges_;
};

// Stream file format (UTF-8 text, '#' starts a comment, blank lines ignored):
//   msbm 1
//   n <num_vertices>
//   b uniform <k>            or  b list <b_0> ... <b_{n-1}>
//   m <num_edges>
//   e <u> <v> <key>          (m lines, arrival order = line order)
Instance parse_stream(std::istream& in);
Instance parse_stream(const std::string& text);
Instance parse_stream_file(const std::string& path);

// Canonical form; parse(serialize(x)) == x, and serialize(parse(doc)) == doc
// for canonical-form documents.
std::string serialize_stream(const Instance& inst);

// Mutable b-matching over a fixed instance: edge set plus degree counters.
class BMatching {
 public:
  explicit BMatching(const Instance& inst);

  bool can_add(int edge_idx) const;
  void add(int edge_idx);  // throws DomainError if it would violate a capacity
  bool contains(int edge_idx) const;
  int degree(VertexId v) const { return degree_.at(static_cast<std::size_t>(v)); }
  int size() const { return static_cast<int>(edges_.size()); }
  const std::vector<int>& edges() const { return edges_; }  // insertion order
  const Instance& instance() const { return *inst_; }

 private:
  void check_idx(int edge_idx) const;

  const Instance* inst_;
  std::vector<int> edges_;
  std::vector<std::uint8_t> member_;
  std::vector<int> degree_;
};

// M ∩ N(e), excluding edge_idx itself; result sorted by arrival index.
std::vector<int> neighbors_in(const Instance& inst, int edge_idx, const BMatching& m);

// True iff every per-vertex degree of the given edge set stays within b.
// Throws DomainError on an unknown edge index.
bool is_feasible(std::span<const int> edge_idxs, const Instance& inst);

}  // namespace msbm
