#include "msbm/instance.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace msbm {
namespace {

// Strips '#'-comments and surrounding whitespace; empty result = skip line.
std::string clean_line(const std::string& raw) {
  std::string s = raw;
  if (auto pos = s.find('#'); pos != std::string::npos) s.erase(pos);
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && is_space(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

struct LineReader {
  std::istream& in;
  int line_no = 0;

  // Next non-empty, non-comment line; false at EOF.
  bool next(std::string& out) {
    std::string raw;
    while (std::getline(in, raw)) {
      ++line_no;
      out = clean_line(raw);
      if (!out.empty()) return true;
    }
    return false;
  }
};

long long parse_int(const std::string& tok, int line, const char* what) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError(line, std::string("expected integer for ") + what + ", got '" + tok + "'");
  }
  if (pos != tok.size())
    throw ParseError(line, std::string("trailing characters in ") + what + " '" + tok + "'");
  return v;
}

std::vector<std::string> tokens(const std::string& s) {
  std::istringstream iss(s);
  std::vector<std::string> out;
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

}  // namespace

Instance::Instance(int num_vertices, std::vector<int> capacities, std::vector<Edge> edges)
    : num_vertices_(num_vertices),
      capacities_(std::move(capacities)),
      edges_(std::move(edges)) {
  if (num_vertices_ <= 0) throw DomainError("instance needs at least one vertex");
  if (static_cast<int>(capacities_.size()) != num_vertices_)
    throw DomainError("capacity vector length does not match vertex count");
  for (int b : capacities_)
    if (b < 1) throw DomainError("every capacity must be >= 1");
  for (const Edge& e : edges_) {
    if (e.u < 0 || e.u >= num_vertices_ || e.v < 0 || e.v >= num_vertices_)
      throw DomainError("edge endpoint out of range");
    if (e.u == e.v) throw DomainError("self-loops are not allowed");
    if (e.key < 0) throw DomainError("edge keys must be nonnegative");
  }
}

bool Instance::unit_capacities() const {
  return std::all_of(capacities_.begin(), capacities_.end(), [](int b) { return b == 1; });
}

Instance parse_stream(std::istream& in) {
  LineReader reader{in};
  std::string line;

  if (!reader.next(line)) throw ParseError(reader.line_no, "empty document");
  if (tokens(line) != std::vector<std::string>{"msbm", "1"})
    throw ParseError(reader.line_no, "malformed header, expected 'msbm 1'");

  if (!reader.next(line)) throw ParseError(reader.line_no, "missing 'n' line");
  auto n_toks = tokens(line);
  if (n_toks.size() != 2 || n_toks[0] != "n")
    throw ParseError(reader.line_no, "expected 'n <num_vertices>'");
  long long n = parse_int(n_toks[1], reader.line_no, "num_vertices");
  if (n <= 0) throw ParseError(reader.line_no, "num_vertices must be positive");

  if (!reader.next(line)) throw ParseError(reader.line_no, "missing 'b' line");
  auto b_toks = tokens(line);
  std::vector<int> capacities;
  if (b_toks.size() == 3 && b_toks[0] == "b" && b_toks[1] == "uniform") {
    long long k = parse_int(b_toks[2], reader.line_no, "capacity");
    if (k < 1) throw ParseError(reader.line_no, "capacity must be >= 1");
    capacities.assign(static_cast<std::size_t>(n), static_cast<int>(k));
  } else if (b_toks.size() >= 2 && b_toks[0] == "b" && b_toks[1] == "list") {
    if (static_cast<long long>(b_toks.size()) != n + 2)
      throw ParseError(reader.line_no, "'b list' needs exactly n capacities");
    for (std::size_t i = 2; i < b_toks.size(); ++i) {
      long long k = parse_int(b_toks[i], reader.line_no, "capacity");
      if (k < 1) throw ParseError(reader.line_no, "capacity must be >= 1");
      capacities.push_back(static_cast<int>(k));
    }
  } else {
    throw ParseError(reader.line_no, "expected 'b uniform <k>' or 'b list <b_0> ...'");
  }

  if (!reader.next(line)) throw ParseError(reader.line_no, "missing 'm' line");
  auto m_toks = tokens(line);
  if (m_toks.size() != 2 || m_toks[0] != "m")
    throw ParseError(reader.line_no, "expected 'm <num_edges>'");
  long long m = parse_int(m_toks[1], reader.line_no, "num_edges");
  if (m < 0) throw ParseError(reader.line_no, "num_edges must be nonnegative");

  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(m));
  for (long long i = 0; i < m; ++i) {
    if (!reader.next(line))
      throw ParseError(reader.line_no, "unexpected end of document, expected edge line");
    auto e_toks = tokens(line);
    if (e_toks.size() != 4 || e_toks[0] != "e")
      throw ParseError(reader.line_no, "expected 'e <u> <v> <key>'");
    long long u = parse_int(e_toks[1], reader.line_no, "endpoint");
    long long v = parse_int(e_toks[2], reader.line_no, "endpoint");
    long long key = parse_int(e_toks[3], reader.line_no, "key");
    if (u < 0 || u >= n || v < 0 || v >= n)
      throw ParseError(reader.line_no, "vertex id out of range");
    if (u == v)
      throw ParseError(reader.line_no, "self-loop " + std::to_string(u) + " " + std::to_string(v));
    if (key < 0) throw ParseError(reader.line_no, "key must be nonnegative");
    edges.push_back(Edge{static_cast<VertexId>(u), static_cast<VertexId>(v), key});
  }
  if (reader.next(line))
    throw ParseError(reader.line_no, "unexpected content after edge section");

  return Instance(static_cast<int>(n), std::move(capacities), std::move(edges));
}

Instance parse_stream(const std::string& text) {
  std::istringstream iss(text);
  return parse_stream(iss);
}

Instance parse_stream_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open instance file '" + path + "'");
  return parse_stream(in);
}

std::string serialize_stream(const Instance& inst) {
  std::ostringstream out;
  out << "msbm 1\n";
  out << "n " << inst.num_vertices() << "\n";
  const auto& caps = inst.capacities();
  bool uniform = std::all_of(caps.begin(), caps.end(), [&](int b) { return b == caps[0]; });
  if (uniform) {
    out << "b uniform " << caps[0] << "\n";
  } else {
    out << "b list";
    for (int b : caps) out << " " << b;
    out << "\n";
  }
  out << "m " << inst.num_edges() << "\n";
  for (const Edge& e : inst.edges())
    out << "e " << e.u << " " << e.v << " " << e.key << "\n";
  return out.str();
}

BMatching::BMatching(const Instance& inst)
    : inst_(&inst),
      member_(static_cast<std::size_t>(inst.num_edges()), 0),
      degree_(static_cast<std::size_t>(inst.num_vertices()), 0) {}

void BMatching::check_idx(int edge_idx) const {
  if (edge_idx < 0 || edge_idx >= inst_->num_edges())
    throw DomainError("unknown edge index " + std::to_string(edge_idx));
}

bool BMatching::can_add(int edge_idx) const {
  check_idx(edge_idx);
  if (member_[static_cast<std::size_t>(edge_idx)]) return false;
  const Edge& e = inst_->edge(edge_idx);
  return degree(e.u) < inst_->capacity(e.u) && degree(e.v) < inst_->capacity(e.v);
}

void BMatching::add(int edge_idx) {
  if (!can_add(edge_idx))
    throw DomainError("adding edge " + std::to_string(edge_idx) + " violates a capacity");
  const Edge& e = inst_->edge(edge_idx);
  edges_.push_back(edge_idx);
  member_[static_cast<std::size_t>(edge_idx)] = 1;
  ++degree_[static_cast<std::size_t>(e.u)];
  ++degree_[static_cast<std::size_t>(e.v)];
}

bool BMatching::contains(int edge_idx) const {
  check_idx(edge_idx);
  return member_[static_cast<std::size_t>(edge_idx)] != 0;
}

std::vector<int> neighbors_in(const Instance& inst, int edge_idx, const BMatching& m) {
  const Edge& e = inst.edge(edge_idx);
  std::vector<int> out;
  for (int idx : m.edges()) {
    if (idx == edge_idx) continue;
    if (inst.edge(idx).adjacent(e)) out.push_back(idx);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool is_feasible(std::span<const int> edge_idxs, const Instance& inst) {
  std::vector<int> degree(static_cast<std::size_t>(inst.num_vertices()), 0);
  for (int idx : edge_idxs) {
    if (idx < 0 || idx >= inst.num_edges())
      throw DomainError("unknown edge index " + std::to_string(idx));
    const Edge& e = inst.edge(idx);
    if (++degree[static_cast<std::size_t>(e.u)] > inst.capacity(e.u)) return false;
    if (++degree[static_cast<std::size_t>(e.v)] > inst.capacity(e.v)) return false;
  }
  return true;
}

}  // namespace msbm
