#include "msbm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace msbm {
namespace {

std::vector<Key> dedup(std::span<const Key> keys) {
  std::vector<Key> out(keys.begin(), keys.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool is_integral(double x) { return x == std::floor(x); }

}  // namespace

void SubmodularOracle::check_key(Key k) const {
  if (!knows(k)) throw DomainError("unknown oracle key " + std::to_string(k));
}

double SubmodularOracle::eval(std::span<const Key> keys) const {
  std::vector<Key> unique = dedup(keys);
  for (Key k : unique) check_key(k);
  count_query();
  double v = eval_impl(unique);
  if (v < -kValueTol)
    throw DomainError("oracle returned negative value " + format_value(v));
  return v;
}

void SubmodularOracle::finalize_construction() {
  keys_ = collect_keys();
  std::sort(keys_.begin(), keys_.end());
  for (Key k : keys_) {
    if (k < 0) throw DomainError("oracle keys must be nonnegative");
    if (!key_set_.insert(k).second)
      throw DomainError("duplicate oracle key " + std::to_string(k));
  }
  f_empty_ = eval({});
  singleton_max_ = 0.0;
  for (Key k : keys_) singleton_max_ = std::max(singleton_max_, eval({k}));
  reset_value_queries();
}

StreamState SubmodularOracle::make_state() const {
  StreamState s;
  s.origin_ = this;
  s.value_ = f_empty_;
  init_state(s);
  return s;
}

double SubmodularOracle::stream_marginal(const StreamState& s, Key e) const {
  if (s.origin_ != this) throw DomainError("stream state belongs to another oracle");
  check_key(e);
  if (s.contains(e)) return 0.0;
  count_query();
  return marginal_impl(s, e);
}

double SubmodularOracle::marginal_impl(const StreamState& s, Key e) const {
  std::vector<Key> with(s.accepted_);
  with.push_back(e);
  return eval(with) - s.value_;
}

void SubmodularOracle::push_accept(StreamState& s, Key e) const {
  double m = stream_marginal(s, e);
  push_accept(s, e, m);
}

void SubmodularOracle::push_accept(StreamState& s, Key e, double marginal) const {
  if (s.origin_ != this) throw DomainError("stream state belongs to another oracle");
  check_key(e);
  if (s.contains(e)) return;
  s.accepted_.push_back(e);
  s.set_.insert(e);
  s.value_ += marginal;
  push_impl(s, e);
}

// ---------------------------------------------------------------------------
// Linear

LinearOracle::LinearOracle(std::unordered_map<Key, double> weights)
    : SubmodularOracle(/*monotone=*/true), weights_(std::move(weights)) {
  for (const auto& [k, w] : weights_)
    if (w < 0.0) throw DomainError("linear oracle weights must be nonnegative");
  finalize_construction();
}

double LinearOracle::weight(Key k) const {
  check_key(k);
  return weights_.at(k);
}

double LinearOracle::eval_impl(std::span<const Key> unique_keys) const {
  double sum = 0.0;
  for (Key k : unique_keys) sum += weights_.at(k);
  return sum;
}

double LinearOracle::marginal_impl(const StreamState&, Key e) const {
  return weights_.at(e);
}

std::vector<Key> LinearOracle::collect_keys() const {
  std::vector<Key> out;
  out.reserve(weights_.size());
  for (const auto& [k, w] : weights_) out.push_back(k);
  return out;
}

std::optional<double> LinearOracle::min_marginal_bound() const {
  std::optional<double> best;
  for (const auto& [k, w] : weights_)
    if (w > 0.0 && (!best || w < *best)) best = w;
  return best;
}

// ---------------------------------------------------------------------------
// Coverage

CoverageOracle::CoverageOracle(int universe, std::vector<double> element_weights,
                               std::unordered_map<Key, std::vector<int>> sets)
    : CoverageOracle(universe, std::move(element_weights), std::move(sets),
                     /*monotone=*/true) {
  finalize_construction();
}

CoverageOracle::CoverageOracle(int universe, std::vector<double> element_weights,
                               std::unordered_map<Key, std::vector<int>> sets,
                               bool monotone)
    : SubmodularOracle(monotone),
      universe_(universe),
      element_weights_(std::move(element_weights)),
      sets_(std::move(sets)) {
  if (universe_ < 0) throw DomainError("universe size must be nonnegative");
  if (element_weights_.empty())
    element_weights_.assign(static_cast<std::size_t>(universe_), 1.0);
  if (static_cast<int>(element_weights_.size()) != universe_)
    throw DomainError("element weight vector length does not match universe");
  for (double a : element_weights_)
    if (a < 0.0) throw DomainError("element weights must be nonnegative");
  for (const auto& [k, elems] : sets_)
    for (int u : elems)
      if (u < 0 || u >= universe_)
        throw DomainError("coverage set element out of universe");
}

const std::vector<int>& CoverageOracle::set_of(Key k) const {
  check_key(k);
  return sets_.at(k);
}

double CoverageOracle::coverage_value(std::span<const Key> unique_keys) const {
  std::vector<std::uint8_t> covered(static_cast<std::size_t>(universe_), 0);
  double sum = 0.0;
  for (Key k : unique_keys)
    for (int u : sets_.at(k))
      if (!covered[static_cast<std::size_t>(u)]) {
        covered[static_cast<std::size_t>(u)] = 1;
        sum += element_weights_[static_cast<std::size_t>(u)];
      }
  return sum;
}

double CoverageOracle::coverage_marginal(const StreamState& s, Key e) const {
  const auto& cov = std::get<StreamState::CoverSummary>(summary(s)).covered;
  double gain = 0.0;
  for (int u : sets_.at(e))
    if (!cov[static_cast<std::size_t>(u)]) gain += element_weights_[static_cast<std::size_t>(u)];
  return gain;
}

double CoverageOracle::eval_impl(std::span<const Key> unique_keys) const {
  return coverage_value(unique_keys);
}

double CoverageOracle::marginal_impl(const StreamState& s, Key e) const {
  return coverage_marginal(s, e);
}

void CoverageOracle::init_state(StreamState& s) const {
  summary(s) = StreamState::CoverSummary{
      std::vector<std::uint8_t>(static_cast<std::size_t>(universe_), 0)};
}

void CoverageOracle::push_impl(StreamState& s, Key e) const {
  auto& cov = std::get<StreamState::CoverSummary>(summary(s)).covered;
  for (int u : sets_.at(e)) cov[static_cast<std::size_t>(u)] = 1;
}

std::vector<Key> CoverageOracle::collect_keys() const {
  std::vector<Key> out;
  out.reserve(sets_.size());
  for (const auto& [k, elems] : sets_) out.push_back(k);
  return out;
}

std::optional<double> CoverageOracle::min_marginal_bound() const {
  // Any nonzero coverage marginal covers at least one new element.
  std::vector<std::uint8_t> used(static_cast<std::size_t>(universe_), 0);
  for (const auto& [k, elems] : sets_)
    for (int u : elems) used[static_cast<std::size_t>(u)] = 1;
  std::optional<double> best;
  for (int u = 0; u < universe_; ++u) {
    double a = element_weights_[static_cast<std::size_t>(u)];
    if (used[static_cast<std::size_t>(u)] && a > 0.0 && (!best || a < *best)) best = a;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Coverage + linear complement

CovLinOracle::CovLinOracle(int universe, std::vector<double> element_weights,
                           std::unordered_map<Key, std::vector<int>> sets,
                           std::unordered_map<Key, double> costs)
    : CoverageOracle(universe, std::move(element_weights), std::move(sets),
                     /*monotone=*/false),
      costs_(std::move(costs)) {
  for (const auto& [k, elems] : sets_) {
    auto it = costs_.find(k);
    if (it == costs_.end()) {
      costs_.emplace(k, 0.0);
    } else if (it->second < 0.0) {
      throw DomainError("covlin costs must be nonnegative");
    }
  }
  for (const auto& [k, c] : costs_) {
    if (sets_.find(k) == sets_.end())
      throw DomainError("covlin cost for unknown key " + std::to_string(k));
    total_cost_ += c;
    if (!is_integral(c)) integral_ = false;
  }
  for (double a : element_weights_)
    if (!is_integral(a)) integral_ = false;
  finalize_construction();
}

double CovLinOracle::cost(Key k) const {
  check_key(k);
  return costs_.at(k);
}

double CovLinOracle::eval_impl(std::span<const Key> unique_keys) const {
  double c_taken = 0.0;
  for (Key k : unique_keys) c_taken += costs_.at(k);
  return coverage_value(unique_keys) + total_cost_ - c_taken;
}

double CovLinOracle::marginal_impl(const StreamState& s, Key e) const {
  return coverage_marginal(s, e) - costs_.at(e);
}

std::optional<double> CovLinOracle::min_marginal_bound() const {
  // With all-integral weights and costs every f value is an integer, so a
  // nonzero marginal has magnitude at least 1.
  if (integral_) return 1.0;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Tight family

TightOracle::TightOracle(double C, int n, double eps, double delta)
    : SubmodularOracle(/*monotone=*/true), C_(C), eps_(eps), delta_(delta), n_(n) {
  if (!(C > 1.0)) throw DomainError("tight oracle requires C > 1");
  if (n < 1) throw DomainError("tight oracle requires n >= 1");
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("tight oracle requires 0 < eps < 1");
  if (delta < 0.0 || delta >= C - 1.0)
    throw DomainError("tight oracle requires 0 <= delta < C-1");

  d_weight_.assign(static_cast<std::size_t>(n_) + 1, 0.0);
  e_weight_.assign(static_cast<std::size_t>(n_) + 1, 0.0);
  for (int i = 1; i <= n_; ++i) d_weight_[static_cast<std::size_t>(i)] = std::pow(C_ + delta_, i - 1);
  e_weight_[0] = std::pow(C_, n_) - eps_;
  e_weight_[1] = 1.0 + C_ - eps_;
  for (int i = 2; i <= n_; ++i) e_weight_[static_cast<std::size_t>(i)] = std::pow(C_, i) - eps_;
  finalize_construction();
}

int TightOracle::pair_of(Key k) const {
  if (k < n_) return static_cast<int>(k) + 1;  // d_i
  if (k == n_) return -1;                      // e_0
  return static_cast<int>(k) - n_;             // e_i
}

double TightOracle::weight(Key k) const {
  check_key(k);
  int i = pair_of(k);
  if (i < 0) return e_weight_[0];
  return is_d(k) ? d_weight_[static_cast<std::size_t>(i)] : e_weight_[static_cast<std::size_t>(i)];
}

double TightOracle::eval_impl(std::span<const Key> unique_keys) const {
  double value = 0.0;
  std::vector<double> taken(static_cast<std::size_t>(n_) + 1, 0.0);
  for (Key k : unique_keys) {
    int i = pair_of(k);
    if (i < 0)
      value += e_weight_[0];
    else
      taken[static_cast<std::size_t>(i)] +=
          is_d(k) ? d_weight_[static_cast<std::size_t>(i)] : e_weight_[static_cast<std::size_t>(i)];
  }
  for (int i = 1; i <= n_; ++i)
    value += std::min(taken[static_cast<std::size_t>(i)], e_weight_[static_cast<std::size_t>(i)]);
  return value;
}

double TightOracle::marginal_impl(const StreamState& s, Key e) const {
  int i = pair_of(e);
  if (i < 0) return e_weight_[0];
  const auto& taken = std::get<StreamState::TightSummary>(summary(s)).pair_weight;
  double cur = taken[static_cast<std::size_t>(i)];
  double cap = e_weight_[static_cast<std::size_t>(i)];
  double w = is_d(e) ? d_weight_[static_cast<std::size_t>(i)] : cap;
  return std::min(cur + w, cap) - std::min(cur, cap);
}

void TightOracle::init_state(StreamState& s) const {
  summary(s) = StreamState::TightSummary{
      std::vector<double>(static_cast<std::size_t>(n_) + 1, 0.0)};
}

void TightOracle::push_impl(StreamState& s, Key e) const {
  int i = pair_of(e);
  if (i < 0) return;
  auto& taken = std::get<StreamState::TightSummary>(summary(s)).pair_weight;
  taken[static_cast<std::size_t>(i)] +=
      is_d(e) ? d_weight_[static_cast<std::size_t>(i)] : e_weight_[static_cast<std::size_t>(i)];
}

std::vector<Key> TightOracle::collect_keys() const {
  std::vector<Key> out;
  for (Key k = 0; k <= 2 * static_cast<Key>(n_); ++k) out.push_back(k);
  return out;
}

TightFamily make_tight_oracle(double C, int n, double eps, double delta) {
  auto oracle = std::make_unique<TightOracle>(C, n, eps, delta);
  int num_vertices = 2 * n + 2;  // x_i ↦ i, y_i ↦ n+1+i
  std::vector<Edge> edges;
  for (int i = 1; i <= n; ++i)
    edges.push_back(Edge{0, static_cast<VertexId>(i), TightOracle::d_key(i)});
  edges.push_back(Edge{0, static_cast<VertexId>(n + 1), oracle->e_key(0)});
  for (int i = 1; i <= n; ++i)
    edges.push_back(Edge{static_cast<VertexId>(i), static_cast<VertexId>(n + 1 + i),
                         oracle->e_key(i)});
  Instance inst(num_vertices, std::vector<int>(static_cast<std::size_t>(num_vertices), 1),
                std::move(edges));
  return TightFamily{std::move(inst), std::move(oracle)};
}

// ---------------------------------------------------------------------------
// Exhaustive audits

SubmodularityReport verify_submodular(const SubmodularOracle& oracle,
                                      std::span<const Key> ground,
                                      int exhaustive_limit) {
  std::vector<Key> keys = dedup(ground);
  int n = static_cast<int>(keys.size());
  if (n > exhaustive_limit)
    throw TooLargeError("ground set of " + std::to_string(n) +
                        " keys exceeds exhaustive limit " + std::to_string(exhaustive_limit));

  std::size_t total = std::size_t{1} << n;
  std::vector<double> f(total);
  std::vector<Key> subset;
  for (std::size_t mask = 0; mask < total; ++mask) {
    subset.clear();
    for (int i = 0; i < n; ++i)
      if (mask & (std::size_t{1} << i)) subset.push_back(keys[static_cast<std::size_t>(i)]);
    f[mask] = oracle.eval(subset);
  }

  SubmodularityReport report;
  auto subset_keys = [&](std::size_t mask) {
    std::vector<Key> out;
    for (int i = 0; i < n; ++i)
      if (mask & (std::size_t{1} << i)) out.push_back(keys[static_cast<std::size_t>(i)]);
    return out;
  };

  for (std::size_t mask = 0; mask < total; ++mask) {
    if (f[mask] < -kValueTol) report.nonnegative = false;
    for (int i = 0; i < n; ++i) {
      if (mask & (std::size_t{1} << i)) continue;
      std::size_t with_i = mask | (std::size_t{1} << i);
      if (oracle.monotone() && f[with_i] < f[mask] - kValueTol) report.monotone_ok = false;
      for (int j = i + 1; j < n; ++j) {
        if (mask & (std::size_t{1} << j)) continue;
        std::size_t with_j = mask | (std::size_t{1} << j);
        std::size_t with_both = with_i | (std::size_t{1} << j);
        double margin_small = f[with_i] - f[mask];
        double margin_large = f[with_both] - f[with_j];
        if (margin_small < margin_large - kValueTol) {
          report.submodular = false;
          if (!report.witness) {
            report.witness = SubmodularityWitness{
                subset_keys(mask), subset_keys(with_j), keys[static_cast<std::size_t>(i)],
                margin_small, margin_large};
          }
        }
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Oracle spec files

namespace {

std::string clean_line(const std::string& raw) {
  std::string s = raw;
  if (auto pos = s.find('#'); pos != std::string::npos) s.erase(pos);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

long long to_int(const std::string& tok, int line, const char* what) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError(line, std::string("expected integer for ") + what);
  }
  if (pos != tok.size()) throw ParseError(line, std::string("bad integer for ") + what);
  return v;
}

double to_real(const std::string& tok, int line, const char* what) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError(line, std::string("expected number for ") + what);
  }
  if (pos != tok.size()) throw ParseError(line, std::string("bad number for ") + what);
  return v;
}

}  // namespace

std::unique_ptr<SubmodularOracle> parse_oracle_spec(std::istream& in) {
  std::string raw;
  int line_no = 0;
  std::vector<std::pair<int, std::vector<std::string>>> lines;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string s = clean_line(raw);
    if (s.empty()) continue;
    std::istringstream iss(s);
    std::vector<std::string> toks;
    std::string tok;
    while (iss >> tok) toks.push_back(tok);
    lines.emplace_back(line_no, std::move(toks));
  }
  if (lines.empty()) throw ParseError(0, "empty oracle spec");

  const auto& [head_line, head] = lines.front();
  if (head.size() < 2 || head[0] != "oracle")
    throw ParseError(head_line, "expected 'oracle <kind>'");
  const std::string& kind = head[1];

  if (kind == "tight") {
    if (head.size() != 10)
      throw ParseError(head_line, "expected 'oracle tight C <C> n <n> eps <eps> delta <delta>'");
    double C = 0, eps = 0, delta = 0;
    long long n = 0;
    for (std::size_t i = 2; i + 1 < head.size(); i += 2) {
      const std::string& name = head[i];
      const std::string& val = head[i + 1];
      if (name == "C")
        C = to_real(val, head_line, "C");
      else if (name == "n")
        n = to_int(val, head_line, "n");
      else if (name == "eps")
        eps = to_real(val, head_line, "eps");
      else if (name == "delta")
        delta = to_real(val, head_line, "delta");
      else
        throw ParseError(head_line, "unknown tight parameter '" + name + "'");
    }
    if (lines.size() > 1)
      throw ParseError(lines[1].first, "unexpected content after tight oracle line");
    return std::make_unique<TightOracle>(C, static_cast<int>(n), eps, delta);
  }

  if (kind == "linear") {
    std::unordered_map<Key, double> weights;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto& [ln, toks] = lines[i];
      if (toks.size() != 3 || toks[0] != "w")
        throw ParseError(ln, "expected 'w <key> <value>'");
      Key k = to_int(toks[1], ln, "key");
      double w = to_real(toks[2], ln, "weight");
      if (!weights.emplace(k, w).second) throw ParseError(ln, "duplicate weight for key");
    }
    return std::make_unique<LinearOracle>(std::move(weights));
  }

  if (kind == "coverage" || kind == "covlin") {
    int universe = -1;
    std::vector<double> elem_weights;
    std::unordered_map<Key, std::vector<int>> sets;
    std::unordered_map<Key, double> costs;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto& [ln, toks] = lines[i];
      if (toks[0] == "universe") {
        if (toks.size() != 2) throw ParseError(ln, "expected 'universe <N>'");
        universe = static_cast<int>(to_int(toks[1], ln, "universe"));
        if (universe < 0) throw ParseError(ln, "universe must be nonnegative");
        if (elem_weights.empty())
          elem_weights.assign(static_cast<std::size_t>(universe), 1.0);
      } else if (toks[0] == "a") {
        if (toks.size() != 3) throw ParseError(ln, "expected 'a <elem> <weight>'");
        if (universe < 0) throw ParseError(ln, "'a' before 'universe'");
        long long u = to_int(toks[1], ln, "element");
        if (u < 0 || u >= universe) throw ParseError(ln, "element out of universe");
        elem_weights[static_cast<std::size_t>(u)] = to_real(toks[2], ln, "element weight");
      } else if (toks[0] == "set") {
        if (toks.size() < 2) throw ParseError(ln, "expected 'set <key> <elem>...'");
        if (universe < 0) throw ParseError(ln, "'set' before 'universe'");
        Key k = to_int(toks[1], ln, "key");
        std::vector<int> elems;
        for (std::size_t j = 2; j < toks.size(); ++j) {
          long long u = to_int(toks[j], ln, "element");
          if (u < 0 || u >= universe) throw ParseError(ln, "element out of universe");
          elems.push_back(static_cast<int>(u));
        }
        if (!sets.emplace(k, std::move(elems)).second)
          throw ParseError(ln, "duplicate set for key");
      } else if (toks[0] == "cost" && kind == "covlin") {
        if (toks.size() != 3) throw ParseError(ln, "expected 'cost <key> <c>'");
        Key k = to_int(toks[1], ln, "key");
        if (!costs.emplace(k, to_real(toks[2], ln, "cost")).second)
          throw ParseError(ln, "duplicate cost for key");
      } else {
        throw ParseError(ln, "unexpected directive '" + toks[0] + "'");
      }
    }
    if (universe < 0) throw ParseError(head_line, "missing 'universe' line");
    if (kind == "coverage")
      return std::make_unique<CoverageOracle>(universe, std::move(elem_weights),
                                              std::move(sets));
    return std::make_unique<CovLinOracle>(universe, std::move(elem_weights), std::move(sets),
                                          std::move(costs));
  }

  throw ParseError(head_line, "unknown oracle kind '" + kind + "'");
}

std::unique_ptr<SubmodularOracle> parse_oracle_spec(const std::string& text) {
  std::istringstream iss(text);
  return parse_oracle_spec(iss);
}

std::unique_ptr<SubmodularOracle> parse_oracle_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open oracle file '" + path + "'");
  return parse_oracle_spec(in);
}

}  // namespace msbm
