#pragma once

#include <atomic>
#include <initializer_list>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "msbm/common.hpp"
#include "msbm/instance.hpp"

namespace msbm {

class SubmodularOracle;

// Incremental evaluation state for stream marginals f(e:S): the accepted
// keys in arrival order plus a family-specific summary. value() is exactly
// f(accepted) at all times. Plain value type; copies are independent.
class StreamState {
 public:
  double value() const { return value_; }
  const std::vector<Key>& accepted() const { return accepted_; }
  bool contains(Key k) const { return set_.count(k) != 0; }

  struct CoverSummary {
    std::vector<std::uint8_t> covered;
  };
  struct TightSummary {
    std::vector<double> pair_weight;  // w(T ∩ {d_i, e_i}), index 1..n
  };
  using Summary = std::variant<std::monostate, CoverSummary, TightSummary>;

 private:
  friend class SubmodularOracle;

  const SubmodularOracle* origin_ = nullptr;
  std::vector<Key> accepted_;
  std::unordered_set<Key> set_;
  double value_ = 0.0;
  Summary summary_;
};

// Value-oracle access to a nonnegative submodular function over keys.
// Evaluation uses set semantics: duplicate keys in a query are ignored.
// The query counter counts value computations, full or incremental; a
// stream_marginal costs at most 2 (shipped families: exactly 1).
class SubmodularOracle {
 public:
  virtual ~SubmodularOracle() = default;

  double eval(std::span<const Key> keys) const;
  double eval(std::initializer_list<Key> keys) const {
    return eval(std::span<const Key>(keys.begin(), keys.size()));
  }

  double f_empty() const { return f_empty_; }
  bool monotone() const { return monotone_; }
  virtual std::string kind() const = 0;

  const std::vector<Key>& keys() const { return keys_; }
  bool knows(Key k) const { return key_set_.count(k) != 0; }

  // f_max := max_e f({e}), scanned at construction.
  double singleton_max() const { return singleton_max_; }
  // Sound lower bound on the minimum nonzero marginal f(e|S), when the
  // family structure provides one.
  virtual std::optional<double> min_marginal_bound() const { return std::nullopt; }

  std::uint64_t value_queries() const { return queries_.load(std::memory_order_relaxed); }
  void reset_value_queries() const { queries_.store(0, std::memory_order_relaxed); }

  StreamState make_state() const;

  // f(e:S) = f(S ∪ {e}) − f(S) against the accepted set; no mutation.
  double stream_marginal(const StreamState& s, Key e) const;

  // Appends e to the state; value grows by exactly stream_marginal(old, e).
  // A key already accepted is a no-op (set semantics).
  void push_accept(StreamState& s, Key e) const;
  // Same, with the marginal already computed by the caller (no extra query).
  void push_accept(StreamState& s, Key e, double marginal) const;

 protected:
  explicit SubmodularOracle(bool monotone) : monotone_(monotone) {}

  // Scans singletons, caches f(∅), validates nonnegativity opportunistically.
  // Derived constructors call this last; resets the query counter.
  void finalize_construction();

  // f over deduplicated known keys.
  virtual double eval_impl(std::span<const Key> unique_keys) const = 0;
  // Default: one extra full evaluation of S ∪ {e}.
  virtual double marginal_impl(const StreamState& s, Key e) const;
  virtual void init_state(StreamState& s) const { (void)s; }
  // Update the family summary after e is accepted (value handled by base).
  virtual void push_impl(StreamState& s, Key e) const { (void)s, (void)e; }
  virtual std::vector<Key> collect_keys() const = 0;

  static StreamState::Summary& summary(StreamState& s) { return s.summary_; }
  static const StreamState::Summary& summary(const StreamState& s) { return s.summary_; }

  void count_query() const { queries_.fetch_add(1, std::memory_order_relaxed); }
  void check_key(Key k) const;

 private:
  bool monotone_;
  double f_empty_ = 0.0;
  double singleton_max_ = 0.0;
  std::vector<Key> keys_;
  std::unordered_set<Key> key_set_;
  mutable std::atomic<std::uint64_t> queries_{0};
};

class LinearOracle final : public SubmodularOracle {
 public:
  explicit LinearOracle(std::unordered_map<Key, double> weights);

  double weight(Key k) const;
  std::string kind() const override { return "linear"; }
  std::optional<double> min_marginal_bound() const override;

 protected:
  double eval_impl(std::span<const Key> unique_keys) const override;
  double marginal_impl(const StreamState& s, Key e) const override;
  std::vector<Key> collect_keys() const override;

 private:
  std::unordered_map<Key, double> weights_;
};

// Weighted coverage: f(T) = Σ_{u covered by T} a_u.
class CoverageOracle : public SubmodularOracle {
 public:
  CoverageOracle(int universe, std::vector<double> element_weights,
                 std::unordered_map<Key, std::vector<int>> sets);

  int universe() const { return universe_; }
  const std::vector<int>& set_of(Key k) const;
  std::string kind() const override { return "coverage"; }
  std::optional<double> min_marginal_bound() const override;

 protected:
  CoverageOracle(int universe, std::vector<double> element_weights,
                 std::unordered_map<Key, std::vector<int>> sets, bool monotone);

  double coverage_value(std::span<const Key> unique_keys) const;
  double coverage_marginal(const StreamState& s, Key e) const;

  double eval_impl(std::span<const Key> unique_keys) const override;
  double marginal_impl(const StreamState& s, Key e) const override;
  void init_state(StreamState& s) const override;
  void push_impl(StreamState& s, Key e) const override;
  std::vector<Key> collect_keys() const override;

  int universe_;
  std::vector<double> element_weights_;
  std::unordered_map<Key, std::vector<int>> sets_;
};

// Non-monotone family: coverage plus a nonnegative linear function of the
// complement, f(T) = coverage(T) + Σ_{e∉T} c_e. Submodular; f(∅) = Σ c_e.
class CovLinOracle final : public CoverageOracle {
 public:
  CovLinOracle(int universe, std::vector<double> element_weights,
               std::unordered_map<Key, std::vector<int>> sets,
               std::unordered_map<Key, double> costs);

  double cost(Key k) const;
  double total_cost() const { return total_cost_; }
  std::string kind() const override { return "covlin"; }
  std::optional<double> min_marginal_bound() const override;

 protected:
  double eval_impl(std::span<const Key> unique_keys) const override;
  double marginal_impl(const StreamState& s, Key e) const override;

 private:
  std::unordered_map<Key, double> costs_;
  double total_cost_ = 0.0;
  bool integral_ = true;
};

// The tight-family function over the chain graph x_0..x_n / y_0..y_n:
//   f(T) = w(T ∩ {e_0}) + Σ_{i=1..n} min(w(T ∩ {d_i, e_i}), w(e_i))
// with w(d_i) = (C+δ)^{i−1}, w(e_1) = 1+C−ε, w(e_i) = C^i−ε (i≥2),
// w(e_0) = C^n−ε.  δ=0 is the verbatim construction; δ>0 makes every d_i
// pass the nonstrict skip test strictly.
//
// Canonical key layout (matches the generated instance's arrival order):
//   d_i ↦ i−1 for i in 1..n,  e_0 ↦ n,  e_i ↦ n+i for i in 1..n.
class TightOracle final : public SubmodularOracle {
 public:
  TightOracle(double C, int n, double eps, double delta);

  double weight(Key k) const;
  double slack() const { return C_; }
  int chain_length() const { return n_; }
  double eps() const { return eps_; }
  double delta() const { return delta_; }
  std::string kind() const override { return "tight"; }

  static Key d_key(int i) { return i - 1; }
  Key e_key(int i) const { return n_ + i; }

 protected:
  double eval_impl(std::span<const Key> unique_keys) const override;
  double marginal_impl(const StreamState& s, Key e) const override;
  void init_state(StreamState& s) const override;
  void push_impl(StreamState& s, Key e) const override;
  std::vector<Key> collect_keys() const override;

 private:
  // -1 = e_0, otherwise the pair index i in 1..n
  int pair_of(Key k) const;
  bool is_d(Key k) const { return k < n_; }

  double C_, eps_, delta_;
  int n_;
  std::vector<double> d_weight_;  // index 1..n
  std::vector<double> e_weight_;  // index 0..n
};

// The tight oracle together with the chain instance whose stream reveals
// d_1..d_n, then e_0, e_1..e_n (vertices x_i ↦ i, y_i ↦ n+1+i).
struct TightFamily {
  Instance instance;
  std::unique_ptr<SubmodularOracle> oracle;
};
TightFamily make_tight_oracle(double C, int n, double eps, double delta);

// Exhaustive diminishing-returns audit over a ground set (≤ exhaustive_limit
// keys): precomputes f on every subset, then checks the pairwise condition
// f(A∪{e}) + f(A∪{e'}) ≥ f(A∪{e,e'}) + f(A). Also audits nonnegativity and,
// for monotone-flagged oracles, monotonicity.
struct SubmodularityWitness {
  std::vector<Key> smaller;  // S
  std::vector<Key> larger;   // T ⊇ S
  Key element;               // e ∉ T with f_S(e) < f_T(e)
  double margin_smaller = 0.0;
  double margin_larger = 0.0;
};

struct SubmodularityReport {
  bool submodular = true;
  bool nonnegative = true;
  bool monotone_ok = true;
  std::optional<SubmodularityWitness> witness;
  bool ok() const { return submodular && nonnegative && monotone_ok; }
};

SubmodularityReport verify_submodular(const SubmodularOracle& oracle,
                                      std::span<const Key> ground,
                                      int exhaustive_limit = 14);

// Oracle spec file: `oracle linear` + `w <key> <value>` lines;
// `oracle coverage` + `universe <N>`, optional `a <elem> <weight>`,
// `set <key> <elem>...`; `oracle covlin` adds `cost <key> <c>` lines;
// `oracle tight C <C> n <n> eps <ε> delta <δ>`. '#' comments ignored.
std::unique_ptr<SubmodularOracle> parse_oracle_spec(std::istream& in);
std::unique_ptr<SubmodularOracle> parse_oracle_spec(const std::string& text);
std::unique_ptr<SubmodularOracle> parse_oracle_spec_file(const std::string& path);

}  // namespace msbm
