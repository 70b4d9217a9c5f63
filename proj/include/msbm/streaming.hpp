#pragma once

#include <unordered_map>
#include <vector>

#include "msbm/common.hpp"
#include "msbm/instance.hpp"
#include "msbm/oracle.hpp"

namespace msbm {

// Skip comparison for an arriving edge: the nonstrict rule is the
// pseudocode's "C·Σφ ≥ f(e:S)"; the strict rule takes on ties (needed to
// realize the unperturbed tight trace). Ties use the global tolerance.
enum class SkipRule { nonstrict, strict };

struct AlgoParams {
  double C = 0.0;  // slack, > 1
  double q = 1.0;  // sampling probability, in (0,1]
  SkipRule skip_rule = SkipRule::nonstrict;
  std::uint64_t seed = 0;

  void validate() const;
};

// Parameter presets. The guarantee factors that go with them:
// stack_bound(C) = 2C + C/(C−1) (deterministic, monotone),
// randomized_stack_bound(C) = (4C²−1)/(2C−2) at q = 1/(2C+1) (non-monotone).
AlgoParams monotone_preset();            // C = 1 + 1/√2, q = 1
AlgoParams nonmonotone_preset();         // C = 1 + √3/2, q = 1/(2C+1)
AlgoParams mwm_linear_preset(double eps);  // C = 1 + ε, q = 1

double stack_bound(double C);
double randomized_stack_bound(double C);

enum class Decision { pushed, skipped, sampled_out };

struct StackEntry {
  int edge_idx;
  double marginal;  // f(e:S) at push time
  double w_u, w_v;  // per-endpoint increments; b_u·w_u = b_v·w_v = surplus
};

struct SkippedEntry {
  int edge_idx;
  double marginal;  // f(e:S) at arrival; frozen, equals f(e:S_final)
  bool sampled_out;
};

struct PotentialEvent {
  int arrival;  // 1-based arrival index
  VertexId vertex;
  double value;
};

struct RunRecord {
  AlgoParams params;
  bool certify = false;

  std::vector<StackEntry> stack;                     // push order
  std::unordered_map<VertexId, double> potentials;  // final φ_v^{(|E|)}, sparse
  std::vector<SkippedEntry> skipped;                // certify mode only
  std::vector<PotentialEvent> trajectory;           // certify mode only
  std::vector<int> matching;                        // arrival-sorted edge idxs
  double f_matching = 0.0;                          // f(M)
  double f_stack = 0.0;                             // f(S)

  std::uint64_t oracle_queries = 0;  // value queries made during the pass
  std::size_t marginal_calls = 0;    // stream-marginal calls, one per arrival
  std::size_t peak_memory_proxy = 0;  // max over time of stack entries + nonzero potentials
  std::unordered_map<VertexId, int> stack_incidence;

  double potential(VertexId v) const {
    auto it = potentials.find(v);
    return it == potentials.end() ? 0.0 : it->second;
  }
  std::vector<Key> stack_keys(const Instance& inst) const;
  std::vector<Key> matching_keys(const Instance& inst) const;
};

// Single-pass executor, one arrival per step(); exposed so tests can drive
// the stream arrival by arrival.
class MsbmRun {
 public:
  MsbmRun(const Instance& inst, const SubmodularOracle& oracle, AlgoParams params,
          bool certify);

  bool done() const { return next_ == inst_->num_edges(); }
  Decision step();
  RunRecord finish();  // unwind + f(M); call once, after the stream is done

  double potential(VertexId v) const;
  const StreamState& state() const { return state_; }

 private:
  const Instance* inst_;
  const SubmodularOracle* oracle_;
  bool certify_;
  Rng rng_;
  int next_ = 0;
  StreamState state_;
  RunRecord record_;
  std::uint64_t queries_at_start_ = 0;
};

// Reverse greedy unwind: pop in reverse push order, keep an edge iff both
// endpoint degrees are still below capacity. Result sorted by arrival.
std::vector<int> unwind(const std::vector<StackEntry>& stack, const Instance& inst);

RunRecord run_msbm(const Instance& inst, const SubmodularOracle& oracle,
                   const AlgoParams& params, bool certify = false);

}  // namespace msbm
