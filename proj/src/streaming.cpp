#include "msbm/streaming.hpp"

#include <algorithm>
#include <cmath>

namespace msbm {

void AlgoParams::validate() const {
  if (!(C > 1.0)) throw DomainError("slack parameter C must be > 1");
  if (!(q > 0.0 && q <= 1.0)) throw DomainError("sampling probability q must be in (0,1]");
}

AlgoParams monotone_preset() {
  AlgoParams p;
  p.C = 1.0 + 1.0 / std::sqrt(2.0);
  p.q = 1.0;
  return p;
}

AlgoParams nonmonotone_preset() {
  AlgoParams p;
  p.C = 1.0 + std::sqrt(3.0) / 2.0;
  p.q = 1.0 / (2.0 * p.C + 1.0);
  return p;
}

AlgoParams mwm_linear_preset(double eps) {
  if (!(eps > 0.0)) throw DomainError("mwm preset requires eps > 0");
  AlgoParams p;
  p.C = 1.0 + eps;
  p.q = 1.0;
  return p;
}

double stack_bound(double C) { return 2.0 * C + C / (C - 1.0); }

double randomized_stack_bound(double C) {
  return (4.0 * C * C - 1.0) / (2.0 * C - 2.0);
}

std::vector<Key> RunRecord::stack_keys(const Instance& inst) const {
  std::vector<Key> out;
  out.reserve(stack.size());
  for (const StackEntry& s : stack) out.push_back(inst.edge(s.edge_idx).key);
  return out;
}

std::vector<Key> RunRecord::matching_keys(const Instance& inst) const {
  std::vector<Key> out;
  out.reserve(matching.size());
  for (int idx : matching) out.push_back(inst.edge(idx).key);
  return out;
}

MsbmRun::MsbmRun(const Instance& inst, const SubmodularOracle& oracle, AlgoParams params,
                 bool certify)
    : inst_(&inst),
      oracle_(&oracle),
      certify_(certify),
      rng_(params.seed),
      state_(oracle.make_state()) {
  params.validate();
  record_.params = params;
  record_.certify = certify;
  queries_at_start_ = oracle.value_queries();
}

double MsbmRun::potential(VertexId v) const { return record_.potential(v); }

Decision MsbmRun::step() {
  if (done()) throw DomainError("stream already consumed");
  const int idx = next_++;
  const Edge& e = inst_->edge(idx);
  const AlgoParams& p = record_.params;

  double g = oracle_->stream_marginal(state_, e.key);
  ++record_.marginal_calls;
  double base = potential(e.u) + potential(e.v);

  bool skip = (p.skip_rule == SkipRule::nonstrict) ? (p.C * base >= g - kValueTol)
                                                   : (p.C * base > g + kValueTol);
  if (skip) {
    if (certify_) record_.skipped.push_back({idx, g, false});
    return Decision::skipped;
  }
  if (p.q < 1.0 && !rng_.bernoulli(p.q)) {
    // Not in S; its recorded marginal becomes its λ value for the
    // expectation-mode certificates.
    if (certify_) record_.skipped.push_back({idx, g, true});
    return Decision::sampled_out;
  }

  double surplus = g - base;
  double w_u = surplus / inst_->capacity(e.u);
  double w_v = surplus / inst_->capacity(e.v);
  record_.potentials[e.u] += w_u;
  record_.potentials[e.v] += w_v;
  oracle_->push_accept(state_, e.key, g);
  record_.stack.push_back({idx, g, w_u, w_v});
  ++record_.stack_incidence[e.u];
  ++record_.stack_incidence[e.v];
  if (certify_) {
    record_.trajectory.push_back({idx + 1, e.u, record_.potentials[e.u]});
    record_.trajectory.push_back({idx + 1, e.v, record_.potentials[e.v]});
  }
  record_.peak_memory_proxy =
      std::max(record_.peak_memory_proxy, record_.stack.size() + record_.potentials.size());
  return Decision::pushed;
}

RunRecord MsbmRun::finish() {
  if (!done()) throw DomainError("stream not fully consumed");
  record_.f_stack = state_.value();
  record_.matching = unwind(record_.stack, *inst_);
  std::vector<Key> mkeys = record_.matching_keys(*inst_);
  record_.f_matching = oracle_->eval(mkeys);
  record_.oracle_queries = oracle_->value_queries() - queries_at_start_;
  return std::move(record_);
}

std::vector<int> unwind(const std::vector<StackEntry>& stack, const Instance& inst) {
  std::vector<int> degree(static_cast<std::size_t>(inst.num_vertices()), 0);
  std::vector<int> matching;
  for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
    const Edge& e = inst.edge(it->edge_idx);
    if (degree[static_cast<std::size_t>(e.u)] < inst.capacity(e.u) &&
        degree[static_cast<std::size_t>(e.v)] < inst.capacity(e.v)) {
      matching.push_back(it->edge_idx);
      ++degree[static_cast<std::size_t>(e.u)];
      ++degree[static_cast<std::size_t>(e.v)];
    }
  }
  std::sort(matching.begin(), matching.end());
  return matching;
}

RunRecord run_msbm(const Instance& inst, const SubmodularOracle& oracle,
                   const AlgoParams& params, bool certify) {
  MsbmRun run(inst, oracle, params, certify);
  while (!run.done()) run.step();
  return run.finish();
}

}  // namespace msbm
