#include "msbm/mwbm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

namespace msbm {

double WeightedStack::weight_of(std::span<const int> edge_idxs) const {
  double sum = 0.0;
  for (int idx : edge_idxs) sum += edge_weights.at(static_cast<std::size_t>(idx));
  return sum;
}

std::vector<int> WeightedStack::stack_edge_idxs() const {
  std::vector<int> out;
  out.reserve(stack.size());
  for (const StackEntry& s : stack) out.push_back(s.edge_idx);
  return out;
}

WeightedStack run_stack_phase(const Instance& inst, const std::vector<double>& weights,
                              double eps) {
  if (!(eps > 0.0)) throw DomainError("mwbm requires eps > 0");
  if (static_cast<int>(weights.size()) != inst.num_edges())
    throw DomainError("weight vector length does not match edge count");
  for (double w : weights)
    if (w < 0.0) throw DomainError("mwbm weights must be nonnegative");

  // Per-edge weights go through a linear oracle keyed by edge index, so
  // duplicate payload keys cannot alias distinct parallel edges here.
  std::unordered_map<Key, double> by_key;
  for (int i = 0; i < inst.num_edges(); ++i)
    by_key[static_cast<Key>(i)] = weights[static_cast<std::size_t>(i)];
  LinearOracle oracle(std::move(by_key));

  std::vector<Edge> rekeyed;
  rekeyed.reserve(static_cast<std::size_t>(inst.num_edges()));
  for (int i = 0; i < inst.num_edges(); ++i) {
    Edge e = inst.edge(i);
    e.key = static_cast<Key>(i);
    rekeyed.push_back(e);
  }
  Instance shadow(inst.num_vertices(), inst.capacities(), std::move(rekeyed));

  AlgoParams params;
  params.C = 1.0 + eps / 2.0;
  params.q = 1.0;

  MsbmRun run(shadow, oracle, params, /*certify=*/true);
  while (!run.done()) run.step();
  RunRecord record = run.finish();

  WeightedStack ws;
  ws.eps = eps;
  ws.stack = record.stack;
  ws.potentials = record.potentials;
  ws.edge_weights = weights;
  ws.run = std::move(record);
  return ws;
}

WeightedStack run_stack_phase(const Instance& inst, const LinearOracle& oracle, double eps) {
  std::vector<double> weights;
  weights.reserve(static_cast<std::size_t>(inst.num_edges()));
  for (const Edge& e : inst.edges()) weights.push_back(oracle.weight(e.key));
  return run_stack_phase(inst, weights, eps);
}

namespace {

struct BranchAndBound {
  const Instance& inst;
  std::vector<int> order;  // edge idxs, weight-descending
  std::span<const double> weights;
  std::vector<double> suffix_sum{};
  std::vector<int> degree{};
  std::vector<int> chosen{};
  std::vector<int> best{};
  double best_weight = -1.0;

  double weight(int idx) const { return weights[static_cast<std::size_t>(idx)]; }

  void dfs(std::size_t pos, double current) {
    if (current > best_weight) {
      best_weight = current;
      best = chosen;
    }
    if (pos == order.size()) return;
    if (current + suffix_sum[pos] <= best_weight) return;  // capacity-free upper bound
    int idx = order[pos];
    const Edge& e = inst.edge(idx);
    if (degree[static_cast<std::size_t>(e.u)] < inst.capacity(e.u) &&
        degree[static_cast<std::size_t>(e.v)] < inst.capacity(e.v)) {
      ++degree[static_cast<std::size_t>(e.u)];
      ++degree[static_cast<std::size_t>(e.v)];
      chosen.push_back(idx);
      dfs(pos + 1, current + weight(idx));
      chosen.pop_back();
      --degree[static_cast<std::size_t>(e.u)];
      --degree[static_cast<std::size_t>(e.v)];
    }
    dfs(pos + 1, current);
  }
};

}  // namespace

std::vector<int> exact_mwbm(const Instance& inst, std::span<const int> edge_idxs,
                            std::span<const double> weights, int limit) {
  if (static_cast<int>(edge_idxs.size()) > limit)
    throw TooLargeError("too large for exact mode: " + std::to_string(edge_idxs.size()) +
                        " edges exceed limit " + std::to_string(limit));
  std::unordered_set<int> seen;
  for (int idx : edge_idxs) {
    if (idx < 0 || idx >= inst.num_edges())
      throw DomainError("unknown edge index " + std::to_string(idx));
    if (!seen.insert(idx).second)
      throw DomainError("duplicate edge index in exact_mwbm input");
  }

  BranchAndBound bb{inst, std::vector<int>(edge_idxs.begin(), edge_idxs.end()), weights};
  std::stable_sort(bb.order.begin(), bb.order.end(),
                   [&](int a, int b) { return bb.weight(a) > bb.weight(b); });
  bb.suffix_sum.assign(bb.order.size() + 1, 0.0);
  for (std::size_t i = bb.order.size(); i-- > 0;)
    bb.suffix_sum[i] = bb.suffix_sum[i + 1] + bb.weight(bb.order[i]);
  bb.degree.assign(static_cast<std::size_t>(inst.num_vertices()), 0);
  bb.dfs(0, 0.0);

  std::sort(bb.best.begin(), bb.best.end());
  return bb.best;
}

MwbmReport run_mwbm(const Instance& inst, const std::vector<double>& weights, double eps,
                    int exact_limit) {
  WeightedStack ws = run_stack_phase(inst, weights, eps);
  MwbmReport report;
  report.eps = eps;

  std::vector<int> stack_idxs = ws.stack_edge_idxs();
  try {
    report.matching = exact_mwbm(inst, stack_idxs, weights, exact_limit);
    report.exact = true;
  } catch (const TooLargeError&) {
    report.matching = unwind(ws.stack, inst);
    report.exact = false;
  }
  report.weight_matching = ws.weight_of(report.matching);

  double C = 1.0 + eps / 2.0;
  double sum_phi = 0.0;
  for (const auto& [v, phi] : ws.potentials) sum_phi += inst.capacity(v) * C * phi;
  report.sum_capacity_potentials = sum_phi;
  report.phi_route_ok =
      report.weight_matching >= sum_phi / (2.0 + eps) - kValueTol;

  // Dual (0, φ⃗, w⃗): the skip test covers every edge outside the stack.
  std::unordered_set<int> in_stack(stack_idxs.begin(), stack_idxs.end());
  report.dual_feasible_off_stack = true;
  report.dual_worst_slack = std::numeric_limits<double>::infinity();
  for (int i = 0; i < inst.num_edges(); ++i) {
    if (in_stack.count(i)) continue;
    const Edge& e = inst.edge(i);
    auto phi = [&](VertexId v) {
      auto it = ws.potentials.find(v);
      return it == ws.potentials.end() ? 0.0 : it->second;
    };
    double lhs = C * (phi(e.u) + phi(e.v));
    double slack = lhs - weights[static_cast<std::size_t>(i)];
    report.dual_worst_slack = std::min(report.dual_worst_slack, slack);
    if (slack < -kValueTol) report.dual_feasible_off_stack = false;
  }

  report.stack = std::move(ws);
  return report;
}

MwbmReport run_mwbm(const Instance& inst, const LinearOracle& oracle, double eps,
                    int exact_limit) {
  std::vector<double> weights;
  weights.reserve(static_cast<std::size_t>(inst.num_edges()));
  for (const Edge& e : inst.edges()) weights.push_back(oracle.weight(e.key));
  return run_mwbm(inst, weights, eps, exact_limit);
}

void attach_opt(MwbmReport& report, const Instance& inst, std::span<const int> opt_edges) {
  (void)inst;
  const WeightedStack& ws = report.stack;
  double w_opt = ws.weight_of(opt_edges);
  std::unordered_set<int> in_stack;
  for (const StackEntry& s : ws.stack) in_stack.insert(s.edge_idx);
  double w_opt_in = 0.0;
  for (int idx : opt_edges)
    if (in_stack.count(idx)) w_opt_in += ws.edge_weights[static_cast<std::size_t>(idx)];
  report.opt_weight = w_opt;
  report.opt_in_stack_weight = w_opt_in;
  report.stack_route_ok = report.weight_matching >= w_opt_in - kValueTol;
  report.ratio = report.weight_matching > 0.0
                     ? w_opt / report.weight_matching
                     : (w_opt > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
}

}  // namespace msbm
