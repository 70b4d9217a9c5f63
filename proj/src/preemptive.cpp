#include "msbm/preemptive.hpp"

#include <algorithm>
#include <cmath>

namespace msbm {

void PreemptiveParams::validate() const {
  if (!(C > 1.0)) throw DomainError("preemptive slack C must be > 1");
  if (!(q > 0.0 && q <= 1.0)) throw DomainError("preemption probability q must be in (0,1]");
}

PreemptiveParams preemptive_monotone_preset() { return PreemptiveParams{2.0, 1.0, 0}; }

PreemptiveParams preemptive_nonmonotone_preset() {
  PreemptiveParams p;
  p.C = 1.0 + std::sqrt(6.0) / 2.0;
  p.q = 1.0 / (2.0 * p.C + 1.0);
  return p;
}

double preemptive_bound(double C) { return 2.0 * C + 2.0 * C / (C - 1.0); }

double randomized_preemptive_bound(double C) {
  return (2.0 * C * C + C) / (C - 1.0);
}

double PreemptiveRecord::matched_weight() const {
  double sum = 0.0;
  for (const AdmittedEdge& a : admitted)
    if (a.alive) sum += a.weight;
  return sum;
}

double PreemptiveRecord::preempted_weight() const {
  double sum = 0.0;
  for (const AdmittedEdge& a : admitted)
    if (!a.alive) sum += a.weight;
  return sum;
}

PreemptiveRun::PreemptiveRun(const Instance& inst, const SubmodularOracle& oracle,
                             PreemptiveParams params, bool certify)
    : inst_(&inst),
      oracle_(&oracle),
      certify_(certify),
      rng_(params.seed),
      occupant_(static_cast<std::size_t>(inst.num_vertices()), -1),
      matching_state_(oracle.make_state()),
      admitted_state_(oracle.make_state()) {
  params.validate();
  if (!inst.unit_capacities())
    throw UnsupportedError("preemptive matching supports b ≡ 1 only");
  record_.params = params;
  record_.certify = certify;
  queries_at_start_ = oracle.value_queries();
}

// Walks the alive edges in arrival order, recomputing every f(e : M) and the
// per-vertex maxima that define the dual potentials. Called after each
// admission, i.e. whenever M changes.
void PreemptiveRun::refresh_matching_marginals() {
  std::vector<int> alive;
  for (std::size_t slot = 0; slot < record_.admitted.size(); ++slot)
    if (record_.admitted[slot].alive) alive.push_back(static_cast<int>(slot));
  std::sort(alive.begin(), alive.end(), [&](int a, int b) {
    return record_.admitted[static_cast<std::size_t>(a)].edge_idx <
           record_.admitted[static_cast<std::size_t>(b)].edge_idx;
  });

  StreamState st = oracle_->make_state();
  for (int slot : alive) {
    AdmittedEdge& a = record_.admitted[static_cast<std::size_t>(slot)];
    const Edge& e = inst_->edge(a.edge_idx);
    double m = oracle_->stream_marginal(st, e.key);
    a.weight = m;
    if (certify_) {
      auto bump = [&](VertexId v) {
        auto [it, inserted] = record_.phi.try_emplace(v, m);
        if (!inserted) it->second = std::max(it->second, m);
      };
      bump(e.u);
      bump(e.v);
    }
    oracle_->push_accept(st, e.key, m);
  }
  matching_state_ = std::move(st);
}

PreemptiveDecision PreemptiveRun::step() {
  if (done()) throw DomainError("stream already consumed");
  const int idx = next_++;
  const Edge& e = inst_->edge(idx);
  const PreemptiveParams& p = record_.params;

  // All of the current matching arrived before e, so f(e:M) is the plain
  // marginal against matching_state_.
  double marginal = oracle_->stream_marginal(matching_state_, e.key);

  int slot_u = occupant_[static_cast<std::size_t>(e.u)];
  int slot_v = occupant_[static_cast<std::size_t>(e.v)];
  double blocking = 0.0;
  if (slot_u >= 0) blocking += record_.admitted[static_cast<std::size_t>(slot_u)].weight;
  if (slot_v >= 0 && slot_v != slot_u)
    blocking += record_.admitted[static_cast<std::size_t>(slot_v)].weight;

  auto note_skip = [&](bool sampled_out) {
    if (certify_) {
      double lambda = oracle_->stream_marginal(admitted_state_, e.key);
      record_.skipped.push_back({idx, lambda, sampled_out});
    }
  };

  if (marginal <= p.C * blocking + kValueTol) {
    note_skip(false);
    return PreemptiveDecision::skipped;
  }
  if (p.q < 1.0 && !rng_.bernoulli(p.q)) {
    note_skip(true);
    return PreemptiveDecision::sampled_out;
  }

  int new_slot = static_cast<int>(record_.admitted.size());
  AdmittedEdge entry;
  entry.edge_idx = idx;
  entry.weight = marginal;  // refreshed below
  auto evict = [&](int slot) {
    if (slot < 0) return;
    AdmittedEdge& victim = record_.admitted[static_cast<std::size_t>(slot)];
    victim.alive = false;  // weight stays frozen at its f(e':M^{(t-1)}) value
    victim.evicted_at = idx + 1;
    const Edge& ve = inst_->edge(victim.edge_idx);
    occupant_[static_cast<std::size_t>(ve.u)] = -1;
    occupant_[static_cast<std::size_t>(ve.v)] = -1;
    entry.evicted.push_back(victim.edge_idx);
    --matching_size_;
  };
  evict(slot_u);
  if (slot_v != slot_u) evict(slot_v);

  record_.admitted.push_back(std::move(entry));
  occupant_[static_cast<std::size_t>(e.u)] = new_slot;
  occupant_[static_cast<std::size_t>(e.v)] = new_slot;
  ++matching_size_;
  record_.peak_matching_size =
      std::max(record_.peak_matching_size, static_cast<std::size_t>(matching_size_));
  if (certify_) oracle_->push_accept(admitted_state_, e.key);

  refresh_matching_marginals();
  return PreemptiveDecision::admitted;
}

PreemptiveRecord PreemptiveRun::finish() {
  if (!done()) throw DomainError("stream not fully consumed");
  for (const AdmittedEdge& a : record_.admitted)
    if (a.alive) record_.matching.push_back(a.edge_idx);
  std::sort(record_.matching.begin(), record_.matching.end());

  std::vector<Key> keys;
  keys.reserve(record_.matching.size());
  for (int idx : record_.matching) keys.push_back(inst_->edge(idx).key);
  record_.f_matching = oracle_->eval(keys);
  record_.f_admitted = certify_ ? admitted_state_.value() : 0.0;
  record_.oracle_queries = oracle_->value_queries() - queries_at_start_;
  return std::move(record_);
}

PreemptiveRecord run_preemptive(const Instance& inst, const SubmodularOracle& oracle,
                                const PreemptiveParams& params, bool certify) {
  PreemptiveRun run(inst, oracle, params, certify);
  while (!run.done()) run.step();
  return run.finish();
}

}  // namespace msbm
