#include "msbm/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "json.hpp"

namespace msbm {

double DualCertificate::dual_cost(const Instance& inst) const {
  double sum = mu;
  for (const auto& [v, p] : phi) sum += inst.capacity(v) * p;
  return sum;
}

DualCertificate build_dual(const Instance& inst, const RunRecord& run,
                           const SubmodularOracle& oracle) {
  if (!run.certify)
    throw DomainError("build_dual needs a certify-mode run record");
  (void)oracle;
  DualCertificate cert;
  cert.mode = DualCertificate::Mode::stack;
  cert.C = run.params.C;
  cert.mu = run.f_stack;
  for (const auto& [v, p] : run.potentials) cert.phi[v] = cert.C * p;
  cert.lambda.assign(static_cast<std::size_t>(inst.num_edges()), 0.0);
  for (const SkippedEntry& s : run.skipped)
    cert.lambda[static_cast<std::size_t>(s.edge_idx)] = s.marginal;
  cert.stack_keys = run.stack_keys(inst);
  return cert;
}

DualCertificate build_dual(const Instance& inst, const PreemptiveRecord& run,
                           const SubmodularOracle& oracle) {
  if (!run.certify)
    throw DomainError("build_dual needs a certify-mode run record");
  (void)oracle;
  DualCertificate cert;
  cert.mode = DualCertificate::Mode::preemptive;
  cert.C = run.params.C;
  cert.mu = run.f_admitted;
  for (const auto& [v, p] : run.phi) cert.phi[v] = cert.C * p;
  cert.lambda.assign(static_cast<std::size_t>(inst.num_edges()), 0.0);
  for (const SkippedEntry& s : run.skipped)
    cert.lambda[static_cast<std::size_t>(s.edge_idx)] = s.marginal;
  for (const AdmittedEdge& a : run.admitted)
    cert.stack_keys.push_back(inst.edge(a.edge_idx).key);
  return cert;
}

DualCertificate build_linear_dual(const Instance& inst,
                                  const std::vector<StackEntry>& stack,
                                  const std::unordered_map<VertexId, double>& potentials,
                                  const std::vector<double>& weights, double eps) {
  if (static_cast<int>(weights.size()) != inst.num_edges())
    throw DomainError("weight vector length does not match edge count");
  DualCertificate cert;
  cert.mode = DualCertificate::Mode::linear;
  cert.C = 1.0 + eps / 2.0;
  cert.mu = 0.0;
  for (const auto& [v, p] : potentials) cert.phi[v] = cert.C * p;
  cert.lambda = weights;
  for (const StackEntry& s : stack)
    cert.stack_keys.push_back(inst.edge(s.edge_idx).key);
  return cert;
}

FeasibilityReport check_feasibility(const DualCertificate& cert, const Instance& inst,
                                    const SubmodularOracle& oracle, SubsetMode mode,
                                    int exhaustive_limit) {
  FeasibilityReport report;
  report.edge_constraints.reserve(static_cast<std::size_t>(inst.num_edges()));
  for (int i = 0; i < inst.num_edges(); ++i) {
    const Edge& e = inst.edge(i);
    double lhs = cert.phi_of(e.u) + cert.phi_of(e.v);
    double rhs = cert.lambda[static_cast<std::size_t>(i)];
    bool pass = lhs >= rhs - kValueTol;
    if (!pass) ++report.violations;
    report.edge_constraints.push_back({i, lhs, rhs, pass});
  }

  double f_S = oracle.eval(cert.stack_keys);
  std::unordered_set<Key> stack_set(cert.stack_keys.begin(), cert.stack_keys.end());

  if (mode == SubsetMode::exhaustive) {
    int m = inst.num_edges();
    if (m > exhaustive_limit)
      throw TooLargeError("exhaustive subset check limited to " +
                          std::to_string(exhaustive_limit) + " edges, instance has " +
                          std::to_string(m));
    report.subset.mode = "exhaustive";
    double worst = std::numeric_limits<double>::infinity();
    std::vector<Key> keys;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
      keys.assign(cert.stack_keys.begin(), cert.stack_keys.end());
      double lambda_sum = 0.0;
      for (int i = 0; i < m; ++i) {
        if (mask & (std::uint64_t{1} << i)) {
          keys.push_back(inst.edge(i).key);
          lambda_sum += cert.lambda[static_cast<std::size_t>(i)];
        }
      }
      double lhs = cert.mu + lambda_sum;
      double rhs = oracle.eval(keys);  // g^S(T) = f(S ∪ T)
      if (lhs - rhs < worst) {
        worst = lhs - rhs;
        report.subset.lhs = lhs;
        report.subset.rhs = rhs;
        report.subset.witness_edges.clear();
        for (int i = 0; i < m; ++i)
          if (mask & (std::uint64_t{1} << i)) report.subset.witness_edges.push_back(i);
      }
      if (lhs < rhs - kValueTol) report.subset.pass = false;
    }
  } else {
    // Proof route: λ_e ≥ f_S(e) for every e ∉ S implies every subset
    // constraint via telescoping.
    report.subset.mode = "sufficient";
    double worst = std::numeric_limits<double>::infinity();
    std::vector<Key> keys;
    for (int i = 0; i < inst.num_edges(); ++i) {
      Key k = inst.edge(i).key;
      if (stack_set.count(k)) continue;
      keys.assign(cert.stack_keys.begin(), cert.stack_keys.end());
      keys.push_back(k);
      double marginal = oracle.eval(keys) - f_S;  // f_S(e)
      double lambda = cert.lambda[static_cast<std::size_t>(i)];
      if (lambda - marginal < worst) {
        worst = lambda - marginal;
        report.subset.lhs = lambda;
        report.subset.rhs = marginal;
        report.subset.witness_edges.assign(1, i);
      }
      if (lambda < marginal - kValueTol) report.subset.pass = false;
    }
  }
  return report;
}

bool RatioReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const RatioVerdict& v) { return v.pass; });
}

const RatioVerdict* RatioReport::find(const std::string& name) const {
  for (const RatioVerdict& v : checks)
    if (v.name == name) return &v;
  return nullptr;
}

RatioReport check_ratios(const Instance& inst, const RunRecord& run,
                         const DualCertificate& cert) {
  const double C = run.params.C;
  RatioReport report;
  report.combined_factor = stack_bound(C);

  double sum_bw = 0.0;  // Σ_{e∈S} Σ_{v∈e} b_v·w_ev = 2·Σ surplus
  for (const StackEntry& s : run.stack) {
    const Edge& e = inst.edge(s.edge_idx);
    sum_bw += inst.capacity(e.u) * s.w_u + inst.capacity(e.v) * s.w_v;
  }
  double sum_bphi = 0.0;  // Σ_v b_v·φ_v (dual values)
  for (const auto& [v, p] : cert.phi) sum_bphi += inst.capacity(v) * p;

  double fM = run.f_matching;
  auto push = [&](const std::string& name, double lhs, double rhs) {
    report.checks.push_back({name, lhs, rhs, lhs >= rhs - kValueTol});
  };
  push("lemma_half_sum", fM, 0.5 * sum_bw);
  push("lemma_phi", fM, sum_bphi / (2.0 * C));
  if (run.params.q == 1.0) push("lemma_mu", fM, (1.0 - 1.0 / C) * cert.mu);
  push("combined", report.combined_factor * fM, sum_bphi + cert.mu);
  return report;
}

RatioReport check_ratios(const Instance& inst, const PreemptiveRecord& run,
                         const DualCertificate& cert, const SubmodularOracle& oracle) {
  (void)inst;  // b ≡ 1 in this mode
  const double C = run.params.C;
  RatioReport report;
  report.combined_factor = preemptive_bound(C);

  double wM = run.matched_weight();
  double wP = run.preempted_weight();
  double fM = run.f_matching;
  double sum_phi = 0.0;
  for (const auto& [v, p] : cert.phi) sum_phi += p;  // b ≡ 1

  auto push = [&](const std::string& name, double lhs, double rhs) {
    report.checks.push_back({name, lhs, rhs, lhs >= rhs - kValueTol});
  };
  // Observation: f(M) = f(∅) + Σ_{e∈M} f(e:M); equality both ways.
  double lhs_obs = fM - oracle.f_empty();
  report.checks.push_back(
      {"observation_weight", lhs_obs, wM, std::abs(lhs_obs - wM) <= kValueTol});
  if (run.params.q == 1.0) {
    push("lemma_preempted_weight", wM / (C - 1.0), wP);
    push("lemma_mu", fM, (1.0 - 1.0 / C) * cert.mu);
  }
  push("lemma_phi", fM, sum_phi / (2.0 * C + C / (C - 1.0)));
  push("combined", report.combined_factor * fM, sum_phi + cert.mu);

  // Admission chain: each admitted edge beat C times what it evicted.
  bool chain_ok = true;
  double worst_lhs = 0.0, worst_rhs = 0.0;
  std::unordered_map<int, const AdmittedEdge*> by_idx;
  for (const AdmittedEdge& a : run.admitted) by_idx[a.edge_idx] = &a;
  for (const AdmittedEdge& a : run.admitted) {
    double evicted_sum = 0.0;
    for (int idx : a.evicted) evicted_sum += by_idx.at(idx)->weight;
    // the admitted edge's weight only grows after admission
    if (a.weight < C * evicted_sum - kValueTol) {
      chain_ok = false;
      worst_lhs = a.weight;
      worst_rhs = C * evicted_sum;
    }
  }
  report.checks.push_back({"admission_chain", worst_lhs, worst_rhs, chain_ok});
  return report;
}

namespace {

struct OptSearch {
  const Instance& inst;
  const SubmodularOracle& oracle;
  std::vector<double> singleton_gain{};  // max(0, f({e}) − f(∅)) per edge
  std::vector<double> suffix_gain{};
  std::vector<int> degree{};
  std::vector<int> chosen{};
  std::vector<int> best{};
  double best_value = -std::numeric_limits<double>::infinity();

  void dfs(int pos, StreamState state) {
    if (state.value() > best_value) {
      best_value = state.value();
      best = chosen;
    }
    if (pos == inst.num_edges()) return;
    if (state.value() + suffix_gain[static_cast<std::size_t>(pos)] <= best_value) return;
    const Edge& e = inst.edge(pos);
    if (degree[static_cast<std::size_t>(e.u)] < inst.capacity(e.u) &&
        degree[static_cast<std::size_t>(e.v)] < inst.capacity(e.v)) {
      ++degree[static_cast<std::size_t>(e.u)];
      ++degree[static_cast<std::size_t>(e.v)];
      chosen.push_back(pos);
      StreamState next = state;
      double m = oracle.stream_marginal(next, e.key);
      oracle.push_accept(next, e.key, m);
      dfs(pos + 1, std::move(next));
      chosen.pop_back();
      --degree[static_cast<std::size_t>(e.u)];
      --degree[static_cast<std::size_t>(e.v)];
    }
    dfs(pos + 1, std::move(state));
  }
};

}  // namespace

OptResult brute_force_opt(const Instance& inst, const SubmodularOracle& oracle, int limit) {
  if (inst.num_edges() > limit)
    throw TooLargeError("brute_force_opt limited to " + std::to_string(limit) +
                        " edges, instance has " + std::to_string(inst.num_edges()));
  OptSearch search{inst, oracle};
  search.singleton_gain.reserve(static_cast<std::size_t>(inst.num_edges()));
  for (const Edge& e : inst.edges())
    search.singleton_gain.push_back(
        std::max(0.0, oracle.eval({e.key}) - oracle.f_empty()));
  search.suffix_gain.assign(static_cast<std::size_t>(inst.num_edges()) + 1, 0.0);
  for (std::size_t i = search.singleton_gain.size(); i-- > 0;)
    search.suffix_gain[i] = search.suffix_gain[i + 1] + search.singleton_gain[i];
  search.degree.assign(static_cast<std::size_t>(inst.num_vertices()), 0);
  search.dfs(0, oracle.make_state());
  return OptResult{std::move(search.best), search.best_value};
}

int greedy_maximal_size(const Instance& inst) {
  std::vector<int> degree(static_cast<std::size_t>(inst.num_vertices()), 0);
  int size = 0;
  for (const Edge& e : inst.edges()) {
    if (degree[static_cast<std::size_t>(e.u)] < inst.capacity(e.u) &&
        degree[static_cast<std::size_t>(e.v)] < inst.capacity(e.v)) {
      ++degree[static_cast<std::size_t>(e.u)];
      ++degree[static_cast<std::size_t>(e.v)];
      ++size;
    }
  }
  return size;
}

McReport mc_expected_feasibility(const Instance& inst, const SubmodularOracle& oracle,
                                 double C, double q, int trials, std::uint64_t seed) {
  if (trials < 1) throw DomainError("mc_expected_feasibility needs trials >= 1");
  McReport report;
  report.trials = trials;
  report.q_in_lemma_range = q >= 1.0 / (2.0 * C + 1.0) - kValueTol && q <= 0.5 + kValueTol;

  const int m = inst.num_edges();
  std::vector<KahanSum> phi_sum(static_cast<std::size_t>(m)), phi_sq(static_cast<std::size_t>(m));
  std::vector<KahanSum> lam_sum(static_cast<std::size_t>(m)), lam_sq(static_cast<std::size_t>(m));

  AlgoParams params;
  params.C = C;
  params.q = q;
  for (int t = 0; t < trials; ++t) {
    params.seed = derive_seed(seed, static_cast<std::uint64_t>(t));
    RunRecord run = run_msbm(inst, oracle, params, /*certify=*/true);
    std::vector<double> lambda(static_cast<std::size_t>(m), 0.0);
    for (const SkippedEntry& s : run.skipped)
      lambda[static_cast<std::size_t>(s.edge_idx)] = s.marginal;
    for (int i = 0; i < m; ++i) {
      const Edge& e = inst.edge(i);
      double phi = C * (run.potential(e.u) + run.potential(e.v));
      phi_sum[static_cast<std::size_t>(i)].add(phi);
      phi_sq[static_cast<std::size_t>(i)].add(phi * phi);
      lam_sum[static_cast<std::size_t>(i)].add(lambda[static_cast<std::size_t>(i)]);
      lam_sq[static_cast<std::size_t>(i)].add(lambda[static_cast<std::size_t>(i)] *
                                              lambda[static_cast<std::size_t>(i)]);
    }
  }

  auto standard_error = [&](const KahanSum& sum, const KahanSum& sq) {
    double n = trials;
    double mean = sum.value() / n;
    double var = std::max(0.0, sq.value() / n - mean * mean);
    return n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
  };

  for (int i = 0; i < m; ++i) {
    McEdgeStat stat;
    stat.edge_idx = i;
    stat.mean_phi = phi_sum[static_cast<std::size_t>(i)].value() / trials;
    stat.se_phi = standard_error(phi_sum[static_cast<std::size_t>(i)],
                                 phi_sq[static_cast<std::size_t>(i)]);
    stat.mean_lambda = lam_sum[static_cast<std::size_t>(i)].value() / trials;
    stat.se_lambda = standard_error(lam_sum[static_cast<std::size_t>(i)],
                                    lam_sq[static_cast<std::size_t>(i)]);
    double band = 3.0 * std::sqrt(stat.se_phi * stat.se_phi + stat.se_lambda * stat.se_lambda);
    stat.flagged = stat.mean_phi < stat.mean_lambda - band - kValueTol;
    if (stat.flagged) ++report.flagged_count;
    report.edges.push_back(stat);
  }
  return report;
}

SubsampleReport subsample_lemma_check(const SubmodularOracle& oracle,
                                      std::span<const Key> base,
                                      std::span<const Key> anchor, double q, int trials,
                                      std::uint64_t seed) {
  if (trials < 1) throw DomainError("subsample_lemma_check needs trials >= 1");
  if (q < 0.0 || q > 1.0) throw DomainError("inclusion probability must be in [0,1]");
  SubsampleReport report;
  report.trials = trials;
  report.h_empty = oracle.eval(anchor);

  KahanSum sum, sq;
  std::vector<Key> keys;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    keys.assign(anchor.begin(), anchor.end());
    for (Key k : base)
      if (rng.bernoulli(q)) keys.push_back(k);
    double h = oracle.eval(keys);
    sum.add(h);
    sq.add(h * h);
  }
  report.mean = sum.value() / trials;
  double var = std::max(0.0, sq.value() / trials - report.mean * report.mean);
  report.se = trials > 1 ? std::sqrt(var / (trials - 1)) : 0.0;
  report.threshold = (1.0 - q) * report.h_empty - 3.0 * report.se;
  report.pass = report.mean >= report.threshold - kValueTol;
  return report;
}

std::string feasibility_report_json(const FeasibilityReport& report) {
  nlohmann::ordered_json j;
  j["edge_constraints"] = nlohmann::ordered_json::array();
  for (const ConstraintVerdict& v : report.edge_constraints)
    j["edge_constraints"].push_back(
        {{"edge", v.edge_idx}, {"lhs", v.lhs}, {"rhs", v.rhs}, {"pass", v.pass}});
  j["subset"] = {{"mode", report.subset.mode},
                 {"lhs", report.subset.lhs},
                 {"rhs", report.subset.rhs},
                 {"witness_edges", report.subset.witness_edges},
                 {"pass", report.subset.pass}};
  j["violations"] = report.violations;
  j["pass"] = report.all_pass();
  return j.dump();
}

std::string ratio_report_json(const RatioReport& report, double f_matching,
                              double dual_cost) {
  nlohmann::ordered_json j;
  j["factor"] = report.combined_factor;
  j["f_M"] = f_matching;
  j["dual_cost"] = dual_cost;
  j["pass"] = report.all_pass();
  j["checks"] = nlohmann::ordered_json::array();
  for (const RatioVerdict& v : report.checks)
    j["checks"].push_back(
        {{"name", v.name}, {"lhs", v.lhs}, {"rhs", v.rhs}, {"pass", v.pass}});
  return j.dump();
}

std::string opt_result_json(const OptResult& opt) {
  nlohmann::ordered_json j;
  j["value"] = opt.value;
  j["edges"] = opt.edges;
  return j.dump();
}

}  // namespace msbm
