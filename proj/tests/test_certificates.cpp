#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "json.hpp"
#include "msbm/certificates.hpp"
#include "msbm/generators.hpp"
#include "msbm/mwbm.hpp"

using namespace msbm;

namespace {

GeneratedPair random_pair(RandomSpec::Family family, std::uint64_t seed, int edges = 10,
                          int max_capacity = 1) {
  RandomSpec spec;
  spec.family = family;
  spec.num_vertices = 7;
  spec.num_edges = edges;
  spec.universe = 10;
  spec.max_capacity = max_capacity;
  spec.seed = seed;
  return gen_random(spec);
}

}  // namespace

TEST_CASE("build_dual on degenerate and single-edge runs") {
  SUBCASE("empty run") {
    Instance inst(2, {1, 1}, {});
    LinearOracle oracle({{0, 1.0}});
    RunRecord run = run_msbm(inst, oracle, monotone_preset(), true);
    DualCertificate cert = build_dual(inst, run, oracle);
    CHECK(cert.mu == 0.0);
    CHECK(cert.phi.empty());
    CHECK(cert.lambda.empty());
  }
  SUBCASE("single pushed edge, C = 2") {
    Instance inst(2, {1, 1}, {Edge{0, 1, 0}});
    LinearOracle oracle({{0, 5.0}});
    AlgoParams p;
    p.C = 2.0;
    RunRecord run = run_msbm(inst, oracle, p, true);
    DualCertificate cert = build_dual(inst, run, oracle);
    CHECK(cert.mu == doctest::Approx(5.0));
    CHECK(cert.phi_of(0) == doctest::Approx(10.0));
    CHECK(cert.phi_of(1) == doctest::Approx(10.0));
    CHECK(cert.lambda[0] == 0.0);
    CHECK(cert.dual_cost(inst) == doctest::Approx(25.0));
  }
  SUBCASE("streaming-mode records are rejected") {
    Instance inst(2, {1, 1}, {Edge{0, 1, 0}});
    LinearOracle oracle({{0, 5.0}});
    RunRecord run = run_msbm(inst, oracle, monotone_preset(), false);
    CHECK_THROWS_AS(build_dual(inst, run, oracle), DomainError);
  }
}

TEST_CASE("tight-instance dual: skipped e_2 is covered") {
  TightFamily fam = make_tight_oracle(2.0, 3, 0.1, 0.01);
  AlgoParams p;
  p.C = 2.0;
  RunRecord run = run_msbm(fam.instance, *fam.oracle, p, true);
  DualCertificate cert = build_dual(fam.instance, run, *fam.oracle);
  // e_2 is edge index 5 with endpoints x_2 = 2, y_2 = 7
  CHECK(cert.lambda[5] == doctest::Approx(1.89));
  CHECK(cert.phi_of(2) == doctest::Approx(2.02));
  CHECK(cert.phi_of(2) >= cert.lambda[5]);
  FeasibilityReport feas =
      check_feasibility(cert, fam.instance, *fam.oracle, SubsetMode::exhaustive);
  CHECK(feas.all_pass());
  CHECK(feas.violations == 0);
}

TEST_CASE("subset constraint at T = ∅ is tight") {
  GeneratedPair pair = random_pair(RandomSpec::Family::coverage, 3);
  RunRecord run = run_msbm(pair.instance, *pair.oracle, monotone_preset(), true);
  DualCertificate cert = build_dual(pair.instance, run, *pair.oracle);
  CHECK(cert.mu == doctest::Approx(pair.oracle->eval(cert.stack_keys)));  // μ = f(S) = g^S(∅)
}

TEST_CASE("exhaustive subset check on a 3-edge instance") {
  Instance inst(4, {1, 1, 1, 1}, {Edge{0, 1, 0}, Edge{1, 2, 1}, Edge{2, 3, 2}});
  CoverageOracle oracle(4, {}, {{0, {0, 1}}, {1, {1, 2}}, {2, {2, 3}}});
  RunRecord run = run_msbm(inst, oracle, monotone_preset(), true);
  DualCertificate cert = build_dual(inst, run, oracle);
  FeasibilityReport feas = check_feasibility(cert, inst, oracle, SubsetMode::exhaustive);
  CHECK(feas.subset.mode == "exhaustive");
  CHECK(feas.all_pass());
  // independent enumeration of all 2^3 subset constraints
  for (std::uint32_t mask = 0; mask < 8; ++mask) {
    std::vector<Key> keys = cert.stack_keys;
    double lam = 0.0;
    for (int i = 0; i < 3; ++i)
      if (mask & (1u << i)) {
        keys.push_back(inst.edge(i).key);
        lam += cert.lambda[static_cast<std::size_t>(i)];
      }
    CHECK(cert.mu + lam >= oracle.eval(keys) - kValueTol);
  }
}

TEST_CASE("feasibility holds on every q=1 run; modes agree") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    auto family = seed % 3 == 0 ? RandomSpec::Family::linear
                  : seed % 3 == 1 ? RandomSpec::Family::coverage
                                  : RandomSpec::Family::covlin;
    GeneratedPair pair = random_pair(family, seed, 11, seed % 2 == 0 ? 1 : 3);
    AlgoParams p = pair.oracle->monotone() ? monotone_preset() : nonmonotone_preset();
    p.q = 1.0;  // exact dual feasibility needs the deterministic run
    RunRecord run = run_msbm(pair.instance, *pair.oracle, p, true);
    DualCertificate cert = build_dual(pair.instance, run, *pair.oracle);
    FeasibilityReport ex =
        check_feasibility(cert, pair.instance, *pair.oracle, SubsetMode::exhaustive);
    FeasibilityReport su =
        check_feasibility(cert, pair.instance, *pair.oracle, SubsetMode::sufficient);
    CHECK(ex.all_pass());
    CHECK(su.all_pass());
  }
}

TEST_CASE("ratio factors at the preset parameters") {
  CHECK(stack_bound(1.0 + 1.0 / std::sqrt(2.0)) ==
        doctest::Approx(3.0 + 2.0 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(stack_bound(2.0) == doctest::Approx(6.0));
  CHECK(preemptive_bound(2.0) == doctest::Approx(8.0));
}

TEST_CASE("ratio lemmas hold on every stack run, including q < 1") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto family = seed % 3 == 0 ? RandomSpec::Family::linear
                  : seed % 3 == 1 ? RandomSpec::Family::coverage
                                  : RandomSpec::Family::covlin;
    GeneratedPair pair = random_pair(family, seed + 500, 12, seed % 2 == 0 ? 1 : 2);
    for (double q : {1.0, 0.5, 0.2113248654051871}) {
      AlgoParams p;
      p.C = (seed % 2 == 0) ? monotone_preset().C : 1.8660254037844386;
      p.q = q;
      p.seed = seed;
      RunRecord run = run_msbm(pair.instance, *pair.oracle, p, true);
      DualCertificate cert = build_dual(pair.instance, run, *pair.oracle);
      RatioReport ratios = check_ratios(pair.instance, run, cert);
      CHECK(ratios.all_pass());
      if (q == 1.0) CHECK(ratios.find("lemma_mu") != nullptr);
    }
  }
}

TEST_CASE("preemptive ratio lemmas hold and the dual is feasible") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto family = seed % 2 == 0 ? RandomSpec::Family::coverage : RandomSpec::Family::covlin;
    GeneratedPair pair = random_pair(family, seed + 900, 12);
    PreemptiveParams p = preemptive_monotone_preset();
    PreemptiveRecord run = run_preemptive(pair.instance, *pair.oracle, p, true);
    DualCertificate cert = build_dual(pair.instance, run, *pair.oracle);
    RatioReport ratios = check_ratios(pair.instance, run, cert, *pair.oracle);
    CHECK(ratios.all_pass());
    CHECK(ratios.combined_factor == doctest::Approx(8.0));
    FeasibilityReport feas =
        check_feasibility(cert, pair.instance, *pair.oracle, SubsetMode::exhaustive);
    CHECK(feas.all_pass());
  }
}

TEST_CASE("brute_force_opt") {
  SUBCASE("tight instance optimum takes every e_i") {
    TightFamily fam = make_tight_oracle(2.0, 3, 0.1, 0.0);
    OptResult opt = brute_force_opt(fam.instance, *fam.oracle, 22);
    CHECK(opt.value == doctest::Approx(22.6));
    CHECK(opt.edges == std::vector<int>{3, 4, 5, 6});  // e_0, e_1, e_2, e_3
  }
  SUBCASE("single edge") {
    Instance inst(2, {1, 1}, {Edge{0, 1, 0}});
    LinearOracle oracle({{0, 4.0}});
    OptResult opt = brute_force_opt(inst, oracle);
    CHECK(opt.edges == std::vector<int>{0});
    CHECK(opt.value == doctest::Approx(4.0));
  }
  SUBCASE("linear triangle") {
    Instance inst(3, {1, 1, 1}, {Edge{0, 1, 0}, Edge{1, 2, 1}, Edge{0, 2, 2}});
    LinearOracle oracle({{0, 3.0}, {1, 4.0}, {2, 5.0}});
    CHECK(brute_force_opt(inst, oracle).value == doctest::Approx(5.0));
  }
  SUBCASE("limit enforcement") {
    TightFamily fam = make_tight_oracle(2.0, 12, 0.1, 0.0);
    CHECK_THROWS_AS(brute_force_opt(fam.instance, *fam.oracle, 22), TooLargeError);
    CHECK(brute_force_opt(fam.instance, *fam.oracle, 25).value > 0.0);  // explicit limit
  }
  SUBCASE("value is invariant under vertex relabeling and arrival permutation") {
    // same coverage structure, relabeled vertices and shuffled arrivals
    CoverageOracle oracle(4, {2, 1, 1, 3}, {{0, {0, 1}}, {1, {1, 2}}, {2, {2, 3}}, {3, {0, 3}}});
    Instance base(5, {1, 1, 1, 2, 1},
                  {Edge{0, 1, 0}, Edge{1, 2, 1}, Edge{2, 3, 2}, Edge{3, 4, 3}});
    // relabel v ↦ 4−v, reverse arrivals, keep keys
    Instance relabeled(5, {1, 2, 1, 1, 1},
                       {Edge{1, 0, 3}, Edge{2, 1, 2}, Edge{3, 2, 1}, Edge{4, 3, 0}});
    CHECK(brute_force_opt(base, oracle).value ==
          doctest::Approx(brute_force_opt(relabeled, oracle).value));
  }
}

TEST_CASE("tight run ratio stays within the stack bound") {
  TightFamily fam = make_tight_oracle(2.0, 3, 0.1, 0.01);
  AlgoParams p;
  p.C = 2.0;
  RunRecord run = run_msbm(fam.instance, *fam.oracle, p, true);
  CHECK(run.f_matching == doctest::Approx(2.01 * 2.01));
  OptResult opt = brute_force_opt(fam.instance, *fam.oracle);
  CHECK(opt.value == doctest::Approx(22.6));
  double ratio = opt.value / run.f_matching;
  CHECK(ratio == doctest::Approx(5.594).epsilon(1e-3));
  CHECK(ratio <= stack_bound(2.0));
}

TEST_CASE("weak-duality sandwich on monotone q=1 runs") {
  for (std::uint64_t seed = 40; seed < 55; ++seed) {
    GeneratedPair pair = random_pair(RandomSpec::Family::coverage, seed, 10);
    RunRecord run = run_msbm(pair.instance, *pair.oracle, monotone_preset(), true);
    DualCertificate cert = build_dual(pair.instance, run, *pair.oracle);
    OptResult opt = brute_force_opt(pair.instance, *pair.oracle);
    std::vector<Key> both = cert.stack_keys;
    for (int idx : opt.edges) both.push_back(pair.instance.edge(idx).key);
    double f_union = pair.oracle->eval(both);
    CHECK(cert.dual_cost(pair.instance) >= f_union - kValueTol);
    CHECK(f_union >= opt.value - kValueTol);
    // and the combined ratio chain reaches f(OPT)
    CHECK(stack_bound(run.params.C) * run.f_matching >= opt.value - kValueTol);
  }
}

TEST_CASE("mc_expected_feasibility") {
  SUBCASE("q = 1 degenerates to the exact per-edge check") {
    GeneratedPair pair = random_pair(RandomSpec::Family::coverage, 8);
    McReport mc = mc_expected_feasibility(pair.instance, *pair.oracle, 2.0, 1.0, 5, 1);
    CHECK(mc.flagged_count == 0);
    for (const McEdgeStat& s : mc.edges) {
      CHECK(s.se_phi == doctest::Approx(0.0));
      CHECK(s.se_lambda == doctest::Approx(0.0));
      CHECK(s.mean_phi >= s.mean_lambda - kValueTol);
    }
    CHECK_FALSE(mc.q_in_lemma_range);  // 1 > 1/2: outside the lemma hypothesis
  }
  SUBCASE("nonmonotone preset flags nothing") {
    GeneratedPair pair = random_pair(RandomSpec::Family::covlin, 12, 8);
    AlgoParams p = nonmonotone_preset();
    McReport mc =
        mc_expected_feasibility(pair.instance, *pair.oracle, p.C, p.q, 3000, 7);
    CHECK(mc.q_in_lemma_range);
    CHECK(mc.flagged_count == 0);
  }
  SUBCASE("a deterministically skipped edge has constant λ") {
    // the second edge covers nothing, so its marginal is 0 in every
    // realization and the skip test always triggers
    Instance inst(3, {1, 1, 1}, {Edge{0, 1, 0}, Edge{1, 2, 1}});
    CoverageOracle oracle(1, {}, {{0, {0}}, {1, {}}});
    McReport mc = mc_expected_feasibility(inst, oracle, 2.0, 0.25, 400, 3);
    const McEdgeStat& s = mc.edges[1];
    CHECK(s.mean_lambda == doctest::Approx(0.0));
    CHECK(s.se_lambda == doctest::Approx(0.0));
    CHECK_FALSE(s.flagged);
  }
}

TEST_CASE("linear-mode dual certificate") {
  RandomSpec spec;
  spec.family = RandomSpec::Family::linear;
  spec.num_vertices = 7;
  spec.num_edges = 12;
  spec.max_capacity = 2;
  spec.seed = 33;
  GeneratedPair pair = gen_random(spec);
  auto* linear = dynamic_cast<const LinearOracle*>(pair.oracle.get());
  std::vector<double> w;
  for (const Edge& e : pair.instance.edges()) w.push_back(linear->weight(e.key));
  double eps = 0.5;
  WeightedStack ws = run_stack_phase(pair.instance, w, eps);
  DualCertificate cert =
      build_linear_dual(pair.instance, ws.stack, ws.potentials, w, eps);
  CHECK(cert.mode == DualCertificate::Mode::linear);
  CHECK(cert.mu == 0.0);
  CHECK(cert.lambda == w);
  // covered off the stack; with b ≤ 2 the in-stack edges are covered too
  for (int i = 0; i < pair.instance.num_edges(); ++i) {
    const Edge& e = pair.instance.edge(i);
    CHECK(cert.phi_of(e.u) + cert.phi_of(e.v) >=
          cert.lambda[static_cast<std::size_t>(i)] - kValueTol);
  }
  CHECK(cert.dual_cost(pair.instance) > 0.0);
}

TEST_CASE("certificate report serialization") {
  GeneratedPair pair = random_pair(RandomSpec::Family::coverage, 14, 8);
  RunRecord run = run_msbm(pair.instance, *pair.oracle, monotone_preset(), true);
  DualCertificate cert = build_dual(pair.instance, run, *pair.oracle);
  FeasibilityReport feas =
      check_feasibility(cert, pair.instance, *pair.oracle, SubsetMode::exhaustive);
  RatioReport ratios = check_ratios(pair.instance, run, cert);
  OptResult opt = brute_force_opt(pair.instance, *pair.oracle);

  nlohmann::json fj = nlohmann::json::parse(feasibility_report_json(feas));
  REQUIRE(fj["edge_constraints"].is_array());
  CHECK(fj["edge_constraints"].size() == static_cast<std::size_t>(pair.instance.num_edges()));
  for (const auto& entry : fj["edge_constraints"]) {
    CHECK(entry.contains("edge"));
    CHECK(entry.contains("lhs"));
    CHECK(entry.contains("rhs"));
    CHECK(entry.contains("pass"));
  }
  CHECK(fj["pass"] == true);

  nlohmann::json rj =
      nlohmann::json::parse(ratio_report_json(ratios, run.f_matching, cert.dual_cost(pair.instance)));
  CHECK(rj.contains("factor"));
  CHECK(rj.contains("f_M"));
  CHECK(rj.contains("dual_cost"));
  CHECK(rj.contains("pass"));
  CHECK(rj["f_M"].get<double>() == doctest::Approx(run.f_matching));

  nlohmann::json oj = nlohmann::json::parse(opt_result_json(opt));
  CHECK(oj.contains("value"));
  CHECK(oj["edges"].is_array());
}

TEST_CASE("subsample_lemma_check") {
  SUBCASE("q = 0 returns h(∅) exactly") {
    GeneratedPair pair = random_pair(RandomSpec::Family::covlin, 4, 8);
    OptResult opt = brute_force_opt(pair.instance, *pair.oracle);
    std::vector<Key> anchor;
    for (int idx : opt.edges) anchor.push_back(pair.instance.edge(idx).key);
    SubsampleReport rep =
        subsample_lemma_check(*pair.oracle, pair.oracle->keys(), anchor, 0.0, 50, 11);
    CHECK(rep.mean == doctest::Approx(rep.h_empty));
    CHECK(rep.se == doctest::Approx(0.0));
    CHECK(rep.pass);
  }
  SUBCASE("monotone oracles always pass") {
    GeneratedPair pair = random_pair(RandomSpec::Family::coverage, 5, 8);
    for (double q : {0.25, 0.5, 0.9}) {
      SubsampleReport rep =
          subsample_lemma_check(*pair.oracle, pair.oracle->keys(), {}, q, 300, 13);
      CHECK(rep.pass);  // h(B) ≥ h(∅) pointwise under monotonicity
    }
  }
  SUBCASE("covlin at q = 0.25") {
    GeneratedPair pair = random_pair(RandomSpec::Family::covlin, 6, 9);
    OptResult opt = brute_force_opt(pair.instance, *pair.oracle);
    std::vector<Key> anchor;
    for (int idx : opt.edges) anchor.push_back(pair.instance.edge(idx).key);
    SubsampleReport rep =
        subsample_lemma_check(*pair.oracle, pair.oracle->keys(), anchor, 0.25, 2000, 17);
    CHECK(rep.pass);
  }
}
