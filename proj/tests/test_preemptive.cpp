#include <cmath>

#include "doctest.h"
#include "msbm/generators.hpp"
#include "msbm/preemptive.hpp"

using namespace msbm;

TEST_CASE("preemptive presets and bounds") {
  PreemptiveParams mono = preemptive_monotone_preset();
  CHECK(mono.C == 2.0);
  CHECK(mono.q == 1.0);
  CHECK(preemptive_bound(2.0) == doctest::Approx(8.0));

  PreemptiveParams nm = preemptive_nonmonotone_preset();
  CHECK(nm.C == doctest::Approx(1.0 + std::sqrt(6.0) / 2.0).epsilon(1e-12));
  CHECK(nm.q == doctest::Approx(1.0 / (3.0 + std::sqrt(6.0))).epsilon(1e-12));
  CHECK(randomized_preemptive_bound(nm.C) ==
        doctest::Approx(5.0 + 2.0 * std::sqrt(6.0)).epsilon(1e-12));
  CHECK(randomized_preemptive_bound(nm.C) == doctest::Approx(9.8989794856));

  // 1+√6/2 minimizes (2C²+C)/(C−1); the 1+√3/2 value from the randomized
  // stack preset is strictly worse here.
  CHECK(randomized_preemptive_bound(1.0 + std::sqrt(3.0) / 2.0) >
        randomized_preemptive_bound(nm.C) + 0.25);
  for (double dC = -0.2; dC <= 0.2001; dC += 0.01)
    CHECK(randomized_preemptive_bound(nm.C + dC) >=
          randomized_preemptive_bound(nm.C) - kValueTol);
}

TEST_CASE("first edge is admitted") {
  Instance inst(2, {1, 1}, {Edge{0, 1, 0}});
  LinearOracle oracle({{0, 5.0}});
  PreemptiveRecord run = run_preemptive(inst, oracle, preemptive_monotone_preset(), true);
  CHECK(run.matching == std::vector<int>{0});
  CHECK(run.f_matching == doctest::Approx(5.0));
  CHECK(run.admitted.size() == 1);
  CHECK(run.admitted[0].evicted.empty());
}

TEST_CASE("empty stream returns the empty matching") {
  Instance inst(3, {1, 1, 1}, {});
  LinearOracle oracle({{0, 1.0}});
  PreemptiveRecord run = run_preemptive(inst, oracle, preemptive_monotone_preset(), false);
  CHECK(run.matching.empty());
}

TEST_CASE("eviction threshold") {
  // path a-b-c: (a,b) weight 3 arrives first, then (b,c)
  Instance inst(3, {1, 1, 1}, {Edge{0, 1, 0}, Edge{1, 2, 1}});
  SUBCASE("marginal 7 beats C·3 and evicts") {
    LinearOracle oracle({{0, 3.0}, {1, 7.0}});
    PreemptiveRecord run = run_preemptive(inst, oracle, preemptive_monotone_preset(), true);
    CHECK(run.matching == std::vector<int>{1});
    REQUIRE(run.admitted.size() == 2);
    CHECK_FALSE(run.admitted[0].alive);
    CHECK(run.admitted[0].weight == doctest::Approx(3.0));  // frozen at eviction
    CHECK(run.admitted[1].evicted == std::vector<int>{0});
  }
  SUBCASE("marginal 6 hits the ≤ boundary and is skipped") {
    LinearOracle oracle({{0, 3.0}, {1, 6.0}});
    PreemptiveRecord run = run_preemptive(inst, oracle, preemptive_monotone_preset(), true);
    CHECK(run.matching == std::vector<int>{0});
    REQUIRE(run.skipped.size() == 1);
    CHECK(run.skipped[0].edge_idx == 1);
  }
}

TEST_CASE("preempted weights freeze at their eviction-test values") {
  // A=(0,1) covers {0} (weight 5); B=(2,3) covers {0,1} (marginal 3 after A);
  // C-edge=(1,2) covers {2} (weight 20) and evicts both. The frozen weights
  // must be the marginals in the matching they were evicted from, 5 and 3 —
  // not B's stand-alone value 8.
  Instance inst(4, {1, 1, 1, 1}, {Edge{0, 1, 0}, Edge{2, 3, 1}, Edge{1, 2, 2}});
  CoverageOracle oracle(3, {5.0, 3.0, 20.0},
                        {{0, {0}}, {1, {0, 1}}, {2, {2}}});
  PreemptiveRecord run = run_preemptive(inst, oracle, preemptive_monotone_preset(), true);
  REQUIRE(run.admitted.size() == 3);
  CHECK(run.matching == std::vector<int>{2});
  CHECK(run.admitted[0].weight == doctest::Approx(5.0));
  CHECK(run.admitted[1].weight == doctest::Approx(3.0));
  CHECK(run.admitted[2].weight == doctest::Approx(20.0));
  CHECK(run.admitted[2].evicted == std::vector<int>{0, 1});
  // Lemma chain on this trace: w(P) = 8 ≤ w(M)/(C−1) = 20
  CHECK(run.preempted_weight() == doctest::Approx(8.0));
  CHECK(run.matched_weight() == doctest::Approx(20.0));
}

TEST_CASE("capacities above one are rejected") {
  Instance inst(3, {2, 1, 1}, {Edge{0, 1, 0}});
  LinearOracle oracle({{0, 1.0}});
  CHECK_THROWS_AS(run_preemptive(inst, oracle, preemptive_monotone_preset(), false),
                  UnsupportedError);
}

TEST_CASE("preemptive invariants on random instances") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    RandomSpec spec;
    spec.family = seed % 2 == 0 ? RandomSpec::Family::coverage : RandomSpec::Family::covlin;
    spec.num_vertices = 8;
    spec.num_edges = 14;
    spec.universe = 10;
    spec.seed = seed;
    GeneratedPair pair = gen_random(spec);

    PreemptiveParams p = preemptive_monotone_preset();
    PreemptiveRecord run = run_preemptive(pair.instance, *pair.oracle, p, true);

    CHECK(is_feasible(run.matching, pair.instance));
    CHECK(run.peak_matching_size <=
          static_cast<std::size_t>(pair.instance.num_vertices() / 2));

    // Observation: w(M) = f(M) − f(∅)
    CHECK(run.matched_weight() ==
          doctest::Approx(run.f_matching - pair.oracle->f_empty()).epsilon(1e-9));
    // Lemma: w(P) ≤ w(M)/(C−1)
    CHECK(run.preempted_weight() <= run.matched_weight() / (p.C - 1.0) + kValueTol);
    // Lemma: f(M) ≥ (1−1/C)·f(S)
    CHECK(run.f_matching >= (1.0 - 1.0 / p.C) * run.f_admitted - kValueTol);

    // admission chain: each admitted edge beat C times what it evicted
    std::unordered_map<int, double> frozen;
    for (const AdmittedEdge& a : run.admitted) frozen[a.edge_idx] = a.weight;
    for (const AdmittedEdge& a : run.admitted) {
      double evicted_sum = 0.0;
      for (int idx : a.evicted) evicted_sum += frozen.at(idx);
      CHECK(a.weight >= p.C * evicted_sum - kValueTol);
    }

    // the admitted set partitions into M and P
    int alive = 0;
    for (const AdmittedEdge& a : run.admitted) alive += a.alive ? 1 : 0;
    CHECK(static_cast<std::size_t>(alive) == run.matching.size());
  }
}

TEST_CASE("randomized preemptive runs are seed-reproducible") {
  RandomSpec spec;
  spec.family = RandomSpec::Family::covlin;
  spec.num_vertices = 8;
  spec.num_edges = 12;
  spec.seed = 77;
  GeneratedPair pair = gen_random(spec);
  PreemptiveParams p = preemptive_nonmonotone_preset();
  p.seed = 42;
  PreemptiveRecord a = run_preemptive(pair.instance, *pair.oracle, p, true);
  PreemptiveRecord b = run_preemptive(pair.instance, *pair.oracle, p, true);
  CHECK(a.matching == b.matching);
  CHECK(a.f_matching == b.f_matching);
  CHECK(a.skipped.size() == b.skipped.size());
}
