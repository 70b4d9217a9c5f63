#pragma once

#include <memory>
#include <string>

#include "msbm/instance.hpp"
#include "msbm/oracle.hpp"

namespace msbm {

// A generated instance/oracle pair. The text fields are the exact file
// bytes (provenance comment included); the objects are parsed back from
// those bytes, so the files are the single source of truth.
struct GeneratedPair {
  Instance instance;
  std::unique_ptr<SubmodularOracle> oracle;
  std::string instance_text;
  std::string oracle_text;
};

struct TightSpec {
  double C = 2.0;
  int n = 3;
  double eps = 0.1;
  double delta = -1.0;  // < 0 = default 1e-4·(C−1)

  double effective_delta() const { return delta < 0.0 ? 1e-4 * (C - 1.0) : delta; }
};

// Worst-case chain family: stream d_1..d_n then e_0..e_n, weights per the
// tight oracle. δ defaults to 1e-4·(C−1): large enough to clear the comparison
// tolerance, small enough to keep the realized ratio within 0.5% of the
// unperturbed limit for n ≤ 20.
GeneratedPair gen_tight(const TightSpec& spec);

struct RandomSpec {
  enum class Family { coverage, covlin, linear };
  Family family = Family::coverage;
  int num_vertices = 8;
  int num_edges = 12;
  int universe = 12;       // coverage families
  int max_set_size = 4;    // coverage families
  int weight_max = 10;     // element weights (coverage) or edge weights (linear)
  int cost_max = 10;       // covlin per-key costs
  int max_capacity = 1;    // 1 = b uniform 1, else random b_v in 1..max_capacity
  std::uint64_t seed = 0;
};

GeneratedPair gen_random(const RandomSpec& spec);

}  // namespace msbm
