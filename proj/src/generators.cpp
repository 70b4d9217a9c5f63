#include "msbm/generators.hpp"

#include <algorithm>
#include <sstream>

namespace msbm {
namespace {

GeneratedPair finish_pair(std::string instance_text, std::string oracle_text) {
  Instance inst = parse_stream(instance_text);
  auto oracle = parse_oracle_spec(oracle_text);
  return GeneratedPair{std::move(inst), std::move(oracle), std::move(instance_text),
                       std::move(oracle_text)};
}

}  // namespace

GeneratedPair gen_tight(const TightSpec& spec) {
  double delta = spec.effective_delta();
  // Validate parameters through the oracle constructor first.
  TightFamily family = make_tight_oracle(spec.C, spec.n, spec.eps, delta);

  std::string provenance = "# gen tight C=" + format_value(spec.C) +
                           " n=" + std::to_string(spec.n) + " eps=" + format_value(spec.eps) +
                           " delta=" + format_value(delta) + "\n";
  std::string instance_text = provenance + serialize_stream(family.instance);
  std::string oracle_text = provenance + "oracle tight C " + format_value(spec.C) + " n " +
                            std::to_string(spec.n) + " eps " + format_value(spec.eps) +
                            " delta " + format_value(delta) + "\n";
  return finish_pair(std::move(instance_text), std::move(oracle_text));
}

GeneratedPair gen_random(const RandomSpec& spec) {
  if (spec.num_vertices < 2) throw DomainError("random instances need >= 2 vertices");
  if (spec.num_edges < 0) throw DomainError("num_edges must be nonnegative");
  if (spec.universe < 1) throw DomainError("universe must be >= 1");
  if (spec.max_set_size < 1) throw DomainError("max_set_size must be >= 1");
  if (spec.weight_max < 1) throw DomainError("weight_max must be >= 1");
  if (spec.cost_max < 0) throw DomainError("cost_max must be nonnegative");
  if (spec.max_capacity < 1) throw DomainError("max_capacity must be >= 1");

  Rng rng(spec.seed);

  std::vector<std::pair<int, int>> endpoints;
  endpoints.reserve(static_cast<std::size_t>(spec.num_edges));
  for (int i = 0; i < spec.num_edges; ++i) {
    int u = static_cast<int>(rng.uniform_int(0, spec.num_vertices - 1));
    int v = static_cast<int>(rng.uniform_int(0, spec.num_vertices - 2));
    if (v >= u) ++v;  // uniform over ordered pairs with u != v
    endpoints.emplace_back(u, v);
  }
  // Arrival order is a seeded shuffle (Fisher-Yates over the draws).
  for (int i = spec.num_edges - 1; i > 0; --i) {
    int j = static_cast<int>(rng.uniform_int(0, i));
    std::swap(endpoints[static_cast<std::size_t>(i)], endpoints[static_cast<std::size_t>(j)]);
  }

  std::vector<int> capacities(static_cast<std::size_t>(spec.num_vertices), 1);
  if (spec.max_capacity > 1)
    for (int& b : capacities) b = static_cast<int>(rng.uniform_int(1, spec.max_capacity));

  std::string family_name = spec.family == RandomSpec::Family::coverage  ? "coverage"
                            : spec.family == RandomSpec::Family::covlin ? "covlin"
                                                                        : "linear";
  std::ostringstream prov;
  prov << "# gen " << family_name << " vertices=" << spec.num_vertices
       << " edges=" << spec.num_edges << " universe=" << spec.universe
       << " set_size=" << spec.max_set_size << " weight_max=" << spec.weight_max
       << " cost_max=" << spec.cost_max << " bmax=" << spec.max_capacity
       << " seed=" << spec.seed << "\n";
  std::string provenance = prov.str();

  std::ostringstream inst_out;
  inst_out << provenance << "msbm 1\n";
  inst_out << "n " << spec.num_vertices << "\n";
  if (spec.max_capacity == 1) {
    inst_out << "b uniform 1\n";
  } else {
    inst_out << "b list";
    for (int b : capacities) inst_out << " " << b;
    inst_out << "\n";
  }
  inst_out << "m " << spec.num_edges << "\n";
  for (int i = 0; i < spec.num_edges; ++i)
    inst_out << "e " << endpoints[static_cast<std::size_t>(i)].first << " "
             << endpoints[static_cast<std::size_t>(i)].second << " " << i << "\n";

  std::ostringstream oracle_out;
  oracle_out << provenance;
  if (spec.family == RandomSpec::Family::linear) {
    oracle_out << "oracle linear\n";
    for (int i = 0; i < spec.num_edges; ++i)
      oracle_out << "w " << i << " " << rng.uniform_int(1, spec.weight_max) << "\n";
  } else {
    oracle_out << "oracle " << (spec.family == RandomSpec::Family::covlin ? "covlin" : "coverage")
               << "\n";
    oracle_out << "universe " << spec.universe << "\n";
    for (int u = 0; u < spec.universe; ++u)
      oracle_out << "a " << u << " " << rng.uniform_int(1, spec.weight_max) << "\n";
    for (int i = 0; i < spec.num_edges; ++i) {
      int size = static_cast<int>(rng.uniform_int(1, spec.max_set_size));
      // sample `size` distinct elements
      std::vector<int> elems;
      while (static_cast<int>(elems.size()) < std::min(size, spec.universe)) {
        int u = static_cast<int>(rng.uniform_int(0, spec.universe - 1));
        if (std::find(elems.begin(), elems.end(), u) == elems.end()) elems.push_back(u);
      }
      std::sort(elems.begin(), elems.end());
      oracle_out << "set " << i;
      for (int u : elems) oracle_out << " " << u;
      oracle_out << "\n";
    }
    if (spec.family == RandomSpec::Family::covlin)
      for (int i = 0; i < spec.num_edges; ++i)
        oracle_out << "cost " << i << " " << rng.uniform_int(0, spec.cost_max) << "\n";
  }

  return finish_pair(inst_out.str(), oracle_out.str());
}

}  // namespace msbm
