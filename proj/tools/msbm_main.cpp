#include <atomic>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "msbm/certificates.hpp"
#include "msbm/generators.hpp"
#include "msbm/mwbm.hpp"
#include "msbm/preemptive.hpp"
#include "msbm/streaming.hpp"

using json = nlohmann::ordered_json;

namespace {

using namespace msbm;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitCheckFailed = 2;

struct RunOptions {
  std::string instance_file;
  std::string oracle_file;
  std::string algorithm;
  std::string preset;
  double C = 0.0;  // 0 = take from preset/defaults
  double q = -1.0;
  double eps = 0.0;
  std::string skip_rule = "nonstrict";
  std::uint64_t seed = 0;
  bool certify = false;
  bool with_opt = false;
  int opt_limit = 22;
  int exact_limit = 24;
  int trials = 1000;
};

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

json opt_block(const OptResult& opt, double f_matching, std::optional<double> bound) {
  double ratio = f_matching > 0.0 ? opt.value / f_matching
                                  : (opt.value > 0.0 ? std::numeric_limits<double>::infinity()
                                                     : 1.0);
  json block = json::parse(opt_result_json(opt));
  block["ratio"] = ratio;
  block["bound"] = bound ? json(*bound) : json(nullptr);
  block["within_bound"] = bound ? json(ratio <= *bound + kValueTol) : json(nullptr);
  return block;
}

// One run + optional certificates; shared by `run` and `bench`.
json execute_run(const RunOptions& opt, bool& checks_passed) {
  auto start = std::chrono::steady_clock::now();
  Instance inst = parse_stream_file(opt.instance_file);
  auto oracle = parse_oracle_spec_file(opt.oracle_file);
  checks_passed = true;

  json report;
  report["algorithm"] = opt.algorithm;
  json params{{"C", nullptr},
              {"q", nullptr},
              {"eps", nullptr},
              {"skip_rule", opt.skip_rule},
              {"seed", opt.seed}};
  report["params"] = params;
  report["instance"] = json{{"file", opt.instance_file},
                            {"num_vertices", inst.num_vertices()},
                            {"num_edges", inst.num_edges()}};
  report["oracle"] = json{{"file", opt.oracle_file},
                          {"kind", oracle->kind()},
                          {"monotone", oracle->monotone()}};
  report["result"] = nullptr;
  report["opt"] = nullptr;
  report["certificate"] = nullptr;

  std::optional<OptResult> opt_result;
  if (opt.with_opt) opt_result = brute_force_opt(inst, *oracle, opt.opt_limit);

  if (opt.algorithm == "msbm") {
    AlgoParams p;
    if (opt.preset == "monotone")
      p = monotone_preset();
    else if (opt.preset == "nonmonotone")
      p = nonmonotone_preset();
    else if (opt.preset == "mwm")
      p = mwm_linear_preset(opt.eps > 0 ? opt.eps : 0.1);
    else if (!opt.preset.empty())
      throw DomainError("unknown preset '" + opt.preset + "'");
    else
      p = monotone_preset();
    if (opt.C > 0.0) p.C = opt.C;
    if (opt.q >= 0.0) p.q = opt.q;
    p.skip_rule = opt.skip_rule == "strict" ? SkipRule::strict : SkipRule::nonstrict;
    p.seed = opt.seed;

    RunRecord run = run_msbm(inst, *oracle, p, opt.certify);
    report["params"]["C"] = p.C;
    report["params"]["q"] = p.q;
    report["result"] = json{{"f_matching", run.f_matching},
                            {"matching_size", run.matching.size()},
                            {"stack_size", run.stack.size()},
                            {"preempted_count", nullptr},
                            {"exact", nullptr},
                            {"memory_proxy", run.peak_memory_proxy},
                            {"oracle_queries", run.oracle_queries},
                            {"certify_mode", opt.certify},
                            {"wall_time_ms", 0.0}};
    if (opt_result) {
      std::optional<double> bound;
      if (p.q == 1.0 && oracle->monotone()) bound = stack_bound(p.C);
      report["opt"] = opt_block(*opt_result, run.f_matching, bound);
      if (bound && !report["opt"]["within_bound"].get<bool>()) checks_passed = false;
    }
    if (opt.certify) {
      DualCertificate cert = build_dual(inst, run, *oracle);
      RatioReport ratios = check_ratios(inst, run, cert);
      json cert_json{{"mode", p.q == 1.0 ? "stack" : "expected"},
                     {"mu", cert.mu},
                     {"dual_cost", cert.dual_cost(inst)},
                     {"non_streaming_memory_profile", true},
                     {"feasibility", nullptr},
                     {"expected", nullptr},
                     {"ratio", json::parse(
                                   ratio_report_json(ratios, run.f_matching,
                                                     cert.dual_cost(inst)))},
                     {"feasible", nullptr}};
      bool ok = ratios.all_pass();
      if (p.q == 1.0) {
        SubsetMode mode =
            inst.num_edges() <= 12 ? SubsetMode::exhaustive : SubsetMode::sufficient;
        FeasibilityReport feas = check_feasibility(cert, inst, *oracle, mode);
        cert_json["feasibility"] = json::parse(feasibility_report_json(feas));
        ok = ok && feas.all_pass();
      } else {
        McReport mc = mc_expected_feasibility(inst, *oracle, p.C, p.q, opt.trials, opt.seed);
        cert_json["expected"] = json{{"trials", mc.trials},
                                     {"flagged_edges", mc.flagged_count},
                                     {"q_in_lemma_range", mc.q_in_lemma_range}};
        // below 10000 trials flagged edges are reported, not hard failures
        if (mc.trials >= 10000 && mc.flagged_count > 0) ok = false;
      }
      cert_json["feasible"] = ok;
      report["certificate"] = cert_json;
      if (!ok) checks_passed = false;
    }
  } else if (opt.algorithm == "preemptive") {
    if (!inst.unit_capacities())
      throw UnsupportedError("preemptive requires b ≡ 1 (use algorithm msbm instead)");
    PreemptiveParams p = preemptive_monotone_preset();
    if (opt.preset == "nonmonotone")
      p = preemptive_nonmonotone_preset();
    else if (!opt.preset.empty() && opt.preset != "monotone")
      throw DomainError("unknown preemptive preset '" + opt.preset + "'");
    if (opt.C > 0.0) p.C = opt.C;
    if (opt.q >= 0.0) p.q = opt.q;
    p.seed = opt.seed;

    PreemptiveRecord run = run_preemptive(inst, *oracle, p, opt.certify);
    report["params"]["C"] = p.C;
    report["params"]["q"] = p.q;
    report["result"] = json{{"f_matching", run.f_matching},
                            {"matching_size", run.matching.size()},
                            {"stack_size", run.admitted.size()},
                            {"preempted_count", run.admitted.size() - run.matching.size()},
                            {"exact", nullptr},
                            {"memory_proxy", run.peak_matching_size},
                            {"oracle_queries", run.oracle_queries},
                            {"certify_mode", opt.certify},
                            {"wall_time_ms", 0.0}};
    if (opt_result) {
      std::optional<double> bound;
      if (p.q == 1.0 && oracle->monotone()) bound = preemptive_bound(p.C);
      report["opt"] = opt_block(*opt_result, run.f_matching, bound);
      if (bound && !report["opt"]["within_bound"].get<bool>()) checks_passed = false;
    }
    if (opt.certify) {
      DualCertificate cert = build_dual(inst, run, *oracle);
      RatioReport ratios = check_ratios(inst, run, cert, *oracle);
      SubsetMode mode = inst.num_edges() <= 12 ? SubsetMode::exhaustive : SubsetMode::sufficient;
      bool ok = ratios.all_pass();
      json cert_json{{"mode", "preemptive"},
                     {"mu", cert.mu},
                     {"dual_cost", cert.dual_cost(inst)},
                     {"non_streaming_memory_profile", true},
                     {"feasibility", nullptr},
                     {"expected", nullptr},
                     {"ratio", json::parse(
                                   ratio_report_json(ratios, run.f_matching,
                                                     cert.dual_cost(inst)))},
                     {"feasible", nullptr}};
      if (p.q == 1.0) {
        FeasibilityReport feas = check_feasibility(cert, inst, *oracle, mode);
        cert_json["feasibility"] = json::parse(feasibility_report_json(feas));
        ok = ok && feas.all_pass();
      }
      cert_json["feasible"] = ok;
      report["certificate"] = cert_json;
      if (!ok) checks_passed = false;
    }
  } else if (opt.algorithm == "mwbm") {
    auto* linear = dynamic_cast<const LinearOracle*>(oracle.get());
    if (!linear) throw UnsupportedError("mwbm requires a linear oracle");
    double eps = opt.eps > 0.0 ? opt.eps : 1.0;
    MwbmReport run = run_mwbm(inst, *linear, eps, opt.exact_limit);
    report["params"]["C"] = 1.0 + eps / 2.0;
    report["params"]["q"] = 1.0;
    report["params"]["eps"] = eps;
    report["result"] = json{{"f_matching", run.weight_matching},
                            {"matching_size", run.matching.size()},
                            {"stack_size", run.stack.stack.size()},
                            {"preempted_count", nullptr},
                            {"exact", run.exact},
                            {"memory_proxy", run.stack.run.peak_memory_proxy},
                            {"oracle_queries", run.stack.run.oracle_queries},
                            {"certify_mode", opt.certify},
                            {"wall_time_ms", 0.0}};
    bool ok = run.phi_route_ok && run.dual_feasible_off_stack;
    if (opt_result) {
      attach_opt(run, inst, opt_result->edges);
      report["opt"] = opt_block(*opt_result, run.weight_matching, 3.0 + eps);
      ok = ok && run.stack_route_ok;
      if (!report["opt"]["within_bound"].get<bool>()) checks_passed = false;
    }
    report["certificate"] =
        json{{"mode", "linear"},
             {"dual_feasible_off_stack", run.dual_feasible_off_stack},
             {"dual_worst_slack", run.dual_worst_slack},
             {"phi_route_ok", run.phi_route_ok},
             {"stack_route_ok", opt_result ? json(run.stack_route_ok) : json(nullptr)},
             {"sum_capacity_potentials", run.sum_capacity_potentials},
             {"opt_in_stack_weight",
              run.opt_in_stack_weight ? json(*run.opt_in_stack_weight) : json(nullptr)},
             {"feasible", ok}};
    if (!ok) checks_passed = false;
  } else {
    throw DomainError("unknown algorithm '" + opt.algorithm + "'");
  }

  report["result"]["wall_time_ms"] = elapsed_ms(start);
  report["checks_passed"] = checks_passed;
  return report;
}

int cmd_run(const RunOptions& opt) {
  bool checks_passed = true;
  json report = execute_run(opt, checks_passed);
  std::cout << report.dump(2) << "\n";
  return checks_passed ? kExitOk : kExitCheckFailed;
}

struct GenOptions {
  std::string family;
  std::string out_prefix;
  TightSpec tight;
  RandomSpec random;
};

int cmd_gen(const GenOptions& opt) {
  GeneratedPair pair = [&] {
    if (opt.family == "tight") return gen_tight(opt.tight);
    RandomSpec spec = opt.random;
    if (opt.family == "coverage")
      spec.family = RandomSpec::Family::coverage;
    else if (opt.family == "covlin")
      spec.family = RandomSpec::Family::covlin;
    else if (opt.family == "linear")
      spec.family = RandomSpec::Family::linear;
    else
      throw DomainError("unknown family '" + opt.family + "'");
    return gen_random(spec);
  }();

  std::string inst_path = opt.out_prefix + ".msbm";
  std::string oracle_path = opt.out_prefix + ".oracle";
  std::ofstream inst_out(inst_path, std::ios::binary);
  std::ofstream oracle_out(oracle_path, std::ios::binary);
  if (!inst_out || !oracle_out)
    throw DomainError("cannot write output files with prefix '" + opt.out_prefix + "'");
  inst_out << pair.instance_text;
  oracle_out << pair.oracle_text;
  std::cerr << "wrote " << inst_path << " and " << oracle_path << "\n";
  return kExitOk;
}

struct BenchOptions {
  std::string manifest;
  int repeat = 1;
  int jobs = 0;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

int cmd_bench(const BenchOptions& opt) {
  std::ifstream in(opt.manifest);
  if (!in) throw DomainError("cannot open manifest '" + opt.manifest + "'");

  const std::string expected_header = "instance,oracle,algorithm,C,q,eps,seed,flags";
  std::string header;
  if (!std::getline(in, header)) {
    std::cout << "instance,oracle,algorithm,C,q,eps,seed,repeat,f_matching,matching_size,"
                 "stack_size,memory_proxy,oracle_queries,opt_value,ratio,wall_time_ms,"
                 "ratio_mean,ratio_min,error\n";
    return kExitOk;
  }
  if (header != expected_header)
    throw ParseError(1, "manifest header must be '" + expected_header + "'");

  struct ManifestRow {
    RunOptions run;
    std::string raw_prefix;  // instance,...,seed columns echoed on errors/aggregates
    std::string id_prefix;   // instance,oracle,algorithm
  };
  std::vector<ManifestRow> rows;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cols = split_csv_line(line);
    if (cols.size() != 8)
      throw ParseError(line_no, "manifest rows need 8 columns");
    ManifestRow row;
    row.run.instance_file = cols[0];
    row.run.oracle_file = cols[1];
    row.run.algorithm = cols[2];
    if (!cols[3].empty()) row.run.C = std::stod(cols[3]);
    if (!cols[4].empty()) row.run.q = std::stod(cols[4]);
    if (!cols[5].empty()) row.run.eps = std::stod(cols[5]);
    if (!cols[6].empty()) row.run.seed = std::stoull(cols[6]);
    std::istringstream flags(cols[7]);
    std::string flag;
    while (std::getline(flags, flag, ';')) {
      if (flag == "opt")
        row.run.with_opt = true;
      else if (flag == "certify")
        row.run.certify = true;
      else if (flag.rfind("preset=", 0) == 0)
        row.run.preset = flag.substr(7);
      else if (!flag.empty())
        throw ParseError(line_no, "unknown flag '" + flag + "'");
    }
    row.raw_prefix = cols[0] + "," + cols[1] + "," + cols[2] + "," + cols[3] + "," + cols[4] +
                     "," + cols[5] + "," + cols[6];
    row.id_prefix = cols[0] + "," + cols[1] + "," + cols[2];
    rows.push_back(std::move(row));
  }

  struct TaskResult {
    std::string csv;
    double ratio = -1.0;
  };
  int total = static_cast<int>(rows.size()) * opt.repeat;
  std::vector<TaskResult> results(static_cast<std::size_t>(total));

  auto run_task = [&](int task) {
    int row_idx = task / opt.repeat;
    int rep = task % opt.repeat;
    const ManifestRow& row = rows[static_cast<std::size_t>(row_idx)];
    RunOptions run_opt = row.run;
    run_opt.seed = row.run.seed + static_cast<std::uint64_t>(rep);
    std::ostringstream out;
    try {
      bool checks = true;
      json rep_json = execute_run(run_opt, checks);
      const json& pj = rep_json["params"];
      auto num_or_empty = [](const json& v) {
        return v.is_null() ? std::string() : format_value(v.get<double>());
      };
      // parameter columns carry the resolved values (presets applied)
      out << row.id_prefix << "," << num_or_empty(pj["C"]) << "," << num_or_empty(pj["q"])
          << "," << num_or_empty(pj["eps"]) << "," << run_opt.seed << "," << rep << ",";
      const json& res = rep_json["result"];
      out << res["f_matching"].dump() << "," << res["matching_size"].dump() << ","
          << res["stack_size"].dump() << "," << res["memory_proxy"].dump() << ","
          << res["oracle_queries"].dump() << ",";
      if (!rep_json["opt"].is_null()) {
        out << rep_json["opt"]["value"].dump() << "," << rep_json["opt"]["ratio"].dump();
        results[static_cast<std::size_t>(task)].ratio = rep_json["opt"]["ratio"].get<double>();
      } else {
        out << ",";
      }
      out << "," << res["wall_time_ms"].dump() << ",,,";
    } catch (const std::exception& ex) {
      std::string msg = ex.what();
      for (char& c : msg)
        if (c == ',' || c == '\n') c = ';';
      out.str("");
      out << row.raw_prefix << "," << rep << ",,,,,,,,,,," << msg;
    }
    results[static_cast<std::size_t>(task)].csv = out.str();
  };

  int jobs = opt.jobs > 0 ? opt.jobs
                          : std::min(4u, std::max(1u, std::thread::hardware_concurrency()));
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int j = 0; j < std::min(jobs, std::max(total, 1)); ++j)
    pool.emplace_back([&] {
      for (int task = next.fetch_add(1); task < total; task = next.fetch_add(1))
        run_task(task);
    });
  for (auto& t : pool) t.join();

  std::cout << "instance,oracle,algorithm,C,q,eps,seed,repeat,f_matching,matching_size,"
               "stack_size,memory_proxy,oracle_queries,opt_value,ratio,wall_time_ms,"
               "ratio_mean,ratio_min,error\n";
  for (std::size_t row_idx = 0; row_idx < rows.size(); ++row_idx) {
    double sum = 0.0, mn = std::numeric_limits<double>::infinity();
    int count = 0;
    for (int rep = 0; rep < opt.repeat; ++rep) {
      const TaskResult& r = results[row_idx * static_cast<std::size_t>(opt.repeat) +
                                    static_cast<std::size_t>(rep)];
      std::cout << r.csv << "\n";
      if (r.ratio >= 0.0) {
        sum += r.ratio;
        mn = std::min(mn, r.ratio);
        ++count;
      }
    }
    std::cout << rows[row_idx].raw_prefix << ",agg,,,,,,,,";
    if (count > 0)
      std::cout << "," << format_value(sum / count) << "," << format_value(mn) << ",";
    else
      std::cout << ",,,";
    std::cout << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streaming submodular (b-)matching toolkit"};
  app.require_subcommand(1);

  RunOptions run_opt;
  auto* run = app.add_subcommand("run", "run an algorithm on an instance/oracle pair");
  run->add_option("instance", run_opt.instance_file, "instance file (.msbm)")->required();
  run->add_option("oracle", run_opt.oracle_file, "oracle spec file")->required();
  run->add_option("algorithm", run_opt.algorithm, "msbm | preemptive | mwbm")->required();
  run->add_option("--preset", run_opt.preset, "monotone | nonmonotone | mwm");
  run->add_option("--C", run_opt.C, "slack parameter (> 1)");
  run->add_option("--q", run_opt.q, "sampling probability (0,1]");
  run->add_option("--eps", run_opt.eps, "epsilon for mwbm / mwm preset");
  run->add_option("--skip-rule", run_opt.skip_rule, "nonstrict | strict")
      ->check(CLI::IsMember({"nonstrict", "strict"}));
  run->add_option("--seed", run_opt.seed, "rng seed");
  run->add_flag("--certify", run_opt.certify, "retain full records and check certificates");
  run->add_flag("--opt", run_opt.with_opt, "attach brute-force OPT and realized ratio");
  run->add_option("--opt-limit", run_opt.opt_limit, "edge limit for brute-force OPT");
  run->add_option("--exact-limit", run_opt.exact_limit, "stack size limit for exact mwbm");
  run->add_option("--trials", run_opt.trials, "Monte-Carlo trials for q<1 certificates");

  GenOptions gen_opt;
  auto* gen = app.add_subcommand("gen", "generate an instance/oracle file pair");
  gen->add_option("family", gen_opt.family, "tight | coverage | covlin | linear")->required();
  gen->add_option("--out", gen_opt.out_prefix, "output prefix")->required();
  gen->add_option("--C", gen_opt.tight.C, "tight: slack parameter");
  gen->add_option("--n", gen_opt.tight.n, "tight: chain length");
  gen->add_option("--eps", gen_opt.tight.eps, "tight: epsilon");
  gen->add_option("--delta", gen_opt.tight.delta, "tight: tie-break perturbation");
  gen->add_option("--vertices", gen_opt.random.num_vertices, "random: vertex count");
  gen->add_option("--edges", gen_opt.random.num_edges, "random: edge count");
  gen->add_option("--universe", gen_opt.random.universe, "random: universe size");
  gen->add_option("--set-size", gen_opt.random.max_set_size, "random: max set size");
  gen->add_option("--weight-max", gen_opt.random.weight_max, "random: max weight");
  gen->add_option("--cost-max", gen_opt.random.cost_max, "covlin: max cost");
  gen->add_option("--bmax", gen_opt.random.max_capacity, "random: max capacity");
  gen->add_option("--seed", gen_opt.random.seed, "random: seed");

  BenchOptions bench_opt;
  auto* bench = app.add_subcommand("bench", "run a manifest of experiments, emit CSV");
  bench->add_option("manifest", bench_opt.manifest, "manifest CSV")->required();
  bench->add_option("--repeat", bench_opt.repeat, "repetitions per row")
      ->check(CLI::PositiveNumber);
  bench->add_option("--jobs", bench_opt.jobs, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(run_opt);
    if (gen->parsed()) return cmd_gen(gen_opt);
    if (bench->parsed()) return cmd_bench(bench_opt);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
