#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "frontier_dyn/frontier_dyn.hpp"
#include "report_table.hpp"

namespace frontier_dyn::cli {

inline constexpr const char* kVersion = "frontier_dyn 1.0.0";
inline constexpr const char* kSeedEnv = "FRONTIER_DYN_SEED";

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInternal = 1;
inline constexpr int kUserError = 2;

/// Thrown for bad user input; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string subcommand;
  std::string data;
  std::string schema;
  std::string spec;
  std::string ranking;
  std::string clusters;
  std::string out;
  std::string format = "csv";
  std::string variant = "standard";
  bool heuristic = false;
  std::size_t p = 10;
  std::optional<std::uint64_t> seed;
  std::string weights;
  bool static_mode = false;
  std::size_t period = 1;
  bool compare = false;
  std::optional<std::size_t> k;
  std::size_t k_min = 2;
  std::size_t k_max = 12;
  std::size_t jobs = default_jobs();
  double tol = 1e-9;
  std::size_t max_iter = 50000;
  bool verify = false;
  bool paper_style = false;
};

/// Flag, then FRONTIER_DYN_SEED, then `fallback`.
inline std::uint64_t resolve_seed(const RunConfig& cfg, std::uint64_t fallback) {
  if (cfg.seed) return *cfg.seed;
  if (const char* env = std::getenv(kSeedEnv)) {
    const auto v = parse_integer<std::uint64_t>(trim(env));
    if (!v) throw UsageError(std::string(kSeedEnv) + " is not an unsigned integer");
    return *v;
  }
  return fallback;
}

inline report::Format parse_format(const std::string& f) {
  if (f == "csv") return report::Format::Csv;
  if (f == "json") return report::Format::Json;
  throw UsageError("--format must be csv or json");
}

inline Variant parse_variant(const std::string& v) {
  if (v == "standard") return Variant::Standard;
  if (v == "super") return Variant::SuperEfficiency;
  throw UsageError("--variant must be standard or super");
}

inline std::vector<double> parse_weights(const std::string& text) {
  std::vector<double> w;
  if (text.empty()) return w;
  for (auto f : split(text, ',')) {
    const auto v = parse_double(trim(f));
    if (!v || !(*v > 0.0)) throw UsageError("--weights expects positive numbers, got '" + std::string(f) + "'");
    w.push_back(*v);
  }
  return w;
}

inline nlohmann::ordered_json config_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["subcommand"] = cfg.subcommand;
  auto put_if = [&](const char* key, const std::string& v) {
    if (!v.empty()) j[key] = v;
  };
  put_if("data", cfg.data);
  put_if("schema", cfg.schema);
  put_if("spec", cfg.spec);
  put_if("ranking", cfg.ranking);
  put_if("clusters", cfg.clusters);
  j["format"] = cfg.format;
  if (cfg.subcommand == "evaluate") {
    j["variant"] = cfg.variant;
    j["mode"] = cfg.compare ? "compare" : cfg.static_mode ? "static" : cfg.heuristic ? "heuristic" : "exact";
    if (cfg.heuristic) j["p"] = cfg.p;
    if (cfg.static_mode) j["period"] = cfg.period;
    j["weights"] = cfg.weights.empty() ? "all-ones" : cfg.weights;
    j["tol"] = cfg.tol;
    j["max_iter"] = cfg.max_iter;
    j["vrs"] = true;
    j["zero_denominator_epsilon"] = 1e-12;
  }
  if (cfg.subcommand == "cluster") {
    j["k_min"] = cfg.k_min;
    j["k_max"] = cfg.k_max;
    if (cfg.k) j["k_override"] = *cfg.k;
    else j["k_override"] = nullptr;
    j["restarts_per_k"] = kSelectRestarts;
  }
  if (cfg.subcommand == "sensitivity") {
    j["aggregation"] = aggregation_name(Aggregation::MeanOverPeriods);
    j["style"] = cfg.paper_style ? "signed" : "tagged";
    j["verify"] = cfg.verify;
  }
  if (cfg.seed) j["seed"] = *cfg.seed;
  return j;
}

inline void write_config(const std::filesystem::path& dir, const RunConfig& cfg) {
  report::write_text(dir / "run_config.json", config_json(cfg).dump(2) + "\n");
}

inline std::filesystem::path prepare_out_dir(const std::string& out) {
  if (out.empty()) throw UsageError("--out is required");
  std::filesystem::path dir(out);
  std::filesystem::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------------------

inline int cmd_generate(RunConfig cfg) {
  if (cfg.spec.empty() || cfg.out.empty()) throw UsageError("generate needs --spec and --out");
  std::ifstream in(cfg.spec);
  if (!in) throw UsageError("cannot open spec '" + cfg.spec + "'");
  GeneratorSpec spec = parse_generator_spec(in);
  if (cfg.seed || !spec.seed_given) spec.seed = resolve_seed(cfg, spec.seed);
  const auto data = generate_synthetic(spec);
  const std::filesystem::path out(cfg.out);
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  report::write_text(out, dump_csv(data));
  if (!cfg.schema.empty()) {
    std::ostringstream os;
    write_schema(os, data.variables());
    report::write_text(cfg.schema, os.str());
  }
  return kOk;
}

namespace detail {

struct RankingRow {
  std::string dmu;
  std::optional<double> rho;
  std::string status;
  std::size_t dropped = 0;
  // heuristic only
  std::optional<double> min_rho, max_rho;
  std::size_t feasible = 0;
  std::size_t classes = 0;
};

inline nlohmann::ordered_json opt_num(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline report::Table ranking_table(const std::vector<RankingRow>& rows, bool heuristic) {
  report::Table t;
  t.columns = {"rank", "dmu", "rho", "status", "dropped_ratio_terms"};
  if (heuristic) t.columns.insert(t.columns.end(), {"mean", "min", "max", "feasible_count"});
  std::size_t rank = 0;
  for (const auto& r : rows) {
    std::vector<nlohmann::ordered_json> cells = {++rank, r.dmu, opt_num(r.rho), r.status, r.dropped};
    if (heuristic) {
      cells.push_back(opt_num(r.rho));
      cells.push_back(opt_num(r.min_rho));
      cells.push_back(opt_num(r.max_rho));
      cells.push_back(r.feasible);
    }
    t.add(std::move(cells));
  }
  return t;
}

inline RankingRow exact_row(const std::string& dmu, const EfficiencyResult& r) {
  RankingRow row;
  row.dmu = dmu;
  if (r.optimal()) row.rho = r.rho;
  row.status = std::string(lp::status_name(r.status));
  row.dropped = r.dropped_ratio_terms;
  return row;
}

inline std::vector<RankingRow> rank_static(const PanelDataset& data, const std::vector<EfficiencyResult>& results) {
  std::vector<RankedEfficiency> ranked;
  for (std::size_t j = 0; j < data.dmu_count(); ++j) ranked.push_back({data.dmu_ids()[j], results[j]});
  sort_ranking(
      ranked, [](const RankedEfficiency& r) { return r.result.rho; },
      [](const RankedEfficiency& r) { return r.result.optimal(); });
  std::vector<RankingRow> rows;
  for (const auto& r : ranked) rows.push_back(exact_row(r.dmu, r.result));
  return rows;
}

}  // namespace detail

inline int cmd_evaluate(RunConfig cfg) {
  if (cfg.data.empty() || cfg.schema.empty()) throw UsageError("evaluate needs --data and --schema");
  const auto format = parse_format(cfg.format);
  if (cfg.static_mode && (cfg.compare || cfg.heuristic))
    throw UsageError("--static cannot be combined with --compare or --heuristic");
  if (!(cfg.tol > 0.0)) throw UsageError("--tol must be positive");

  const auto data = load_dataset(cfg.data, cfg.schema);
  SbmConfig sbm;
  sbm.variant = parse_variant(cfg.variant);
  sbm.period_weights = parse_weights(cfg.weights);
  sbm.solver.tol = cfg.tol;
  sbm.solver.max_iter = cfg.max_iter;
  if (cfg.heuristic) cfg.seed = resolve_seed(cfg, 1);
  const auto dir = prepare_out_dir(cfg.out);

  std::vector<detail::RankingRow> rows;
  if (cfg.static_mode) {
    if (cfg.period < 1 || cfg.period > data.period_count())
      throw UsageError("--period must be in 1.." + std::to_string(data.period_count()));
    rows = detail::rank_static(data, static_sbm_all(data, cfg.period, sbm, cfg.jobs));
  } else if (cfg.heuristic) {
    for (const auto& r : evaluate_all_heuristic(data, cfg.p, *cfg.seed, sbm, cfg.jobs)) {
      detail::RankingRow row;
      row.dmu = r.dmu;
      row.rho = r.result.mean_rho;
      row.status = r.result.mean_rho ? "Optimal" : "Infeasible";
      row.dropped = r.result.class_results.empty() ? 0 : r.result.class_results.front().dropped_ratio_terms;
      if (r.result.mean_rho) {
        row.min_rho = r.result.min_rho;
        row.max_rho = r.result.max_rho;
      }
      row.feasible = r.result.feasible_class_count;
      row.classes = r.result.class_results.size();
      rows.push_back(std::move(row));
    }
  } else {
    for (const auto& r : evaluate_all(data, sbm, cfg.jobs)) rows.push_back(detail::exact_row(r.dmu, r.result));
  }
  report::write_table(dir, "ranking", detail::ranking_table(rows, cfg.heuristic), format);

  if (cfg.compare) {
    std::vector<std::vector<EfficiencyResult>> per_period;
    for (std::size_t t = 1; t <= data.period_count(); ++t) per_period.push_back(static_sbm_all(data, t, sbm, cfg.jobs));
    report::Table t;
    for (const auto& p : data.periods()) t.columns.push_back("rho_" + p);
    t.columns.push_back("rho_ddea");
    t.columns.push_back("dmu");
    for (const auto& r : rows) {
      const std::size_t j = data.dmu_index(r.dmu);
      std::vector<nlohmann::ordered_json> cells;
      for (const auto& period : per_period)
        cells.push_back(period[j].optimal() ? nlohmann::ordered_json(period[j].rho) : nlohmann::ordered_json(nullptr));
      cells.push_back(detail::opt_num(r.rho));
      cells.push_back(r.dmu);
      t.add(std::move(cells));
    }
    report::write_table(dir, "compare", t, format);
  }
  write_config(dir, cfg);

  if (sbm.variant == Variant::Standard)
    for (const auto& r : rows)
      if (r.status != "Optimal") {
        std::cerr << "internal error: standard model for " << r.dmu << " returned " << r.status << "\n";
        return kInternal;
      }
  return kOk;
}

inline int cmd_cluster(RunConfig cfg) {
  if (cfg.ranking.empty()) throw UsageError("cluster needs --ranking");
  const auto format = parse_format(cfg.format);
  const auto seed = resolve_seed(cfg, 1);
  cfg.seed = seed;

  std::vector<std::map<std::string, std::string>> table;
  try {
    table = report::read_table(cfg.ranking);
  } catch (const report::ReportError& e) {
    throw UsageError(std::string("malformed ranking report: ") + e.what());
  }
  std::vector<std::string> ids;
  std::vector<double> rho;
  std::vector<long long> ranks;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& row = table[i];
    if (!row.count("dmu") || !row.count("rho"))
      throw UsageError("malformed ranking report: needs dmu and rho columns");
    if (row.count("status") && row.at("status") != "Optimal") continue;
    const auto v = parse_double(row.at("rho"));
    if (!v || !std::isfinite(*v)) throw UsageError("malformed ranking report: bad rho for " + row.at("dmu"));
    long long rank = static_cast<long long>(i) + 1;
    if (row.count("rank")) {
      const auto r = parse_integer<long long>(row.at("rank"));
      if (!r) throw UsageError("malformed ranking report: bad rank for " + row.at("dmu"));
      rank = *r;
    }
    ids.push_back(row.at("dmu"));
    rho.push_back(*v);
    ranks.push_back(rank);
  }
  if (std::set<std::string>(ids.begin(), ids.end()).size() != ids.size())
    throw UsageError("malformed ranking report: duplicate dmu");

  std::vector<Point> points;
  for (double v : rho) points.push_back({v});
  const std::size_t distinct = points.empty() ? 0 : distinct_count(points);
  if (distinct < 2) throw UsageError("clustering needs at least two distinct scores");
  const std::size_t k_max = std::min(cfg.k_max, distinct);
  if (cfg.k_min < 2 || cfg.k_min > k_max)
    throw UsageError("--k-min must be in 2.." + std::to_string(k_max));
  if (cfg.k && (*cfg.k < 1 || *cfg.k > distinct))
    throw UsageError("--k must be in 1.." + std::to_string(distinct));

  const auto dir = prepare_out_dir(cfg.out);
  const auto sel = select_k(points, cfg.k_min, k_max, seed, cfg.k);
  const auto& model = sel.model_for(sel.chosen_k);
  const auto grading = grade_clusters(model, rho);

  report::Table sil;
  sil.columns = {"k", "silhouette", "best", "chosen"};
  for (const auto& [k, s] : sel.silhouettes) sil.add({k, s, k == sel.best_k, k == sel.chosen_k});
  report::write_table(dir, "silhouette", sil, format);

  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ranks[a] < ranks[b]; });
  report::Table assign;
  assign.columns = {"cluster", "rho", "dmu", "rank", "grade"};
  for (auto i : order) {
    const std::size_t g = grading.grade_of_cluster[model.assignments[i]];
    assign.add({g + 1, rho[i], ids[i], ranks[i], grading.labels[g]});
  }
  report::write_table(dir, "assignments", assign, format);

  std::vector<std::size_t> counts(model.k, 0);
  for (auto a : model.assignments) ++counts[grading.grade_of_cluster[a]];
  report::Table centers;
  centers.columns = {"cluster", "grade", "efficiency", "members"};
  report::Table shares;
  shares.columns = {"cluster", "grade", "count", "share"};
  for (std::size_t g = 0; g < model.k; ++g) {
    centers.add({g + 1, grading.labels[g], grading.center_efficiency[g], counts[g]});
    shares.add({g + 1, grading.labels[g], counts[g], static_cast<double>(counts[g]) / static_cast<double>(ids.size())});
  }
  report::write_table(dir, "centers", centers, format);
  report::write_table(dir, "grade_shares", shares, format);
  write_config(dir, cfg);
  return kOk;
}

inline int cmd_sensitivity(RunConfig cfg) {
  if (cfg.data.empty() || cfg.schema.empty() || cfg.clusters.empty())
    throw UsageError("sensitivity needs --data, --schema and --clusters");
  const auto format = parse_format(cfg.format);
  const auto data = load_dataset(cfg.data, cfg.schema);

  std::vector<std::map<std::string, std::string>> table;
  try {
    table = report::read_table(cfg.clusters);
  } catch (const report::ReportError& e) {
    throw UsageError(std::string("malformed cluster report: ") + e.what());
  }
  std::map<std::size_t, std::vector<BranchScore>> by_cluster;
  std::set<std::string> seen;
  for (const auto& row : table) {
    if (!row.count("cluster") || !row.count("dmu") || !row.count("rho"))
      throw UsageError("malformed cluster report: needs cluster, dmu and rho columns");
    const auto c = parse_integer<std::size_t>(row.at("cluster"));
    const auto r = parse_double(row.at("rho"));
    if (!c || *c < 1 || !r) throw UsageError("malformed cluster report near dmu " + row.at("dmu"));
    if (!data.find_dmu(row.at("dmu")))
      throw UsageError("cluster/data mismatch: dmu " + row.at("dmu") + " is not in the dataset");
    if (!seen.insert(row.at("dmu")).second) throw UsageError("cluster/data mismatch: duplicate dmu " + row.at("dmu"));
    by_cluster[*c].push_back({row.at("dmu"), *r});
  }
  if (by_cluster.empty()) throw UsageError("cluster report is empty");
  const std::size_t k = by_cluster.rbegin()->first;
  if (by_cluster.size() != k) throw UsageError("cluster/data mismatch: cluster numbers are not 1.." + std::to_string(k));

  const auto labels = grade_labels(k);
  std::vector<GradeGroup> groups;
  for (std::size_t c = 1; c <= k; ++c) groups.push_back({labels[c - 1], by_cluster[c]});

  const auto dir = prepare_out_dir(cfg.out);
  const auto reports = sensitivity_report(data, groups);
  const auto style = cfg.paper_style ? DeltaStyle::Signed : DeltaStyle::Tagged;
  const auto roles = roles_of(data);

  report::Table summary;
  summary.columns = {"source_cluster", "source_grade", "target_cluster", "target_grade", "worst_target_branch",
                     "aggregation", "branches"};
  std::size_t violations = 0;
  for (const auto& rep : reports) {
    report::Table t;
    t.columns = {"branch"};
    for (const auto& v : data.variables()) t.columns.push_back(v.name);
    const auto target = aggregate_profile(data, data.dmu_index(rep.worst_target_branch));
    for (const auto& row : rep.rows) {
      std::vector<nlohmann::ordered_json> cells = {row.branch};
      for (const auto& cell : render_row(row.deltas, style)) cells.push_back(cell);
      t.add(std::move(cells));
      if (cfg.verify) {
        const auto moved = apply_deltas(aggregate_profile(data, data.dmu_index(row.branch)), row.deltas);
        const auto again = compute_deltas(moved, target, roles);
        for (std::size_t i = 0; i < roles.size(); ++i) {
          const double tol = 1e-9 * std::max(1.0, std::abs(target[i]));
          const bool dominated = lower_is_better(roles[i]) ? moved[i] <= target[i] + tol : moved[i] >= target[i] - tol;
          if (!dominated || again[i].kind != Delta::Kind::NoChange) {
            ++violations;
            std::cerr << "verify: branch " << row.branch << " variable " << data.variables()[i].name
                      << " fails post-delta dominance\n";
          }
        }
      }
    }
    report::write_table(dir, "sensitivity_cluster_" + std::to_string(rep.source_grade + 1), t, format);
    summary.add({rep.source_grade + 1, rep.source_label, rep.target_grade + 1, rep.target_label,
                 rep.worst_target_branch, std::string(aggregation_name(rep.aggregation)), rep.rows.size()});
  }
  report::write_table(dir, "sensitivity_summary", summary, format);
  write_config(dir, cfg);
  return violations ? kInternal : kOk;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv) {
  CLI::App app{"Dynamic slacks-based DEA: efficiency, clustering and upgrade sensitivity"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  RunConfig cfg;
  std::uint64_t seed_value = 0;
  std::size_t k_value = 0;

  auto* gen = app.add_subcommand("generate", "Write a seeded synthetic panel as long CSV");
  gen->add_option("--spec", cfg.spec, "Generator spec file")->required();
  gen->add_option("--out", cfg.out, "Output CSV path")->required();
  gen->add_option("--schema", cfg.schema, "Also write the matching schema file here");
  auto* gen_seed = gen->add_option("--seed", seed_value, "Override the seed= line of the --spec file");

  auto* eval = app.add_subcommand("evaluate", "Score every DMU and write the ranking");
  eval->add_option("--data", cfg.data, "Long CSV panel")->required();
  eval->add_option("--schema", cfg.schema, "Variable role schema")->required();
  eval->add_option("--out", cfg.out, "Output directory")->required();
  eval->add_option("--format", cfg.format, "csv or json");
  eval->add_option("--variant", cfg.variant, "standard or super");
  eval->add_flag("--heuristic", cfg.heuristic, "Random-partition estimate");
  eval->add_option("-p", cfg.p, "Number of classes for --heuristic");
  auto* eval_seed = eval->add_option("--seed", seed_value, "Partition seed");
  eval->add_option("--weights", cfg.weights, "Period weights w1,w2,...");
  eval->add_flag("--static", cfg.static_mode, "Single-period SBM");
  eval->add_option("--period", cfg.period, "Ordinal period for --static (1-based)");
  eval->add_flag("--compare", cfg.compare, "Per-period static scores next to the dynamic score");
  eval->add_option("--jobs", cfg.jobs, "Worker threads");
  eval->add_option("--tol", cfg.tol, "Simplex tolerance");
  eval->add_option("--max-iter", cfg.max_iter, "Simplex iteration cap");

  auto* clus = app.add_subcommand("cluster", "k-means grading of a ranking report");
  clus->add_option("--ranking", cfg.ranking, "ranking.csv or ranking.json from evaluate")->required();
  clus->add_option("--out", cfg.out, "Output directory")->required();
  clus->add_option("--format", cfg.format, "csv or json");
  auto* clus_k = clus->add_option("--k", k_value, "Use this k instead of the silhouette argmax");
  clus->add_option("--k-min", cfg.k_min, "Smallest k in the silhouette table");
  clus->add_option("--k-max", cfg.k_max, "Largest k in the silhouette table");
  auto* clus_seed = clus->add_option("--seed", seed_value, "k-means seed");

  auto* sens = app.add_subcommand("sensitivity", "Per-branch changes needed to reach the next grade");
  sens->add_option("--data", cfg.data, "Long CSV panel")->required();
  sens->add_option("--schema", cfg.schema, "Variable role schema")->required();
  sens->add_option("--clusters", cfg.clusters, "assignments.csv or assignments.json from cluster")->required();
  sens->add_option("--out", cfg.out, "Output directory")->required();
  sens->add_option("--format", cfg.format, "csv or json");
  sens->add_flag("--verify", cfg.verify, "Re-check dominance and idempotence of every row");
  sens->add_flag("--paper-style", cfg.paper_style, "Signed numbers and 'No Change' cells");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUserError;
  }

  try {
    for (auto* opt : {gen_seed, eval_seed, clus_seed})
      if (opt->count()) cfg.seed = seed_value;
    if (clus_k->count()) cfg.k = k_value;
    if (cfg.jobs == 0) cfg.jobs = 1;
    if (gen->parsed()) {
      cfg.subcommand = "generate";
      return cmd_generate(cfg);
    }
    if (eval->parsed()) {
      cfg.subcommand = "evaluate";
      return cmd_evaluate(cfg);
    }
    if (clus->parsed()) {
      cfg.subcommand = "cluster";
      return cmd_cluster(cfg);
    }
    cfg.subcommand = "sensitivity";
    return cmd_sensitivity(cfg);
  } catch (const GeneratorSpecError& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return kUserError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kUserError;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUserError;
  } catch (const DeaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUserError;
  } catch (const HeuristicError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == HeuristicErrorKind::PTooLarge ? kUserError : kInternal;
  } catch (const ClusteringError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUserError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}

inline int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"frontier_dyn"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace frontier_dyn::cli
