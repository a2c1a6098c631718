#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "frontier_dyn/dea_core.hpp"
#include "frontier_dyn/util.hpp"

namespace frontier_dyn {

enum class HeuristicErrorKind { PTooLarge, AllClassesInfeasible, UnknownDmu };

class HeuristicError : public std::runtime_error {
 public:
  HeuristicError(HeuristicErrorKind kind, const std::string& detail)
      : std::runtime_error(detail), kind_(kind) {}
  HeuristicErrorKind kind() const noexcept { return kind_; }

 private:
  HeuristicErrorKind kind_;
};

/// Random split of every DMU except the evaluated one into p classes.
struct PartitionPlan {
  std::size_t p = 0;
  std::uint64_t seed = 0;
  std::string evaluated;
  /// dmu id -> class index in 1..p
  std::map<std::string, std::size_t> assignments;
  /// classes[c - 1] lists the members of class c in shuffled order.
  std::vector<std::vector<std::string>> classes;
};

/// Per-DMU stream: the run seed mixed with a hash of the evaluated id.
inline std::uint64_t partition_stream_seed(std::uint64_t seed, std::string_view evaluated) {
  return splitmix64(seed ^ splitmix64(fnv1a64(evaluated)));
}

/// Fisher-Yates shuffle of the non-evaluated ids, then round-robin into
/// classes, so class sizes differ by at most one.
inline PartitionPlan partition(const std::vector<std::string>& dmus, const std::string& evaluated, std::size_t p,
                               std::uint64_t seed) {
  std::vector<std::string> others;
  for (const auto& id : dmus)
    if (id != evaluated) others.push_back(id);
  std::sort(others.begin(), others.end());
  if (p == 0 || p > others.size())
    throw HeuristicError(HeuristicErrorKind::PTooLarge, "p=" + std::to_string(p) + " exceeds the " +
                                                            std::to_string(others.size()) + " other DMUs");

  std::mt19937_64 rng(partition_stream_seed(seed, evaluated));
  for (std::size_t i = others.size(); i > 1; --i) {
    const auto k = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(others[i - 1], others[k]);
  }

  PartitionPlan plan;
  plan.p = p;
  plan.seed = seed;
  plan.evaluated = evaluated;
  plan.classes.resize(p);
  for (std::size_t i = 0; i < others.size(); ++i) {
    plan.classes[i % p].push_back(others[i]);
    plan.assignments.emplace(others[i], i % p + 1);
  }
  return plan;
}

struct HeuristicResult {
  std::vector<EfficiencyResult> class_results;
  std::optional<double> mean_rho;
  std::size_t feasible_class_count = 0;
  double min_rho = std::numeric_limits<double>::quiet_NaN();
  double max_rho = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline HeuristicResult evaluate_classes(const PanelDataset& data, const PartitionPlan& plan,
                                        const SbmConfig& config) {
  const std::size_t e = data.dmu_index(plan.evaluated);
  HeuristicResult out;
  double sum = 0.0;
  for (const auto& members : plan.classes) {
    std::vector<std::size_t> ref;
    for (const auto& id : members) ref.push_back(data.dmu_index(id));
    if (config.variant == Variant::Standard) ref.push_back(e);
    std::sort(ref.begin(), ref.end());
    auto r = evaluate_dmu(data, e, ref, config);
    if (r.optimal()) {
      ++out.feasible_class_count;
      sum += r.rho;
      if (out.feasible_class_count == 1) {
        out.min_rho = out.max_rho = r.rho;
      } else {
        out.min_rho = std::min(out.min_rho, r.rho);
        out.max_rho = std::max(out.max_rho, r.rho);
      }
    }
    out.class_results.push_back(std::move(r));
  }
  if (out.feasible_class_count > 0) out.mean_rho = sum / static_cast<double>(out.feasible_class_count);
  return out;
}

}  // namespace detail

/// Throws AllClassesInfeasible when no class solves (SuperEfficiency only;
/// Standard classes always contain the evaluated unit and are feasible).
inline HeuristicResult evaluate_heuristic(const PanelDataset& data, const PartitionPlan& plan,
                                          const SbmConfig& config) {
  auto out = detail::evaluate_classes(data, plan, config);
  if (!out.mean_rho && config.variant == Variant::SuperEfficiency)
    throw HeuristicError(HeuristicErrorKind::AllClassesInfeasible, "every class is infeasible for " + plan.evaluated);
  return out;
}

/// Partition the other DMUs into p classes, score the evaluated DMU against
/// each class, average over the classes that solved.
inline HeuristicResult evaluate_heuristic(const PanelDataset& data, const std::string& evaluated, std::size_t p,
                                          std::uint64_t seed, const SbmConfig& config) {
  if (!data.find_dmu(evaluated)) throw HeuristicError(HeuristicErrorKind::UnknownDmu, evaluated);
  return evaluate_heuristic(data, partition(data.dmu_ids(), evaluated, p, seed), config);
}

struct RankedHeuristic {
  std::string dmu;
  HeuristicResult result;
};

inline std::vector<RankedHeuristic> evaluate_all_heuristic(const PanelDataset& data, std::size_t p,
                                                           std::uint64_t seed, const SbmConfig& config,
                                                           std::size_t jobs = default_jobs()) {
  resolve_weights(data, config);
  if (p == 0 || p + 1 > data.dmu_count())
    throw HeuristicError(HeuristicErrorKind::PTooLarge, "p=" + std::to_string(p) + " needs at least " +
                                                            std::to_string(p + 1) + " DMUs");
  std::vector<RankedHeuristic> rows(data.dmu_count());
  parallel_for(data.dmu_count(), jobs, [&](std::size_t j) {
    rows[j].dmu = data.dmu_ids()[j];
    // A unit with no feasible class is ranked last rather than aborting the run.
    rows[j].result = detail::evaluate_classes(data, partition(data.dmu_ids(), rows[j].dmu, p, seed), config);
  });
  sort_ranking(
      rows, [](const RankedHeuristic& r) { return *r.result.mean_rho; },
      [](const RankedHeuristic& r) { return r.result.mean_rho.has_value(); });
  return rows;
}

}  // namespace frontier_dyn
