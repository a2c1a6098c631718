#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "frontier_dyn/lp_solver.hpp"
#include "frontier_dyn/panel_data.hpp"
#include "frontier_dyn/util.hpp"

namespace frontier_dyn {

enum class Variant { Standard, SuperEfficiency };

inline std::string_view variant_name(Variant v) {
  return v == Variant::Standard ? "standard" : "super";
}

struct SbmConfig {
  /// W^t per period; empty means all ones.
  std::vector<double> period_weights;
  Variant variant = Variant::Standard;
  /// Convexity row per period.
  bool vrs = true;
  double zero_denominator_epsilon = 1e-12;
  lp::SolverOptions solver;
};

enum class DeaErrorKind {
  EmptyReferenceSet,
  EvaluatedNotInReference,
  EvaluatedInReference,
  UnknownDmu,
  InvalidConfig,
};

inline std::string_view error_kind_name(DeaErrorKind k) {
  switch (k) {
    case DeaErrorKind::EmptyReferenceSet: return "EmptyReferenceSet";
    case DeaErrorKind::EvaluatedNotInReference: return "EvaluatedNotInReference";
    case DeaErrorKind::EvaluatedInReference: return "EvaluatedInReference";
    case DeaErrorKind::UnknownDmu: return "UnknownDmu";
    case DeaErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "?";
}

class DeaError : public std::invalid_argument {
 public:
  DeaError(DeaErrorKind kind, const std::string& detail)
      : std::invalid_argument(std::string(error_kind_name(kind)) + ": " + detail), kind_(kind) {}
  DeaErrorKind kind() const noexcept { return kind_; }

 private:
  DeaErrorKind kind_;
};

/// Contracting is the slacks-based measure (score <= 1); Expanding is the
/// super-efficiency SBM where the evaluated unit must move outward to reach
/// the frontier spanned by the reference set (score >= 1).
enum class SbmForm { Contracting, Expanding };

struct PeriodSlacks {
  std::vector<double> input;      // s-   (Expanding: input expansion)
  std::vector<double> output;     // s+   (Expanding: output reduction)
  std::vector<double> good_link;  // s^good
  std::vector<double> bad_link;   // s^bad
};

struct EfficiencyResult {
  lp::Status status = lp::Status::Infeasible;
  double rho = std::numeric_limits<double>::quiet_NaN();
  std::vector<PeriodSlacks> slacks;
  /// lambdas[t][r] weights reference[r] in period t.
  std::vector<std::vector<double>> lambdas;
  std::vector<std::size_t> reference;
  std::size_t dropped_ratio_terms = 0;
  /// Result comes from the Expanding form.
  bool super_stage = false;
  std::size_t lp_iterations = 0;

  bool optimal() const noexcept { return status == lp::Status::Optimal; }

  double max_slack() const {
    double m = 0.0;
    for (const auto& p : slacks)
      for (const auto* v : {&p.input, &p.output, &p.good_link, &p.bad_link})
        for (double s : *v) m = std::max(m, s);
    return m;
  }
};

/// Column positions of the linearized model. Columns are the scaled
/// lambdas (period-major), then per period the input, output, good-link and
/// bad-link slacks, then the Charnes-Cooper scale q.
struct ModelLayout {
  std::size_t periods = 0;
  std::size_t refs = 0;
  std::size_t n_input = 0;
  std::size_t n_output = 0;
  std::size_t n_good = 0;
  std::size_t n_bad = 0;

  std::size_t slacks_per_period() const { return n_input + n_output + n_good + n_bad; }
  std::size_t lambda(std::size_t t, std::size_t r) const { return t * refs + r; }
  std::size_t slack_base(std::size_t t) const { return periods * refs + t * slacks_per_period(); }
  std::size_t input_slack(std::size_t t, std::size_t i) const { return slack_base(t) + i; }
  std::size_t output_slack(std::size_t t, std::size_t i) const { return slack_base(t) + n_input + i; }
  std::size_t good_slack(std::size_t t, std::size_t i) const { return slack_base(t) + n_input + n_output + i; }
  std::size_t bad_slack(std::size_t t, std::size_t i) const {
    return slack_base(t) + n_input + n_output + n_good + i;
  }
  std::size_t scale() const { return periods * refs + periods * slacks_per_period(); }
  std::size_t columns() const { return scale() + 1; }
};

struct SbmProgram {
  lp::LinearProgram lp;
  ModelLayout layout;
  SbmForm form = SbmForm::Contracting;
  std::size_t evaluated = 0;
  std::vector<std::size_t> reference;
  std::size_t dropped_ratio_terms = 0;
};

inline std::vector<double> resolve_weights(const PanelDataset& data, const SbmConfig& config) {
  std::vector<double> w = config.period_weights;
  if (w.empty()) w.assign(data.period_count(), 1.0);
  if (w.size() != data.period_count())
    throw DeaError(DeaErrorKind::InvalidConfig, "expected " + std::to_string(data.period_count()) +
                                                    " period weights, got " + std::to_string(w.size()));
  for (double v : w)
    if (!(v > 0.0) || !std::isfinite(v)) throw DeaError(DeaErrorKind::InvalidConfig, "period weights must be > 0");
  if (!(config.zero_denominator_epsilon > 0.0))
    throw DeaError(DeaErrorKind::InvalidConfig, "zero_denominator_epsilon must be > 0");
  return w;
}

/// Charnes-Cooper linearization of the dynamic SBM for one evaluated DMU
/// (indices into `data`). Membership rules of the variant are not checked
/// here; see build_model.
inline SbmProgram build_program(const PanelDataset& data, std::size_t evaluated,
                                const std::vector<std::size_t>& reference, const SbmConfig& config,
                                SbmForm form) {
  if (reference.empty()) throw DeaError(DeaErrorKind::EmptyReferenceSet, "reference set is empty");
  if (evaluated >= data.dmu_count()) throw DeaError(DeaErrorKind::UnknownDmu, "evaluated index out of range");
  for (auto r : reference)
    if (r >= data.dmu_count()) throw DeaError(DeaErrorKind::UnknownDmu, "reference index out of range");
  const auto weights = resolve_weights(data, config);

  const auto in = data.variables_with_role(VariableRole::Input);
  const auto out = data.variables_with_role(VariableRole::Output);
  const auto good = data.variables_with_role(VariableRole::GoodLink);
  const auto bad = data.variables_with_role(VariableRole::BadLink);

  ModelLayout L;
  L.periods = data.period_count();
  L.refs = reference.size();
  L.n_input = in.size();
  L.n_output = out.size();
  L.n_good = good.size();
  L.n_bad = bad.size();
  const std::size_t T = L.periods;
  const std::size_t q = L.scale();
  const double eps = config.zero_denominator_epsilon;
  const bool expanding = form == SbmForm::Expanding;

  SbmProgram prog{lp::LinearProgram(L.columns()), L, form, evaluated, reference, 0};
  auto& lp = prog.lp;

  // Balance rows. Contracting: sum(lambda v) +/- s = q v0.
  // Expanding: inputs  sum(lambda v) - t <= q v0, outputs sum(lambda v) + t >= q v0.
  auto balance_row = [&](std::size_t t, std::size_t var, std::size_t slack_col, bool input_like) {
    const double v0 = data.value(evaluated, t, var);
    lp::Sense sense = lp::Sense::Equal;
    double slack_coef = input_like ? 1.0 : -1.0;
    if (expanding) {
      sense = input_like ? lp::Sense::LessEqual : lp::Sense::GreaterEqual;
      slack_coef = -slack_coef;
    }
    const std::size_t row = lp.add_row(sense, 0.0);
    for (std::size_t r = 0; r < L.refs; ++r) lp.set_coefficient(row, L.lambda(t, r), data.value(reference[r], t, var));
    lp.set_coefficient(row, slack_col, slack_coef);
    lp.set_coefficient(row, q, -v0);
  };
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < in.size(); ++i) balance_row(t, in[i], L.input_slack(t, i), true);
    for (std::size_t i = 0; i < out.size(); ++i) balance_row(t, out[i], L.output_slack(t, i), false);
    for (std::size_t i = 0; i < good.size(); ++i) balance_row(t, good[i], L.good_slack(t, i), false);
    for (std::size_t i = 0; i < bad.size(); ++i) balance_row(t, bad[i], L.bad_slack(t, i), true);
  }

  // Link continuity: period t's carry-over measured with period-t values on both sides.
  for (std::size_t t = 0; t + 1 < T; ++t) {
    for (const auto* links : {&bad, &good})
      for (auto var : *links) {
        const std::size_t row = lp.add_row(lp::Sense::Equal, 0.0);
        for (std::size_t r = 0; r < L.refs; ++r) {
          const double z = data.value(reference[r], t, var);
          lp.set_coefficient(row, L.lambda(t, r), z);
          lp.set_coefficient(row, L.lambda(t + 1, r), -z);
        }
      }
  }

  if (config.vrs) {
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t row = lp.add_row(lp::Sense::Equal, 0.0);
      for (std::size_t r = 0; r < L.refs; ++r) lp.set_coefficient(row, L.lambda(t, r), 1.0);
      lp.set_coefficient(row, q, -1.0);
    }
  }

  // Outputs cannot be reduced below zero in the Expanding form.
  if (expanding) {
    for (std::size_t t = 0; t < T; ++t) {
      auto cap = [&](std::size_t var, std::size_t col) {
        const std::size_t row = lp.add_row(lp::Sense::LessEqual, 0.0);
        lp.set_coefficient(row, col, 1.0);
        lp.set_coefficient(row, q, -data.value(evaluated, t, var));
      };
      for (std::size_t i = 0; i < out.size(); ++i) cap(out[i], L.output_slack(t, i));
      for (std::size_t i = 0; i < good.size(); ++i) cap(good[i], L.good_slack(t, i));
    }
  }

  // Objective over the input side, normalization row over the output side.
  // Terms whose datum is below eps are dropped and the divisor shrinks.
  const std::size_t norm = lp.add_row(lp::Sense::Equal, 1.0);
  double weight_sum = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const double wt = weights[t] / static_cast<double>(T);
    weight_sum += wt;

    struct Term {
      std::size_t col;
      double datum;
    };
    std::vector<Term> num_terms, den_terms;
    std::size_t num_total = 0, den_total = 0;
    auto collect = [&](std::vector<Term>& terms, std::size_t& total, std::size_t var, std::size_t col) {
      ++total;
      const double v0 = data.value(evaluated, t, var);
      if (v0 < eps) {
        ++prog.dropped_ratio_terms;
        return;
      }
      terms.push_back({col, v0});
    };
    for (std::size_t i = 0; i < in.size(); ++i) collect(num_terms, num_total, in[i], L.input_slack(t, i));
    for (std::size_t i = 0; i < bad.size(); ++i) collect(num_terms, num_total, bad[i], L.bad_slack(t, i));
    for (std::size_t i = 0; i < out.size(); ++i) collect(den_terms, den_total, out[i], L.output_slack(t, i));
    for (std::size_t i = 0; i < good.size(); ++i) collect(den_terms, den_total, good[i], L.good_slack(t, i));

    const double num_sign = expanding ? 1.0 : -1.0;
    for (const auto& term : num_terms)
      lp.set_objective(term.col, num_sign * wt / (static_cast<double>(num_terms.size()) * term.datum));
    for (const auto& term : den_terms)
      lp.set_coefficient(norm, term.col, -num_sign * wt / (static_cast<double>(den_terms.size()) * term.datum));
  }
  lp.set_objective(q, weight_sum);
  lp.set_coefficient(norm, q, weight_sum);
  return prog;
}

/// Id-based builder enforcing the variant's reference-set rules.
/// SuperEfficiency builds the Expanding form.
inline SbmProgram build_model(const PanelDataset& data, std::string_view evaluated,
                              const std::vector<std::string>& reference, const SbmConfig& config) {
  if (reference.empty()) throw DeaError(DeaErrorKind::EmptyReferenceSet, "reference set is empty");
  const auto e = data.find_dmu(evaluated);
  if (!e) throw DeaError(DeaErrorKind::UnknownDmu, std::string(evaluated));
  std::vector<std::size_t> ref;
  bool contains = false;
  for (const auto& id : reference) {
    const auto r = data.find_dmu(id);
    if (!r) throw DeaError(DeaErrorKind::UnknownDmu, id);
    contains |= *r == *e;
    ref.push_back(*r);
  }
  if (config.variant == Variant::Standard && !contains)
    throw DeaError(DeaErrorKind::EvaluatedNotInReference, std::string(evaluated));
  if (config.variant == Variant::SuperEfficiency && contains)
    throw DeaError(DeaErrorKind::EvaluatedInReference, std::string(evaluated));
  return build_program(data, *e, ref, config,
                       config.variant == Variant::Standard ? SbmForm::Contracting : SbmForm::Expanding);
}

inline EfficiencyResult solve_program(const SbmProgram& prog, const lp::SolverOptions& solver) {
  EfficiencyResult res;
  res.reference = prog.reference;
  res.dropped_ratio_terms = prog.dropped_ratio_terms;
  res.super_stage = prog.form == SbmForm::Expanding;

  const auto sol = lp::solve(prog.lp, solver);
  res.status = sol.status;
  res.lp_iterations = sol.iterations;
  if (sol.status != lp::Status::Optimal) return res;

  const auto& L = prog.layout;
  const auto& x = sol.primal;
  const double q = x[L.scale()];
  const auto unscale = [q](double v) { return std::max(0.0, v / q); };
  res.rho = sol.objective;
  res.lambdas.assign(L.periods, std::vector<double>(L.refs, 0.0));
  res.slacks.resize(L.periods);
  for (std::size_t t = 0; t < L.periods; ++t) {
    for (std::size_t r = 0; r < L.refs; ++r) res.lambdas[t][r] = unscale(x[L.lambda(t, r)]);
    auto& s = res.slacks[t];
    for (std::size_t i = 0; i < L.n_input; ++i) s.input.push_back(unscale(x[L.input_slack(t, i)]));
    for (std::size_t i = 0; i < L.n_output; ++i) s.output.push_back(unscale(x[L.output_slack(t, i)]));
    for (std::size_t i = 0; i < L.n_good; ++i) s.good_link.push_back(unscale(x[L.good_slack(t, i)]));
    for (std::size_t i = 0; i < L.n_bad; ++i) s.bad_link.push_back(unscale(x[L.bad_slack(t, i)]));
  }
  return res;
}

/// Index-based evaluation. SuperEfficiency first scores the unit against the
/// reference set with the ordinary SBM; only when the unit lies outside the
/// reference hull (that model is infeasible) is the Expanding form solved.
inline EfficiencyResult evaluate_dmu(const PanelDataset& data, std::size_t evaluated,
                                     const std::vector<std::size_t>& reference, const SbmConfig& config) {
  if (reference.empty()) throw DeaError(DeaErrorKind::EmptyReferenceSet, "reference set is empty");
  const bool contains = std::find(reference.begin(), reference.end(), evaluated) != reference.end();
  if (config.variant == Variant::Standard) {
    if (!contains) throw DeaError(DeaErrorKind::EvaluatedNotInReference, data.dmu_ids().at(evaluated));
    return solve_program(build_program(data, evaluated, reference, config, SbmForm::Contracting), config.solver);
  }
  if (contains) throw DeaError(DeaErrorKind::EvaluatedInReference, data.dmu_ids().at(evaluated));
  auto inside = solve_program(build_program(data, evaluated, reference, config, SbmForm::Contracting), config.solver);
  if (inside.status != lp::Status::Infeasible) return inside;
  auto outside = solve_program(build_program(data, evaluated, reference, config, SbmForm::Expanding), config.solver);
  outside.lp_iterations += inside.lp_iterations;
  return outside;
}

inline EfficiencyResult evaluate_dmu(const PanelDataset& data, std::string_view evaluated,
                                     const std::vector<std::string>& reference, const SbmConfig& config) {
  const auto e = data.find_dmu(evaluated);
  if (!e) throw DeaError(DeaErrorKind::UnknownDmu, std::string(evaluated));
  std::vector<std::size_t> ref;
  for (const auto& id : reference) {
    const auto r = data.find_dmu(id);
    if (!r) throw DeaError(DeaErrorKind::UnknownDmu, id);
    ref.push_back(*r);
  }
  return evaluate_dmu(data, *e, ref, config);
}

/// Reference set used by evaluate_all for one unit under the variant.
inline std::vector<std::size_t> default_reference(const PanelDataset& data, std::size_t evaluated, Variant v) {
  std::vector<std::size_t> ref;
  for (std::size_t j = 0; j < data.dmu_count(); ++j)
    if (v == Variant::Standard || j != evaluated) ref.push_back(j);
  return ref;
}

/// Scores compared at 1e-9 resolution so solver round-off cannot reorder ties.
inline long long rank_key(double rho) { return std::llround(rho * 1e9); }

struct RankedEfficiency {
  std::string dmu;
  EfficiencyResult result;
};

/// Descending rho, equal scores by dmu id, non-optimal statuses last.
template <typename T, typename ScoreFn, typename OkFn>
void sort_ranking(std::vector<T>& rows, ScoreFn score, OkFn ok) {
  std::sort(rows.begin(), rows.end(), [&](const T& a, const T& b) {
    const bool oa = ok(a), ob = ok(b);
    if (oa != ob) return oa;
    if (oa) {
      const auto ka = rank_key(score(a)), kb = rank_key(score(b));
      if (ka != kb) return ka > kb;
    }
    return a.dmu < b.dmu;
  });
}

inline std::vector<RankedEfficiency> evaluate_all(const PanelDataset& data, const SbmConfig& config,
                                                  std::size_t jobs = default_jobs()) {
  resolve_weights(data, config);
  std::vector<RankedEfficiency> rows(data.dmu_count());
  parallel_for(data.dmu_count(), jobs, [&](std::size_t j) {
    rows[j].dmu = data.dmu_ids()[j];
    rows[j].result = evaluate_dmu(data, j, default_reference(data, j, config.variant), config);
  });
  sort_ranking(
      rows, [](const RankedEfficiency& r) { return r.result.rho; },
      [](const RankedEfficiency& r) { return r.result.optimal(); });
  return rows;
}

/// Single-period SBM for ordinal period t (1-based). Good links act as
/// outputs and bad links as inputs; there are no continuity rows.
inline EfficiencyResult static_sbm(const PanelDataset& data, std::size_t period, std::string_view evaluated,
                                   const SbmConfig& config) {
  if (period < 1 || period > data.period_count())
    throw DeaError(DeaErrorKind::InvalidConfig, "period must be in 1.." + std::to_string(data.period_count()));
  const auto slice = period_slice(data, period - 1, true);
  SbmConfig cfg = config;
  cfg.period_weights.clear();
  const auto e = slice.find_dmu(evaluated);
  if (!e) throw DeaError(DeaErrorKind::UnknownDmu, std::string(evaluated));
  return evaluate_dmu(slice, *e, default_reference(slice, *e, cfg.variant), cfg);
}

/// static_sbm for every DMU of one period, in dataset order.
inline std::vector<EfficiencyResult> static_sbm_all(const PanelDataset& data, std::size_t period,
                                                    const SbmConfig& config, std::size_t jobs = default_jobs()) {
  if (period < 1 || period > data.period_count())
    throw DeaError(DeaErrorKind::InvalidConfig, "period must be in 1.." + std::to_string(data.period_count()));
  const auto slice = period_slice(data, period - 1, true);
  SbmConfig cfg = config;
  cfg.period_weights.clear();
  std::vector<EfficiencyResult> out(slice.dmu_count());
  parallel_for(slice.dmu_count(), jobs,
               [&](std::size_t j) { out[j] = evaluate_dmu(slice, j, default_reference(slice, j, cfg.variant), cfg); });
  return out;
}

}  // namespace frontier_dyn
