#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace frontier_dyn::lp {

enum class Sense { LessEqual, Equal, GreaterEqual };

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

inline std::string_view status_name(Status s) {
  switch (s) {
    case Status::Optimal: return "Optimal";
    case Status::Infeasible: return "Infeasible";
    case Status::Unbounded: return "Unbounded";
    case Status::IterationLimit: return "IterationLimit";
  }
  return "?";
}

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
/// Pivots smaller than this fraction of the largest column entry are refused.
inline constexpr double kPivotTolerance = 1e-7;

class InvalidProgram : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense minimization problem: min c'x s.t. A x (sense) b, lower <= x <= upper.
/// A is stored row-major. Lower bounds default to 0, upper bounds to +inf.
class LinearProgram {
 public:
  explicit LinearProgram(std::size_t num_vars)
      : cols_(num_vars), objective_(num_vars, 0.0), lower_(num_vars, 0.0), upper_(num_vars, kInfinity) {}

  std::size_t num_vars() const noexcept { return cols_; }
  std::size_t num_rows() const noexcept { return rhs_.size(); }

  void set_objective(std::size_t col, double c) { objective_.at(col) = c; }
  double objective(std::size_t col) const { return objective_.at(col); }
  std::span<const double> objective() const noexcept { return objective_; }

  std::size_t add_row(Sense sense, double rhs) {
    senses_.push_back(sense);
    rhs_.push_back(rhs);
    matrix_.resize(matrix_.size() + cols_, 0.0);
    return rhs_.size() - 1;
  }

  std::size_t add_row(std::span<const double> coefficients, Sense sense, double rhs) {
    if (coefficients.size() != cols_) throw InvalidProgram("row length does not match column count");
    const std::size_t r = add_row(sense, rhs);
    std::copy(coefficients.begin(), coefficients.end(), matrix_.begin() + static_cast<std::ptrdiff_t>(r * cols_));
    return r;
  }

  void set_coefficient(std::size_t row, std::size_t col, double v) {
    check_index(row, col);
    matrix_[row * cols_ + col] = v;
  }
  void add_coefficient(std::size_t row, std::size_t col, double v) {
    check_index(row, col);
    matrix_[row * cols_ + col] += v;
  }
  double coefficient(std::size_t row, std::size_t col) const {
    check_index(row, col);
    return matrix_[row * cols_ + col];
  }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(matrix_).subspan(r * cols_, cols_);
  }

  Sense sense(std::size_t row) const { return senses_.at(row); }
  double rhs(std::size_t row) const { return rhs_.at(row); }

  void set_bounds(std::size_t col, double lower, double upper) {
    lower_.at(col) = lower;
    upper_.at(col) = upper;
  }
  double lower(std::size_t col) const { return lower_.at(col); }
  double upper(std::size_t col) const { return upper_.at(col); }

  /// Throws InvalidProgram on non-finite data or inverted bounds.
  void validate() const {
    const auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(objective_.begin(), objective_.end(), finite)) throw InvalidProgram("non-finite objective");
    if (!std::all_of(matrix_.begin(), matrix_.end(), finite)) throw InvalidProgram("non-finite coefficient");
    if (!std::all_of(rhs_.begin(), rhs_.end(), finite)) throw InvalidProgram("non-finite rhs");
    for (std::size_t j = 0; j < cols_; ++j) {
      if (std::isnan(lower_[j]) || std::isnan(upper_[j]) || lower_[j] > upper_[j] || lower_[j] == kInfinity ||
          upper_[j] == -kInfinity)
        throw InvalidProgram("bad bounds on column " + std::to_string(j));
    }
  }

 private:
  void check_index(std::size_t row, std::size_t col) const {
    if (row >= rhs_.size() || col >= cols_) throw std::out_of_range("coefficient index out of range");
  }

  std::size_t cols_;
  std::vector<double> objective_;
  std::vector<double> matrix_;
  std::vector<Sense> senses_;
  std::vector<double> rhs_;
  std::vector<double> lower_;
  std::vector<double> upper_;
};

struct SolverOptions {
  double tol = 1e-9;
  std::size_t max_iter = 50000;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  std::size_t stall_threshold = 50;
  std::size_t refactor_interval = 32;
};

struct LpSolution {
  Status status = Status::Infeasible;
  double objective = 0.0;
  std::vector<double> primal;  // empty unless Optimal
  std::size_t iterations = 0;
};

/// Largest violation of rows and bounds by x.
inline double max_violation(const LinearProgram& lp, std::span<const double> x) {
  double worst = 0.0;
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    const auto a = lp.row(i);
    double lhs = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) lhs += a[j] * x[j];
    const double d = lhs - lp.rhs(i);
    switch (lp.sense(i)) {
      case Sense::LessEqual: worst = std::max(worst, d); break;
      case Sense::GreaterEqual: worst = std::max(worst, -d); break;
      case Sense::Equal: worst = std::max(worst, std::abs(d)); break;
    }
  }
  for (std::size_t j = 0; j < lp.num_vars(); ++j) {
    worst = std::max(worst, lp.lower(j) - x[j]);
    worst = std::max(worst, x[j] - lp.upper(j));
  }
  return worst;
}

namespace detail {

/// Revised primal simplex on  min c'x, A x = b, x >= 0, b >= 0  with an
/// explicit dense basis inverse, refactorized periodically.
class RevisedSimplex {
 public:
  RevisedSimplex(std::size_t rows, std::size_t cols, const SolverOptions& opt)
      : m_(rows), n_(cols), opt_(opt), a_(rows * cols, 0.0), b_(rows, 0.0), artificial_(cols, 0) {}

  // Column-major coefficient access.
  double& at(std::size_t row, std::size_t col) { return a_[col * m_ + row]; }
  double& rhs(std::size_t row) { return b_[row]; }
  void mark_artificial(std::size_t col) { artificial_[col] = 1; }
  void set_basis(std::vector<std::size_t> basis) { basis_ = std::move(basis); }

  std::size_t iterations() const noexcept { return iterations_; }

  /// Full two-phase solve for the given phase-2 costs.
  Status solve(const std::vector<double>& cost, std::vector<double>& x) {
    in_basis_.assign(n_, 0);
    for (auto c : basis_) in_basis_[c] = 1;
    refactor();

    const bool need_phase1 = std::any_of(basis_.begin(), basis_.end(), [&](std::size_t c) { return artificial_[c]; });
    if (need_phase1) {
      std::vector<double> phase1(n_, 0.0);
      for (std::size_t j = 0; j < n_; ++j)
        if (artificial_[j]) phase1[j] = 1.0;
      const Status s = iterate(phase1, true);
      if (s == Status::IterationLimit) return s;
      refactor();
      double infeasibility = 0.0;
      for (std::size_t i = 0; i < m_; ++i)
        if (artificial_[basis_[i]]) infeasibility += xb_[i];
      double bnorm = 0.0;
      for (double v : b_) bnorm = std::max(bnorm, std::abs(v));
      if (infeasibility > 100.0 * opt_.tol * (1.0 + bnorm)) return Status::Infeasible;
      drive_out_artificials();
    }

    const Status s = iterate(cost, false);
    if (s != Status::Optimal) return s;
    refactor();
    x.assign(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) x[basis_[i]] = std::max(0.0, xb_[i]);
    return Status::Optimal;
  }

 private:
  double dot_column(const double* row, std::size_t col) const {
    const double* c = &a_[col * m_];
    double s = 0.0;
    for (std::size_t k = 0; k < m_; ++k) s += row[k] * c[k];
    return s;
  }

  void refactor() {
    // Gauss-Jordan with partial pivoting on [B | I].
    std::vector<double> work(m_ * m_);
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t k = 0; k < m_; ++k) work[i * m_ + k] = a_[basis_[k] * m_ + i];
    binv_.assign(m_ * m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) binv_[i * m_ + i] = 1.0;
    for (std::size_t col = 0; col < m_; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < m_; ++r)
        if (std::abs(work[r * m_ + col]) > std::abs(work[piv * m_ + col])) piv = r;
      const double p = work[piv * m_ + col];
      if (std::abs(p) < 1e-14) throw std::runtime_error("simplex basis became singular");
      if (piv != col)
        for (std::size_t k = 0; k < m_; ++k) {
          std::swap(work[piv * m_ + k], work[col * m_ + k]);
          std::swap(binv_[piv * m_ + k], binv_[col * m_ + k]);
        }
      for (std::size_t k = 0; k < m_; ++k) {
        work[col * m_ + k] /= p;
        binv_[col * m_ + k] /= p;
      }
      for (std::size_t r = 0; r < m_; ++r) {
        if (r == col) continue;
        const double f = work[r * m_ + col];
        if (f == 0.0) continue;
        for (std::size_t k = 0; k < m_; ++k) {
          work[r * m_ + k] -= f * work[col * m_ + k];
          binv_[r * m_ + k] -= f * binv_[col * m_ + k];
        }
      }
    }
    xb_.assign(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < m_; ++k) s += binv_[i * m_ + k] * b_[k];
      xb_[i] = std::abs(s) < 1e-13 ? 0.0 : s;
    }
    since_refactor_ = 0;
  }

  std::vector<double> ftran(std::size_t col) const {
    std::vector<double> alpha(m_);
    for (std::size_t i = 0; i < m_; ++i) alpha[i] = dot_column(&binv_[i * m_], col);
    return alpha;
  }

  void pivot(std::size_t r, std::size_t entering, const std::vector<double>& alpha, double theta) {
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      xb_[i] -= theta * alpha[i];
      if (xb_[i] < 0.0 && xb_[i] > -10.0 * opt_.tol) xb_[i] = 0.0;
    }
    xb_[r] = theta;
    double* prow = &binv_[r * m_];
    const double inv = 1.0 / alpha[r];
    for (std::size_t k = 0; k < m_; ++k) prow[k] *= inv;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r || alpha[i] == 0.0) continue;
      double* row = &binv_[i * m_];
      const double f = alpha[i];
      for (std::size_t k = 0; k < m_; ++k) row[k] -= f * prow[k];
    }
    in_basis_[basis_[r]] = 0;
    in_basis_[entering] = 1;
    basis_[r] = entering;
    ++iterations_;
    if (++since_refactor_ >= opt_.refactor_interval) refactor();
  }

  Status iterate(const std::vector<double>& cost, bool phase1) {
    std::vector<double> y(m_);
    std::size_t stall = 0;
    bool bland = false;
    for (;;) {
      if (iterations_ >= opt_.max_iter) return Status::IterationLimit;

      std::fill(y.begin(), y.end(), 0.0);
      for (std::size_t i = 0; i < m_; ++i) {
        const double cb = cost[basis_[i]];
        if (cb == 0.0) continue;
        const double* row = &binv_[i * m_];
        for (std::size_t k = 0; k < m_; ++k) y[k] += cb * row[k];
      }

      // Pricing: Dantzig, lowest column index on ties; Bland when stalled.
      std::size_t entering = n_;
      double best = -opt_.tol;
      for (std::size_t j = 0; j < n_; ++j) {
        if (in_basis_[j] || (!phase1 && artificial_[j])) continue;
        const double d = cost[j] - dot_column(y.data(), j);
        if (d < best) {
          best = d;
          entering = j;
          if (bland) break;
        }
      }
      if (entering == n_) return Status::Optimal;

      const auto alpha = ftran(entering);
      double alpha_max = 0.0;
      for (double a : alpha) alpha_max = std::max(alpha_max, std::abs(a));
      const double piv_tol = std::max(opt_.tol, kPivotTolerance * alpha_max);
      // Basic artificials in phase 2 leave at ratio 0 on any nonzero entry.
      auto eligible = [&](std::size_t i) {
        if (!phase1 && artificial_[basis_[i]]) return std::abs(alpha[i]) > piv_tol;
        return alpha[i] > piv_tol;
      };
      auto ratio_of = [&](std::size_t i, double slack) {
        if (!phase1 && artificial_[basis_[i]]) return 0.0;
        return (std::max(0.0, xb_[i]) + slack) / alpha[i];
      };

      std::size_t leave = m_;
      double theta = kInfinity;
      if (bland) {
        // Minimum ratio, ties to the lowest basic variable index.
        for (std::size_t i = 0; i < m_; ++i) {
          if (!eligible(i)) continue;
          const double ratio = ratio_of(i, 0.0);
          const double tie = 1e-12 * (1.0 + std::abs(theta == kInfinity ? ratio : theta));
          if (leave == m_ || ratio < theta - tie ||
              (ratio <= theta + tie && basis_[i] < basis_[leave])) {
            theta = leave == m_ ? ratio : std::min(theta, ratio);
            leave = i;
          }
        }
      } else {
        // Harris two-pass: bound the step with a small feasibility allowance,
        // then take the largest pivot within it (lowest row on ties).
        double bound = kInfinity;
        for (std::size_t i = 0; i < m_; ++i)
          if (eligible(i)) bound = std::min(bound, ratio_of(i, opt_.tol));
        double best_alpha = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
          if (!eligible(i) || ratio_of(i, 0.0) > bound) continue;
          const double a = std::abs(alpha[i]);
          if (a > best_alpha) {
            best_alpha = a;
            leave = i;
          }
        }
        if (leave != m_) theta = ratio_of(leave, 0.0);
      }
      if (leave == m_) return Status::Unbounded;

      if (theta <= opt_.tol) {
        if (++stall >= opt_.stall_threshold) bland = true;
      } else {
        stall = 0;
        bland = false;
      }
      pivot(leave, entering, alpha, theta);
    }
  }

  void drive_out_artificials() {
    for (std::size_t r = 0; r < m_; ++r) {
      if (!artificial_[basis_[r]]) continue;
      const double* row = &binv_[r * m_];
      for (std::size_t j = 0; j < n_; ++j) {
        if (in_basis_[j] || artificial_[j]) continue;
        if (std::abs(dot_column(row, j)) <= 1e-7) continue;
        const auto alpha = ftran(j);
        pivot(r, j, alpha, std::max(0.0, xb_[r]) / alpha[r]);
        break;
      }
      // A row with no eligible column is redundant; its artificial stays
      // basic at zero and is pinned there by the phase-2 ratio test.
    }
    refactor();
    for (auto& v : xb_)
      if (v < 0.0) v = 0.0;
  }

  std::size_t m_;
  std::size_t n_;
  SolverOptions opt_;
  std::vector<double> a_;
  std::vector<double> b_;
  std::vector<char> artificial_;
  std::vector<std::size_t> basis_;
  std::vector<char> in_basis_;
  std::vector<double> binv_;
  std::vector<double> xb_;
  std::size_t iterations_ = 0;
  std::size_t since_refactor_ = 0;
};

inline double pow2_scale(double magnitude) {
  if (magnitude <= 0.0 || !std::isfinite(magnitude)) return 1.0;
  return std::exp2(-std::round(std::log2(magnitude)));
}

}  // namespace detail

/// Two-phase primal simplex. Mathematical outcomes are reported through
/// LpSolution::status; only malformed programs throw.
inline LpSolution solve(const LinearProgram& lp, const SolverOptions& opt = {}) {
  lp.validate();
  if (!(opt.tol > 0.0) || opt.max_iter == 0) throw InvalidProgram("tol and max_iter must be positive");

  const std::size_t nv = lp.num_vars();

  // Map each original column onto non-negative structural columns.
  enum class Map { Shift, Reflect, Split };
  struct ColumnMap {
    Map kind;
    std::size_t col;
    double offset;
  };
  std::vector<ColumnMap> maps(nv);
  std::size_t ns = 0;
  std::vector<std::size_t> bound_rows;  // original columns needing x' <= ub - lb
  for (std::size_t j = 0; j < nv; ++j) {
    const double lo = lp.lower(j), hi = lp.upper(j);
    if (std::isfinite(lo)) {
      maps[j] = {Map::Shift, ns++, lo};
      if (std::isfinite(hi)) bound_rows.push_back(j);
    } else if (std::isfinite(hi)) {
      maps[j] = {Map::Reflect, ns++, hi};
    } else {
      maps[j] = {Map::Split, ns, 0.0};
      ns += 2;
    }
  }

  const std::size_t m = lp.num_rows() + bound_rows.size();
  std::vector<double> rows(m * ns, 0.0);
  std::vector<double> rhs(m, 0.0);
  std::vector<Sense> senses(m);
  std::vector<double> cost(ns, 0.0);

  auto place = [&](std::size_t r, std::size_t j, double a) {
    const auto& mp = maps[j];
    switch (mp.kind) {
      case Map::Shift:
        rows[r * ns + mp.col] += a;
        rhs[r] -= a * mp.offset;
        break;
      case Map::Reflect:
        rows[r * ns + mp.col] -= a;
        rhs[r] -= a * mp.offset;
        break;
      case Map::Split:
        rows[r * ns + mp.col] += a;
        rows[r * ns + mp.col + 1] -= a;
        break;
    }
  };
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    rhs[i] = lp.rhs(i);
    senses[i] = lp.sense(i);
    const auto a = lp.row(i);
    for (std::size_t j = 0; j < nv; ++j)
      if (a[j] != 0.0) place(i, j, a[j]);
  }
  for (std::size_t k = 0; k < bound_rows.size(); ++k) {
    const std::size_t r = lp.num_rows() + k;
    const std::size_t j = bound_rows[k];
    rows[r * ns + maps[j].col] = 1.0;
    rhs[r] = lp.upper(j) - lp.lower(j);
    senses[r] = Sense::LessEqual;
  }
  for (std::size_t j = 0; j < nv; ++j) {
    const double c = lp.objective(j);
    const auto& mp = maps[j];
    if (mp.kind == Map::Split) {
      cost[mp.col] = c;
      cost[mp.col + 1] = -c;
    } else {
      cost[mp.col] = mp.kind == Map::Shift ? c : -c;
    }
  }

  // Power-of-two equilibration: rows first, then columns.
  std::vector<double> col_scale(ns, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    double big = 0.0;
    for (std::size_t j = 0; j < ns; ++j) big = std::max(big, std::abs(rows[i * ns + j]));
    const double s = detail::pow2_scale(big);
    for (std::size_t j = 0; j < ns; ++j) rows[i * ns + j] *= s;
    rhs[i] *= s;
  }
  for (std::size_t j = 0; j < ns; ++j) {
    double big = 0.0;
    for (std::size_t i = 0; i < m; ++i) big = std::max(big, std::abs(rows[i * ns + j]));
    col_scale[j] = detail::pow2_scale(big);
    for (std::size_t i = 0; i < m; ++i) rows[i * ns + j] *= col_scale[j];
    cost[j] *= col_scale[j];
  }

  for (std::size_t i = 0; i < m; ++i) {
    if (rhs[i] < 0.0) {
      rhs[i] = -rhs[i];
      for (std::size_t j = 0; j < ns; ++j) rows[i * ns + j] = -rows[i * ns + j];
      if (senses[i] == Sense::LessEqual)
        senses[i] = Sense::GreaterEqual;
      else if (senses[i] == Sense::GreaterEqual)
        senses[i] = Sense::LessEqual;
    }
  }

  // Column layout: structural | slack or surplus per inequality | artificials.
  std::size_t n_slack = 0, n_art = 0;
  for (auto s : senses) {
    if (s != Sense::Equal) ++n_slack;
    if (s != Sense::LessEqual) ++n_art;
  }
  const std::size_t n_total = ns + n_slack + n_art;
  detail::RevisedSimplex simplex(m, n_total, opt);
  for (std::size_t i = 0; i < m; ++i) {
    simplex.rhs(i) = rhs[i];
    for (std::size_t j = 0; j < ns; ++j)
      if (rows[i * ns + j] != 0.0) simplex.at(i, j) = rows[i * ns + j];
  }
  std::vector<std::size_t> basis(m);
  std::size_t next_slack = ns, next_art = ns + n_slack;
  for (std::size_t i = 0; i < m; ++i) {
    if (senses[i] == Sense::LessEqual) {
      simplex.at(i, next_slack) = 1.0;
      basis[i] = next_slack++;
      continue;
    }
    if (senses[i] == Sense::GreaterEqual) simplex.at(i, next_slack++) = -1.0;
    simplex.at(i, next_art) = 1.0;
    simplex.mark_artificial(next_art);
    basis[i] = next_art++;
  }
  simplex.set_basis(std::move(basis));

  std::vector<double> full_cost(n_total, 0.0);
  std::copy(cost.begin(), cost.end(), full_cost.begin());

  LpSolution out;
  std::vector<double> xs;
  out.status = simplex.solve(full_cost, xs);
  out.iterations = simplex.iterations();
  if (out.status != Status::Optimal) return out;

  out.primal.assign(nv, 0.0);
  for (std::size_t j = 0; j < nv; ++j) {
    const auto& mp = maps[j];
    const double v = xs[mp.col] * col_scale[mp.col];
    switch (mp.kind) {
      case Map::Shift: out.primal[j] = mp.offset + v; break;
      case Map::Reflect: out.primal[j] = mp.offset - v; break;
      case Map::Split: out.primal[j] = v - xs[mp.col + 1] * col_scale[mp.col + 1]; break;
    }
  }
  double obj = 0.0;
  for (std::size_t j = 0; j < nv; ++j) obj += lp.objective(j) * out.primal[j];
  out.objective = obj;
  return out;
}

}  // namespace frontier_dyn::lp
