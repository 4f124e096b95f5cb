#pragma once

// Dense complex linear algebra used by the selectors and precoders:
// pivoted modified Gram-Schmidt with residual-norm tracking, Gauss-Jordan
// inversion, Gram/trace helpers and the zero-forcing pseudo-inverse.
//
// Every kernel takes an optional FlopCount*; see flops.hpp for the unit
// convention.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mumimo/error.hpp"
#include "mumimo/flops.hpp"

namespace mumimo {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

/// Pivot residual norms at or below this value are treated as rank loss.
inline constexpr double kRankTolerance = 1e-12;
/// Gauss-Jordan pivot magnitudes at or below this value mean singular.
inline constexpr double kSingularTolerance = 1e-12;

/// Dense row-major complex matrix, at least 1x1, finite entries.
class ComplexMatrix {
 public:
  ComplexMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols) {
    check_shape();
  }

  ComplexMatrix(std::size_t rows, std::size_t cols, CVector entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    check_shape();
    if (data_.size() != rows_ * cols_) {
      throw DimensionMismatch("matrix entry count " + std::to_string(data_.size()) +
                              " does not match " + std::to_string(rows_) + "x" +
                              std::to_string(cols_));
    }
    for (const auto& z : data_) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
        throw std::invalid_argument("ComplexMatrix: non-finite entry");
      }
    }
  }

  ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows)
      : ComplexMatrix(rows.size(), rows.size() == 0 ? 0 : rows.begin()->size(),
                      flatten(rows)) {}

  static ComplexMatrix identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static ComplexMatrix diagonal(std::span<const cplx> values) {
    ComplexMatrix m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
    return m;
  }

  static ComplexMatrix diagonal(std::initializer_list<cplx> values) {
    return diagonal(std::span<const cplx>(values.begin(), values.size()));
  }

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }

  cplx& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * cols_ + c];
  }

  [[nodiscard]] std::span<const cplx> entries() const noexcept { return data_; }

  [[nodiscard]] CVector column(std::size_t c) const {
    CVector out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  [[nodiscard]] ComplexMatrix adjoint() const {
    ComplexMatrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) out(c, r) = std::conj((*this)(r, c));
    return out;
  }

  friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

 private:
  void check_shape() const {
    if (rows_ == 0 || cols_ == 0) {
      throw std::invalid_argument("ComplexMatrix: dimensions must be at least 1x1");
    }
  }

  static CVector flatten(std::initializer_list<std::initializer_list<cplx>> rows) {
    CVector out;
    const std::size_t width = rows.size() == 0 ? 0 : rows.begin()->size();
    for (const auto& row : rows) {
      if (row.size() != width) throw DimensionMismatch("ragged matrix literal");
      out.insert(out.end(), row.begin(), row.end());
    }
    return out;
  }

  std::size_t rows_;
  std::size_t cols_;
  CVector data_;
};

inline ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionMismatch("matrix product: inner dimensions differ");
  ComplexMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cplx aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

inline CVector operator*(const ComplexMatrix& a, std::span<const cplx> x) {
  if (a.cols() != x.size()) throw DimensionMismatch("matrix-vector product: length mismatch");
  CVector out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    cplx acc = 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * x[k];
    out[i] = acc;
  }
  return out;
}

/// Largest absolute elementwise deviation.
inline double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch("max_abs_diff: shapes differ");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.entries().size(); ++i) {
    worst = std::max(worst, std::abs(a.entries()[i] - b.entries()[i]));
  }
  return worst;
}

inline double max_abs_diff(std::span<const cplx> a, std::span<const cplx> b) {
  if (a.size() != b.size()) throw DimensionMismatch("max_abs_diff: lengths differ");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

/// Column submatrix h(:, cols) in the given order.
inline ComplexMatrix select_columns(const ComplexMatrix& h, std::span<const std::size_t> cols) {
  if (cols.empty()) throw std::invalid_argument("select_columns: empty column list");
  ComplexMatrix out(h.rows(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] >= h.cols()) throw std::out_of_range("select_columns: column index out of range");
    for (std::size_t r = 0; r < h.rows(); ++r) out(r, j) = h(r, cols[j]);
  }
  return out;
}

inline cplx trace(const ComplexMatrix& a) {
  cplx t = 0.0;
  for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) t += a(i, i);
  return t;
}

// ---------------------------------------------------------------------------
// Gauss-Jordan
// ---------------------------------------------------------------------------

namespace detail {

// Inverts the n x n row-major matrix held in `a` (destroyed) into `inv`.
// Partial pivoting on the largest magnitude; returns false when singular.
inline bool gauss_jordan(std::vector<cplx>& a, std::size_t n, std::vector<cplx>& inv,
                         FlopCount* flops) {
  inv.assign(n * n, cplx{});
  for (std::size_t i = 0; i < n; ++i) inv[i * n + i] = 1.0;

  for (std::size_t c = 0; c < n; ++c) {
    std::size_t pivot = c;
    double best = std::norm(a[c * n + c]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double mag = std::norm(a[r * n + c]);
      if (mag > best) {
        best = mag;
        pivot = r;
      }
    }
    if (std::sqrt(best) <= kSingularTolerance) return false;
    if (pivot != c) {
      std::swap_ranges(a.begin() + c * n, a.begin() + (c + 1) * n, a.begin() + pivot * n);
      std::swap_ranges(inv.begin() + c * n, inv.begin() + (c + 1) * n, inv.begin() + pivot * n);
    }

    const cplx scale = 1.0 / a[c * n + c];
    a[c * n + c] = 1.0;
    for (std::size_t j = c + 1; j < n; ++j) a[c * n + j] *= scale;
    for (std::size_t j = 0; j < n; ++j) inv[c * n + j] *= scale;
    detail::tally(flops, 0, 1 + (n - c - 1) + n);

    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const cplx factor = a[r * n + c];
      if (factor == cplx{}) continue;
      a[r * n + c] = 0.0;
      for (std::size_t j = c + 1; j < n; ++j) a[r * n + j] -= factor * a[c * n + j];
      for (std::size_t j = 0; j < n; ++j) inv[r * n + j] -= factor * inv[c * n + j];
      detail::tally(flops, (n - c - 1) + n, (n - c - 1) + n);
    }
  }
  return true;
}

// Upper triangle of the Gram matrix h(:, cols) h(:, cols)^H, mirrored.
inline void gram_of_columns(const ComplexMatrix& h, std::span<const std::size_t> cols,
                            std::vector<cplx>& out, FlopCount* flops) {
  const std::size_t m = h.rows();
  out.assign(m * m, cplx{});
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a; b < m; ++b) {
      cplx acc = 0.0;
      for (const std::size_t c : cols) acc += h(a, c) * std::conj(h(b, c));
      out[a * m + b] = acc;
      out[b * m + a] = std::conj(acc);
    }
  }
  const std::uint64_t entries = m * (m + 1) / 2;
  detail::tally(flops, entries * (cols.size() - 1), entries * cols.size());
}

}  // namespace detail

/// Inverse by Gauss-Jordan row operations with partial pivoting.
inline ComplexMatrix gauss_jordan_inverse(const ComplexMatrix& a, FlopCount* flops = nullptr) {
  if (a.rows() != a.cols()) throw DimensionMismatch("gauss_jordan_inverse: matrix not square");
  const std::size_t n = a.rows();
  std::vector<cplx> work(a.entries().begin(), a.entries().end());
  std::vector<cplx> inv;
  if (!detail::gauss_jordan(work, n, inv, flops)) {
    throw Singular("gauss_jordan_inverse: pivot magnitude below tolerance");
  }
  return ComplexMatrix(n, n, std::move(inv));
}

/// h h^H.
inline ComplexMatrix gram(const ComplexMatrix& h, FlopCount* flops = nullptr) {
  std::vector<std::size_t> all(h.cols());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<cplx> g;
  detail::gram_of_columns(h, all, g, flops);
  return ComplexMatrix(h.rows(), h.rows(), std::move(g));
}

/// Zero-forcing power scaling Tr{(H_S H_S^H)^-1} for the column subset S,
/// at unit total transmit power. Throws Singular. The columns are taken in
/// ascending order, so the result is bit-identical for any ordering of S.
inline double gamma_of_columns(const ComplexMatrix& h, std::span<const std::size_t> cols,
                               FlopCount* flops = nullptr) {
  if (cols.size() < h.rows()) throw DimensionMismatch("gamma: fewer columns than rows");
  const std::size_t m = h.rows();
  std::vector<std::size_t> sorted(cols.begin(), cols.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<cplx> g;
  std::vector<cplx> inv;
  detail::gram_of_columns(h, sorted, g, flops);
  if (!detail::gauss_jordan(g, m, inv, flops)) {
    throw Singular("gamma: Gram matrix is singular");
  }
  double t = 0.0;
  for (std::size_t i = 0; i < m; ++i) t += inv[i * m + i].real();
  detail::tally(flops, m - 1, 0);
  return t;
}

/// Same as gamma_of_columns, but a singular subset scores +infinity.
inline double gamma_or_inf(const ComplexMatrix& h, std::span<const std::size_t> cols,
                           FlopCount* flops = nullptr) {
  try {
    return gamma_of_columns(h, cols, flops);
  } catch (const Singular&) {
    return std::numeric_limits<double>::infinity();
  }
}

inline double gamma(const ComplexMatrix& h, FlopCount* flops = nullptr) {
  std::vector<std::size_t> all(h.cols());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return gamma_of_columns(h, all, flops);
}

/// H^H (H H^H)^-1 for a wide, full-row-rank H.
inline ComplexMatrix pseudo_inverse(const ComplexMatrix& h, FlopCount* flops = nullptr) {
  if (h.rows() > h.cols()) throw DimensionMismatch("pseudo_inverse: expects rows <= cols");
  const ComplexMatrix inv = gauss_jordan_inverse(gram(h, flops), flops);
  return h.adjoint() * inv;
}

// ---------------------------------------------------------------------------
// Triangular helpers
// ---------------------------------------------------------------------------

/// Inverse of an upper-triangular matrix by back substitution.
inline ComplexMatrix inverse_upper_triangular(const ComplexMatrix& r) {
  if (r.rows() != r.cols()) throw DimensionMismatch("inverse_upper_triangular: not square");
  const std::size_t n = r.rows();
  ComplexMatrix a(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    if (std::abs(r(j, j)) <= kSingularTolerance) throw Singular("triangular factor is singular");
    a(j, j) = 1.0 / r(j, j);
    for (std::size_t i = j; i-- > 0;) {
      cplx acc = 0.0;
      for (std::size_t k = i + 1; k <= j; ++k) acc += r(i, k) * a(k, j);
      a(i, j) = -acc / r(i, i);
    }
  }
  return a;
}

/// Tr{R^-H R^-1}: the scaling factor computed from the triangular factor.
inline double gamma_from_r(const ComplexMatrix& r) {
  const ComplexMatrix a = inverse_upper_triangular(r);
  double sum = 0.0;
  for (const auto& z : a.entries()) sum += std::norm(z);
  return sum;
}

/// Sum of 1/R_ii^2, the diagonal-only lower bound on gamma.
inline double diagonal_bound(const ComplexMatrix& r) {
  double d = 0.0;
  for (std::size_t i = 0; i < std::min(r.rows(), r.cols()); ++i) d += 1.0 / std::norm(r(i, i));
  return d;
}

// ---------------------------------------------------------------------------
// Pivoted modified Gram-Schmidt
// ---------------------------------------------------------------------------

struct QrFactors {
  ComplexMatrix q;                       // rows x k, orthonormal columns
  ComplexMatrix r;                       // k x k upper triangular
  std::vector<std::size_t> perm;         // original column of each factor column
  std::vector<double> pivot_norms;       // tracked squared residual at each pick
  std::vector<std::size_t> remaining;    // unselected original columns
  std::vector<double> residual_norms;    // their tracked squared residuals
};

struct PivotRule {
  enum class Kind { max_norm, fixed_first, natural };

  Kind kind = Kind::max_norm;
  std::size_t first_column = 0;

  static constexpr PivotRule max_norm() noexcept { return {Kind::max_norm, 0}; }
  static constexpr PivotRule fixed_first(std::size_t column) noexcept {
    return {Kind::fixed_first, column};
  }
  /// No exchanges: columns are taken in their given order.
  static constexpr PivotRule natural() noexcept { return {Kind::natural, 0}; }
};

namespace detail {

inline std::vector<double> squared_column_norms(const ComplexMatrix& a, FlopCount* flops) {
  std::vector<double> norms(a.cols(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) norms[c] += std::norm(a(r, c));
  detail::tally(flops, a.cols() * (a.rows() - 1), a.cols() * a.rows());
  return norms;
}

}  // namespace detail

/// Step-wise modified Gram-Schmidt with column exchange.
///
/// Each advance() swaps the chosen column into the next factor position
/// (in Q, R, the tracked norms and the permutation), normalizes it, and
/// orthogonalizes every column to its right, downdating their tracked
/// squared norms by |R_im|^2.
class IncrementalQr {
 public:
  IncrementalQr(const ComplexMatrix& a, std::size_t max_steps, FlopCount* flops = nullptr)
      : IncrementalQr(a, max_steps, detail::squared_column_norms(a, flops), flops) {}

  IncrementalQr(const ComplexMatrix& a, std::size_t max_steps, std::vector<double> column_norms,
                FlopCount* flops = nullptr)
      : rows_(a.rows()),
        cols_(a.cols()),
        max_steps_(max_steps),
        q_(a.rows() * a.cols()),
        r_(max_steps * a.cols()),
        tnorms_(std::move(column_norms)),
        perm_(a.cols()),
        flops_(flops) {
    if (max_steps_ > std::min(rows_, cols_)) {
      throw DimensionMismatch("qrd: step count exceeds min(rows, cols)");
    }
    if (tnorms_.size() != cols_) throw DimensionMismatch("qrd: column norm count mismatch");
    for (std::size_t c = 0; c < cols_; ++c)
      for (std::size_t r = 0; r < rows_; ++r) q_[c * rows_ + r] = a(r, c);
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    pivot_norms_.reserve(max_steps_);
  }

  [[nodiscard]] std::size_t steps() const noexcept { return step_; }
  [[nodiscard]] std::size_t columns() const noexcept { return cols_; }
  [[nodiscard]] std::size_t original_index(std::size_t pos) const { return perm_.at(pos); }

  [[nodiscard]] std::size_t position_of(std::size_t original) const {
    const auto it = std::find(perm_.begin(), perm_.end(), original);
    if (it == perm_.end()) throw std::out_of_range("qrd: unknown column");
    return static_cast<std::size_t>(it - perm_.begin());
  }

  [[nodiscard]] double residual_norm(std::size_t pos) const { return tnorms_.at(pos); }

  /// Recomputed squared norm of the working column, bypassing the tracked value.
  [[nodiscard]] double fresh_residual_norm(std::size_t pos) const {
    double s = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) s += std::norm(q_[pos * rows_ + r]);
    return s;
  }

  /// Unprocessed position with the largest tracked norm; ties go to the
  /// lowest original column index.
  [[nodiscard]] std::size_t max_residual_position() const {
    std::size_t best = step_;
    for (std::size_t pos = step_ + 1; pos < cols_; ++pos) {
      if (tnorms_[pos] > tnorms_[best] ||
          (tnorms_[pos] == tnorms_[best] && perm_[pos] < perm_[best])) {
        best = pos;
      }
    }
    return best;
  }

  void advance(std::size_t pos) {
    if (step_ >= max_steps_) throw std::logic_error("qrd: all steps already taken");
    if (pos < step_ || pos >= cols_) throw std::out_of_range("qrd: pivot position out of range");
    if (tnorms_[pos] <= kRankTolerance) {
      throw RankDeficient("qrd: residual norm of column " + std::to_string(perm_[pos] + 1) +
                          " below tolerance");
    }
    const std::size_t i = step_;
    if (pos != i) {
      std::swap_ranges(q_.begin() + i * rows_, q_.begin() + (i + 1) * rows_,
                       q_.begin() + pos * rows_);
      for (std::size_t row = 0; row < i; ++row) std::swap(r_[row * cols_ + i], r_[row * cols_ + pos]);
      std::swap(tnorms_[i], tnorms_[pos]);
      std::swap(perm_[i], perm_[pos]);
    }
    pivot_norms_.push_back(tnorms_[i]);

    cplx* qi = q_.data() + i * rows_;
    const double rii = std::sqrt(fresh_residual_norm(i));
    detail::tally(flops_, rows_ - 1, rows_ + 1);
    if (rii <= kRankTolerance) {
      throw RankDeficient("qrd: column " + std::to_string(perm_[i] + 1) + " is dependent");
    }
    r_[i * cols_ + i] = rii;
    const double inv = 1.0 / rii;
    for (std::size_t r = 0; r < rows_; ++r) qi[r] *= inv;
    detail::tally(flops_, 0, rows_ + 1);

    for (std::size_t m = i + 1; m < cols_; ++m) {
      cplx* qm = q_.data() + m * rows_;
      cplx rim = 0.0;
      for (std::size_t r = 0; r < rows_; ++r) rim += std::conj(qi[r]) * qm[r];
      for (std::size_t r = 0; r < rows_; ++r) qm[r] -= rim * qi[r];
      r_[i * cols_ + m] = rim;
      tnorms_[m] = std::max(0.0, tnorms_[m] - std::norm(rim));
    }
    const std::uint64_t rest = cols_ - i - 1;
    // inner product, axpy, and the norm downdate per remaining column
    detail::tally(flops_, rest * ((rows_ - 1) + rows_ + 1), rest * (2 * rows_ + 1));
    ++step_;
  }

  [[nodiscard]] QrFactors factors() const {
    const std::size_t k = step_;
    if (k == 0) throw std::logic_error("qrd: no steps taken");
    ComplexMatrix q(rows_, k);
    ComplexMatrix r(k, k);
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t row = 0; row < rows_; ++row) q(row, c) = q_[c * rows_ + row];
    for (std::size_t row = 0; row < k; ++row)
      for (std::size_t c = row; c < k; ++c) r(row, c) = r_[row * cols_ + c];
    return QrFactors{std::move(q),
                     std::move(r),
                     {perm_.begin(), perm_.begin() + k},
                     pivot_norms_,
                     {perm_.begin() + k, perm_.end()},
                     {tnorms_.begin() + k, tnorms_.end()}};
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::size_t max_steps_;
  std::size_t step_ = 0;
  std::vector<cplx> q_;  // column-major working copy
  std::vector<cplx> r_;  // row-major, max_steps_ x cols_
  std::vector<double> tnorms_;
  std::vector<std::size_t> perm_;
  std::vector<double> pivot_norms_;
  FlopCount* flops_;
};

/// QR factors of k columns of `a`, picked according to `rule`.
inline QrFactors qrd_mgs(const ComplexMatrix& a, std::size_t k,
                         PivotRule rule = PivotRule::max_norm(), FlopCount* flops = nullptr) {
  if (k == 0) throw std::invalid_argument("qrd_mgs: k must be positive");
  if (rule.kind == PivotRule::Kind::fixed_first && rule.first_column >= a.cols()) {
    throw std::out_of_range("qrd_mgs: first column out of range");
  }
  IncrementalQr qr(a, k, flops);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t pos = i;
    if (rule.kind == PivotRule::Kind::fixed_first && i == 0) {
      pos = qr.position_of(rule.first_column);
    } else if (rule.kind != PivotRule::Kind::natural) {
      pos = qr.max_residual_position();
    }
    qr.advance(pos);
  }
  return qr.factors();
}

}  // namespace mumimo
