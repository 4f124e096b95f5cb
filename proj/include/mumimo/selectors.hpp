#pragma once

// Transmit antenna subset selection: exhaustive optimum, greedy removal
// (RC), single pivoted QRD, and the multi-start pruned maxR search.
//
// Antenna indices are 0-based in the API. All argmin/argmax ties go to the
// lowest index, so every selector is deterministic.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "mumimo/error.hpp"
#include "mumimo/flops.hpp"
#include "mumimo/linalg.hpp"

namespace mumimo {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class SelectorKind { optimum, rc, maxr, singleqr, none };

inline std::string_view to_string(SelectorKind kind) {
  switch (kind) {
    case SelectorKind::optimum: return "optimum";
    case SelectorKind::rc: return "rc";
    case SelectorKind::maxr: return "maxr";
    case SelectorKind::singleqr: return "singleqr";
    case SelectorKind::none: return "none";
  }
  return "?";
}

inline std::optional<SelectorKind> parse_selector(std::string_view name) {
  for (auto k : {SelectorKind::optimum, SelectorKind::rc, SelectorKind::maxr,
                 SelectorKind::singleqr, SelectorKind::none}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

struct AntennaSubset {
  std::vector<std::size_t> indices;

  /// Throws std::invalid_argument unless this is m distinct indices below n.
  void validate(std::size_t m, std::size_t n) const {
    if (indices.size() != m) throw std::invalid_argument("subset: wrong size");
    std::vector<std::size_t> sorted = indices;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw std::invalid_argument("subset: repeated antenna");
    }
    if (!sorted.empty() && sorted.back() >= n) throw std::invalid_argument("subset: index out of range");
  }

  friend bool operator==(const AntennaSubset&, const AntennaSubset&) = default;
};

struct SelectionResult {
  AntennaSubset subset;
  double metric = kInfinity;  // gamma (optimum, rc, none) or D (singleqr, maxr)
  FlopCount flops;
};

/// h(:, subset) in subset order.
inline ComplexMatrix subset_apply(const ComplexMatrix& h, const AntennaSubset& subset) {
  return select_columns(h, subset.indices);
}

namespace detail {

inline void check_wide(const ComplexMatrix& h) {
  if (h.cols() < h.rows()) throw DimensionMismatch("selector: fewer antennas than users");
}

// Advances `c` to the next k-combination of {0..n-1} in lexicographic order.
inline bool next_combination(std::vector<std::size_t>& c, std::size_t n) {
  const std::size_t k = c.size();
  std::size_t i = k;
  while (i > 0 && c[i - 1] == n - k + i - 1) --i;
  if (i == 0) return false;
  ++c[i - 1];
  for (std::size_t j = i; j < k; ++j) c[j] = c[j - 1] + 1;
  return true;
}

}  // namespace detail

/// Exhaustive search over all C(N, M) subsets for the smallest gamma.
inline SelectionResult select_optimum(const ComplexMatrix& h) {
  detail::check_wide(h);
  const std::size_t m = h.rows();
  const std::size_t n = h.cols();
  SelectionResult best;
  std::vector<std::size_t> combo(m);
  std::iota(combo.begin(), combo.end(), std::size_t{0});
  do {
    const double g = gamma_or_inf(h, combo, &best.flops);
    if (g < best.metric) {
      best.metric = g;
      best.subset.indices = combo;
    }
  } while (detail::next_combination(combo, n));
  if (best.metric == kInfinity) throw AllSingular("select_optimum: every subset is singular");
  return best;
}

/// Greedy removal: N - M times, drop the antenna whose removal leaves the
/// smallest gamma.
inline SelectionResult select_rc(const ComplexMatrix& h) {
  detail::check_wide(h);
  const std::size_t m = h.rows();
  SelectionResult result;
  std::vector<std::size_t> active(h.cols());
  std::iota(active.begin(), active.end(), std::size_t{0});

  if (active.size() == m) {
    result.metric = gamma_or_inf(h, active, &result.flops);
  }
  std::vector<std::size_t> trial;
  while (active.size() > m) {
    std::size_t drop = 0;
    double best = kInfinity;
    for (std::size_t k = 0; k < active.size(); ++k) {
      trial.clear();
      for (std::size_t c = 0; c < active.size(); ++c)
        if (c != k) trial.push_back(active[c]);
      const double g = gamma_or_inf(h, trial, &result.flops);
      if (g < best) {
        best = g;
        drop = k;
      }
    }
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
    result.metric = best;
  }
  if (result.metric == kInfinity) throw AllSingular("select_rc: every candidate is singular");
  result.subset.indices = std::move(active);
  return result;
}

/// One pivoted QRD: strongest column first, then the largest residual.
/// Metric D is the running sum of 1/residual at each pick.
inline SelectionResult select_single_qr(const ComplexMatrix& h) {
  detail::check_wide(h);
  SelectionResult result;
  const QrFactors qr = qrd_mgs(h, h.rows(), PivotRule::max_norm(), &result.flops);
  double d = 0.0;
  for (const double t : qr.pivot_norms) d += 1.0 / t;
  detail::tally(&result.flops, qr.pivot_norms.size(), qr.pivot_norms.size());
  result.metric = d;
  result.subset.indices = qr.perm;
  return result;
}

struct MaxrOptions {
  bool prune = true;
  /// Stages run on this many threads; 0 or 1 means sequential.
  unsigned workers = 0;
};

namespace detail {

struct MaxrStage {
  double d = kInfinity;
  std::vector<std::size_t> subset;
};

// One maxR stage: force `first` as the first pick, then greedy max residual.
// Returns nothing if the stage is pruned or hits rank loss. `beaten(d)`
// reports whether a partial metric can no longer win.
template <typename Beaten>
std::optional<MaxrStage> maxr_stage(const ComplexMatrix& h, const std::vector<double>& norms,
                                    std::size_t first, bool prune, Beaten&& beaten,
                                    FlopCount* flops) {
  const std::size_t m = h.rows();
  IncrementalQr qr(h, m, norms, flops);
  double d = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t pos = i == 0 ? qr.position_of(first) : qr.max_residual_position();
    const double t = qr.residual_norm(pos);
    if (t <= kRankTolerance) return std::nullopt;
    d += 1.0 / t;
    detail::tally(flops, 1, 1);
    if (prune && beaten(d)) return std::nullopt;
    qr.advance(pos);
  }
  MaxrStage stage;
  stage.d = d;
  for (std::size_t i = 0; i < m; ++i) stage.subset.push_back(qr.original_index(i));
  return stage;
}

}  // namespace detail

/// Multi-start QRD selection. Stage j starts from the j-th strongest column;
/// a stage is abandoned as soon as its partial D reaches the best completed D.
inline SelectionResult select_maxr(const ComplexMatrix& h, MaxrOptions options = {}) {
  detail::check_wide(h);
  const std::size_t n = h.cols();
  SelectionResult result;
  const std::vector<double> norms = detail::squared_column_norms(h, &result.flops);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

  if (options.workers <= 1) {
    double bm = kInfinity;
    for (const std::size_t first : order) {
      auto stage = detail::maxr_stage(
          h, norms, first, options.prune, [&](double d) { return d >= bm; }, &result.flops);
      if (stage && stage->d < bm) {
        bm = stage->d;
        result.subset.indices = std::move(stage->subset);
      }
    }
    result.metric = bm;
  } else {
    // Best completed stage so far, keyed by (D, stage index) so that the
    // winner matches the sequential scan whatever order stages finish in.
    struct Best {
      double d = kInfinity;
      std::size_t stage = std::numeric_limits<std::size_t>::max();
      std::vector<std::size_t> subset;
    } best;
    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::vector<FlopCount> per_worker(options.workers);

    auto work = [&](unsigned w) {
      for (std::size_t j = next++; j < n; j = next++) {
        auto beaten = [&](double d) {
          std::lock_guard lock(mu);
          return d > best.d || (d == best.d && best.stage < j);
        };
        auto stage = detail::maxr_stage(h, norms, order[j], options.prune, beaten,
                                        &per_worker[w]);
        if (!stage) continue;
        std::lock_guard lock(mu);
        if (stage->d < best.d || (stage->d == best.d && j < best.stage)) {
          best = {stage->d, j, std::move(stage->subset)};
        }
      }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < options.workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
    for (const auto& f : per_worker) result.flops += f;
    result.metric = best.d;
    result.subset.indices = std::move(best.subset);
  }
  if (result.metric == kInfinity) throw RankDeficient("select_maxr: every stage lost rank");
  return result;
}

/// No selection: the first M antennas.
inline SelectionResult select_none(const ComplexMatrix& h) {
  detail::check_wide(h);
  SelectionResult result;
  result.subset.indices.resize(h.rows());
  std::iota(result.subset.indices.begin(), result.subset.indices.end(), std::size_t{0});
  result.metric = gamma_of_columns(h, result.subset.indices, &result.flops);
  return result;
}

inline SelectionResult select(SelectorKind kind, const ComplexMatrix& h,
                              MaxrOptions maxr_options = {}) {
  switch (kind) {
    case SelectorKind::optimum: return select_optimum(h);
    case SelectorKind::rc: return select_rc(h);
    case SelectorKind::maxr: return select_maxr(h, maxr_options);
    case SelectorKind::singleqr: return select_single_qr(h);
    case SelectorKind::none: return select_none(h);
  }
  throw std::invalid_argument("select: unknown selector");
}

}  // namespace mumimo
