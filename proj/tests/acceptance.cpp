// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Monte Carlo checks use all available cores; results
// do not depend on the core count.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "mumimo/complexity.hpp"
#include "mumimo/precoders.hpp"
#include "mumimo/qam.hpp"
#include "mumimo/selectors.hpp"
#include "mumimo/sim.hpp"
#include "test_util.hpp"

using namespace mumimo;
using Indices = std::vector<std::size_t>;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) { return format_double(v, f); }

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

// --- 1 ---------------------------------------------------------------------

Outcome table_ratios() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::map<std::pair<std::size_t, std::size_t>, std::vector<std::string>> expected = {
      {{8, 4}, {"41.1", "13.9", "1.8"}}, {{14, 10}, {"5.2", "1.0", "0.07"}}};
  bool ok = true;
  std::string detail;
  for (const auto& [nm, want] : expected) {
    const auto rows = ratio_table(nm.first, nm.second);
    detail += "(" + std::to_string(nm.first) + "," + std::to_string(nm.second) + "):";
    for (std::size_t i = 0; i < 3; ++i) {
      const std::string& got = rows[i + 1].ratio_text;
      detail += " " + got;
      ok = ok && got == want[i];
    }
    detail += "; ";
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 1.0;
  return {ok, detail + fmt("%.3fs", secs)};
}

// --- 2 ---------------------------------------------------------------------

std::pair<Indices, double> brute_force(const ComplexMatrix& h) {
  const std::size_t m = h.rows();
  const std::size_t n = h.cols();
  Indices best;
  double best_gamma = kInfinity;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != m) continue;
    Indices cols;
    for (std::size_t c = 0; c < n; ++c)
      if (mask & (1u << c)) cols.push_back(c);
    const double g = testing::reference_gamma(select_columns(h, cols));
    if (g < best_gamma || (g == best_gamma && cols < best)) {
      best_gamma = g;
      best = cols;
    }
  }
  return {best, best_gamma};
}

Outcome optimality_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(2024);
  int subset_mismatch = 0;
  double worst_rel = 0.0;
  constexpr int kTrials = 10'000;
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t m = 1 + t % 4;
    const std::size_t n = m + (t / 4) % (9 - m);
    const ComplexMatrix h = testing::random_matrix(m, n, gen);
    const auto r = select_optimum(h);
    const auto [subset, g] = brute_force(h);
    subset_mismatch += r.subset.indices != subset;
    worst_rel = std::max(worst_rel, std::abs(r.metric - g) / g);
  }
  const double secs = seconds_since(t0);
  const bool ok = subset_mismatch == 0 && worst_rel < 1e-9 && secs < 60.0;
  return {ok, std::to_string(subset_mismatch) + " subset mismatches, max rel metric diff " +
                  fmt("%.2e", worst_rel) + ", " + fmt("%.1fs", secs)};
}

// --- 3 ---------------------------------------------------------------------

Outcome dominance() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(2025);
  int violations = 0;
  for (int t = 0; t < 10'000; ++t) {
    const ComplexMatrix h = testing::random_matrix(4, 8, gen);
    const double opt = select_optimum(h).metric;
    const auto rc = select_rc(h);
    const auto single = select_single_qr(h);
    const auto on = select_maxr(h, {.prune = true});
    const auto off = select_maxr(h, {.prune = false});
    violations += !(opt <= rc.metric);
    violations += !(opt <= gamma_of_columns(h, on.subset.indices));
    violations += !(opt <= gamma_of_columns(h, single.subset.indices));
    violations += !(on.metric <= single.metric);
    violations += !(on.subset == off.subset && on.metric == off.metric);
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && secs < 60.0,
          std::to_string(violations) + " violations over 1e4 trials, " + fmt("%.1fs", secs)};
}

// --- 4 ---------------------------------------------------------------------

Outcome gamma_numerics() {
  std::mt19937_64 gen(2026);
  double worst_rel = 0.0;
  int bound_violations = 0;
  double worst_orth = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const ComplexMatrix h = testing::random_matrix(4, 4, gen);
    const double g = gamma(h);
    const auto qr = qrd_mgs(h, 4, PivotRule::natural());
    worst_rel = std::max(worst_rel, std::abs(g - gamma_from_r(qr.r)) / g);
    bound_violations += g < diagonal_bound(qr.r) * (1.0 - 1e-12);

    ComplexMatrix u = testing::random_unitary(4, gen);
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t r = 0; r < 4; ++r) u(r, c) *= 0.3 + 0.7 * static_cast<double>(c);
    const auto uqr = qrd_mgs(u, 4, PivotRule::natural());
    worst_orth = std::max(worst_orth, std::abs(gamma(u) - diagonal_bound(uqr.r)));
  }
  const bool ok = worst_rel < 1e-8 && bound_violations == 0 && worst_orth < 1e-9;
  return {ok, "max rel diff " + fmt("%.2e", worst_rel) + ", bound violations " +
                  std::to_string(bound_violations) + ", orthogonal max diff " +
                  fmt("%.2e", worst_orth)};
}

// --- 5 ---------------------------------------------------------------------

Outcome thp_loopback() {
  std::mt19937_64 gen(2027);
  int wrong = 0;
  int channels = 0;
  while (channels < 1000) {
    const ComplexMatrix h = testing::random_matrix(4, 4, gen);
    std::optional<ThpFactors> f;
    try {
      f = thp_factorize(h);
    } catch (const Error&) {
      continue;  // not invertible
    }
    ++channels;
    // Sixteen frames per channel so every user sends every symbol.
    for (int frame = 0; frame < 16; ++frame) {
      CVector s(4);
      std::vector<std::uint8_t> bits(4);
      for (std::size_t k = 0; k < 4; ++k) {
        bits[k] = static_cast<std::uint8_t>((frame + 5 * k) % 16);
        s[k] = qam16_map(bits[k]);
      }
      const PrecodedFrame x = thp_transmit(*f, s);
      const CVector y = h * std::span<const cplx>(x.x);
      const CVector z = receive_detect(y, Scheme::zfthp, x.scale);
      for (std::size_t k = 0; k < 4; ++k) wrong += qam16_demap(z[k]) != bits[k];
    }
  }
  return {wrong == 0, std::to_string(wrong) + " symbol errors over 1000 channels x 16 frames"};
}

// --- 6 & 7 -----------------------------------------------------------------

// BER curve on a 1 dB grid, grown point by point: downward until the first
// point is above `high`, upward until the last is below `low`. Points are
// independent run_ber calls sharing one seed, so they see the same draws.
std::vector<CurvePoint> adaptive_curve(Scheme scheme, SelectorKind selector, double start,
                                       double high, double low) {
  SimConfig c;
  c.n_antennas = 8;
  c.n_users = 4;
  c.scheme = scheme;
  c.selector = selector;
  c.max_trials = 3'000'000;
  c.target_bit_errors = 100;
  c.seed = 1;
  c.workers = workers();
  auto point = [&](double snr) {
    c.snr_grid_db = {snr};
    return run_ber(c)[0];
  };
  std::vector<CurvePoint> curve{point(start)};
  while (curve.front().ber <= high && curve.front().snr_db > -10.0)
    curve.insert(curve.begin(), point(curve.front().snr_db - 1.0));
  while (curve.back().ber >= low && curve.back().snr_db < 60.0)
    curve.push_back(point(curve.back().snr_db + 1.0));
  return curve;
}

constexpr SelectorKind kSelectors[] = {SelectorKind::optimum, SelectorKind::rc,
                                       SelectorKind::maxr, SelectorKind::singleqr};

struct BerRuns {
  std::map<SelectorKind, std::vector<CurvePoint>> lzf;
  std::map<SelectorKind, std::vector<CurvePoint>> thp;
};

BerRuns ber_runs() {
  BerRuns runs;
  for (auto sel : kSelectors) {
    // Criterion 7 needs the optimum curves down to 1e-5.
    const double low = sel == SelectorKind::optimum ? 1e-5 : 1e-4;
    runs.lzf[sel] = adaptive_curve(Scheme::lzf, sel, 21.0, 1e-4, low);
    runs.thp[sel] = adaptive_curve(Scheme::zfthp, sel, 16.0, 1e-4, low);
  }
  return runs;
}

void print_curves(const char* name, const std::map<SelectorKind, std::vector<CurvePoint>>& curves) {
  for (const auto& [sel, curve] : curves) {
    std::printf("  %s/%s:", name, std::string(to_string(sel)).c_str());
    for (const auto& p : curve) std::printf(" %g dB %.3g (%llu)", p.snr_db, p.ber,
                                            static_cast<unsigned long long>(p.trials));
    std::printf("\n");
  }
}

Outcome selector_gaps(const std::map<SelectorKind, std::vector<CurvePoint>>& curves,
                      const double (&target)[3], double tol) {
  const auto ref = snr_at_ber(curves.at(SelectorKind::optimum), 1e-4);
  if (!ref) return {false, "optimum curve never crosses 1e-4"};
  bool ok = true;
  std::string detail = "optimum at " + fmt("%.2f", *ref) + " dB; gaps";
  for (int i = 0; i < 3; ++i) {
    const auto s = snr_at_ber(curves.at(kSelectors[i + 1]), 1e-4);
    if (!s) return {false, std::string(to_string(kSelectors[i + 1])) + " never crosses 1e-4"};
    const double gap = *s - *ref;
    const bool in = std::abs(gap - target[i]) <= tol;
    ok = ok && in;
    detail += " " + std::string(to_string(kSelectors[i + 1])) + "=" + fmt("%.2f", gap) +
              (in ? "" : "(!)") + " [" + fmt("%.2f", target[i]) + "]";
  }
  return {ok, detail};
}

Outcome thp_advantage(const BerRuns& runs) {
  bool ok = true;
  std::string detail;
  for (double level : {1e-4, 1e-5}) {
    const auto l = snr_at_ber(runs.lzf.at(SelectorKind::optimum), level);
    const auto t = snr_at_ber(runs.thp.at(SelectorKind::optimum), level);
    if (!l || !t) return {false, "curves do not reach " + fmt("%.0e", level)};
    const double gap = *l - *t;
    ok = ok && gap >= 2.0 && gap <= 3.3;
    detail += "gap@" + fmt("%.0e", level) + "=" + fmt("%.2f", gap) + " dB; ";
  }
  // Direction for every selector at 1e-4.
  bool left = true;
  for (auto sel : kSelectors) {
    const auto l = snr_at_ber(runs.lzf.at(sel), 1e-4);
    const auto t = snr_at_ber(runs.thp.at(sel), 1e-4);
    left = left && l && t && *t < *l;
  }
  return {ok && left,
          detail + "range [2.0, 3.3]; THP left of LZF for every selector at 1e-4: " +
              (left ? "yes" : "no")};
}

// --- 8 ---------------------------------------------------------------------

Outcome sumrate_gaps() {
  SimConfig c;
  c.n_antennas = 12;
  c.n_users = 4;
  c.snr_grid_db = {30.0};
  c.max_trials = 10'000;
  c.seed = 1;
  c.workers = workers();
  std::map<SelectorKind, double> lzf;
  std::map<SelectorKind, double> thp;
  for (auto sel : kSelectors) {
    c.selector = sel;
    c.scheme = Scheme::lzf;
    lzf[sel] = run_sumrate(c)[0].sumrate_mean / 4.0;
    c.scheme = Scheme::zfthp;
    thp[sel] = run_sumrate(c)[0].sumrate_mean / 4.0;
  }
  const double target[3] = {0.045, 0.07, 0.2};
  bool ok = true;
  std::string detail = "LZF per-user gaps";
  for (int i = 0; i < 3; ++i) {
    const double gap = lzf[SelectorKind::optimum] - lzf[kSelectors[i + 1]];
    const bool in = std::abs(gap - target[i]) <= 0.5 * target[i];
    ok = ok && in;
    detail += " " + std::string(to_string(kSelectors[i + 1])) + "=" + fmt("%.3f", gap) +
              (in ? "" : "(!)");
  }
  const double margin = thp[SelectorKind::maxr] - thp[SelectorKind::optimum];
  ok = ok && margin >= -0.05;
  detail += "; THP maxR - optimum = " + fmt("%.3f", margin) + " per user";
  detail += " (THP per user: opt " + fmt("%.3f", thp[SelectorKind::optimum]) + ", rc " +
            fmt("%.3f", thp[SelectorKind::rc]) + ", maxr " + fmt("%.3f", thp[SelectorKind::maxr]) +
            ", singleqr " + fmt("%.3f", thp[SelectorKind::singleqr]) + ")";
  return {ok, detail};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const Outcome& o) {
    std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };

  report(1, "complexity ratios", table_ratios());
  report(2, "optimum selector vs brute force", optimality_oracle());
  report(3, "dominance invariants", dominance());
  report(4, "gamma numerics", gamma_numerics());
  report(5, "THP noiseless loopback", thp_loopback());

  const auto t0 = std::chrono::steady_clock::now();
  const BerRuns runs = ber_runs();
  print_curves("lzf", runs.lzf);
  print_curves("zfthp", runs.thp);
  std::printf("  BER runs took %.0fs\n", seconds_since(t0));
  const double lzf_target[3] = {0.25, 0.8, 1.8};
  const double thp_target[3] = {0.05, 0.09, 0.5};
  const Outcome lzf = selector_gaps(runs.lzf, lzf_target, 0.4);
  const Outcome thp = selector_gaps(runs.thp, thp_target, 0.3);
  report(6, "BER selector gaps at 1e-4",
         {lzf.pass && thp.pass, "LZF: " + lzf.detail + " | THP: " + thp.detail});
  report(7, "THP-ZF over LZF", thp_advantage(runs));

  report(8, "sum-rate gaps at 30 dB", sumrate_gaps());

  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
