#pragma once

// Monte Carlo BER and sum-rate experiments.
//
// Trial t draws everything it needs from RngStream(seed, t): the channel,
// then one 64-bit word of data bits, then one unit-variance noise sample per
// user. The noise is scaled per SNR point, so every SNR point, selector and
// precoder sees the same random numbers for a given trial.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "mumimo/channel.hpp"
#include "mumimo/error.hpp"
#include "mumimo/linalg.hpp"
#include "mumimo/precoders.hpp"
#include "mumimo/qam.hpp"
#include "mumimo/selectors.hpp"

namespace mumimo {

inline std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::lzf: return "lzf";
    case Scheme::lmmse: return "lmmse";
    case Scheme::zfthp: return "zfthp";
  }
  return "?";
}

inline std::optional<Scheme> parse_scheme(std::string_view name) {
  for (auto s : {Scheme::lzf, Scheme::lmmse, Scheme::zfthp})
    if (to_string(s) == name) return s;
  return std::nullopt;
}

/// Noise variance at unit transmit power.
inline double sigma2_from_snr_db(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

struct SimConfig {
  std::size_t n_antennas = 8;
  std::size_t n_users = 4;
  Scheme scheme = Scheme::lzf;
  SelectorKind selector = SelectorKind::optimum;
  std::vector<double> snr_grid_db;
  std::uint64_t max_trials = 1'000'000;
  std::uint64_t target_bit_errors = 100;
  std::uint64_t seed = 1;
  unsigned workers = 1;

  void validate() const {
    if (n_users == 0 || n_antennas < n_users) throw ConfigError("need n >= m >= 1");
    if (n_users > 16) throw ConfigError("at most 16 users");
    if (scheme == Scheme::lmmse) throw ConfigError("simulation supports lzf and zfthp only");
    if (selector == SelectorKind::none && n_antennas != n_users) {
      throw ConfigError("selector 'none' requires n == m");
    }
    if (snr_grid_db.empty()) throw ConfigError("empty SNR grid");
    if (!std::is_sorted(snr_grid_db.begin(), snr_grid_db.end())) {
      throw ConfigError("SNR grid must be ascending");
    }
    if (max_trials == 0) throw ConfigError("max_trials must be at least 1");
  }
};

struct CurvePoint {
  double snr_db = 0.0;
  std::uint64_t trials = 0;      // usable trials (BER) or realizations (sum rate)
  std::uint64_t bit_errors = 0;
  double ber = 0.0;
  double sumrate_mean = 0.0;     // bits/s/Hz summed over users
  double sumrate_stderr = 0.0;
  std::uint64_t discarded = 0;   // singular draws skipped
};

/// Adds i.i.d. CN(0, sigma2) noise.
inline CVector awgn(std::span<const cplx> y, double sigma2, RngStream& rng) {
  if (sigma2 < 0.0) throw std::invalid_argument("awgn: negative variance");
  CVector out(y.begin(), y.end());
  if (sigma2 == 0.0) return out;
  for (auto& v : out) v += rng.complex_gaussian(sigma2);
  return out;
}

/// Per-realization LZF sum rate K log2(1 + rho / gamma).
inline double sumrate_lzf(const ComplexMatrix& hp, double rho) {
  return static_cast<double>(hp.rows()) * std::log2(1.0 + rho / gamma(hp));
}

/// Per-realization ZF-THP sum rate sum_i log2(1 + rho R_ii^2), R from H^H = QR.
inline double sumrate_thp(const ComplexMatrix& hp, double rho) {
  const QrFactors qr = qrd_mgs(hp.adjoint(), hp.rows(), PivotRule::natural());
  double rate = 0.0;
  for (std::size_t i = 0; i < hp.rows(); ++i) rate += std::log2(1.0 + rho * std::norm(qr.r(i, i)));
  return rate;
}

namespace detail {

template <typename F>
void parallel_for(std::size_t count, unsigned workers, F&& body) {
  if (workers <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const unsigned used = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < used; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += used) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

struct TrialDraw {
  ComplexMatrix h;
  std::uint64_t bits;
  CVector unit_noise;
};

inline TrialDraw draw_trial(const SimConfig& config, std::uint64_t trial) {
  RngStream rng(config.seed, trial);
  Channel ch = sample_channel(config.n_users, config.n_antennas, rng);
  const std::uint64_t bits = rng.next_u64();
  CVector noise(config.n_users);
  for (auto& z : noise) z = rng.complex_gaussian(1.0);
  return {std::move(ch.h), bits, std::move(noise)};
}

inline std::uint8_t user_bits(std::uint64_t word, std::size_t user) {
  return static_cast<std::uint8_t>((word >> (kQam16Bits * user)) & 0xF);
}

inline SelectionResult run_selector(const SimConfig& config, const ComplexMatrix& h) {
  return select(config.selector, h);
}

// Bit errors of one trial at each listed noise level; false if the draw was
// unusable (singular subset or channel).
inline bool trial_errors(const SimConfig& config, std::uint64_t trial,
                         std::span<const double> sigmas, std::span<std::uint32_t> errors) {
  const TrialDraw draw = draw_trial(config, trial);
  const std::size_t m = config.n_users;
  CVector s(m);
  for (std::size_t k = 0; k < m; ++k) s[k] = qam16_map(user_bits(draw.bits, k));

  try {
    const SelectionResult sel = run_selector(config, draw.h);
    const ComplexMatrix hp = subset_apply(draw.h, sel.subset);
    const PrecodedFrame frame = config.scheme == Scheme::zfthp
                                    ? thp_transmit(thp_factorize(hp), s)
                                    : lzf_precode(hp, s);
    const CVector clean = hp * std::span<const cplx>(frame.x);
    CVector y(m);
    for (std::size_t p = 0; p < sigmas.size(); ++p) {
      for (std::size_t k = 0; k < m; ++k) y[k] = clean[k] + sigmas[p] * draw.unit_noise[k];
      const CVector z = receive_detect(y, config.scheme, frame.scale);
      std::uint32_t e = 0;
      for (std::size_t k = 0; k < m; ++k) {
        e += static_cast<std::uint32_t>(std::popcount(
            static_cast<unsigned>(qam16_demap(z[k]) ^ user_bits(draw.bits, k))));
      }
      errors[p] = e;
    }
  } catch (const Error&) {
    return false;
  }
  return true;
}

}  // namespace detail

/// BER curve. Each SNR point accumulates trials in index order until it has
/// target_bit_errors errors or max_trials draws; results do not depend on
/// the worker count.
inline std::vector<CurvePoint> run_ber(const SimConfig& config) {
  config.validate();
  const std::size_t points = config.snr_grid_db.size();
  const std::size_t m = config.n_users;

  std::vector<CurvePoint> curve(points);
  std::vector<double> sigmas(points);
  std::vector<std::uint64_t> draws(points, 0);
  std::vector<bool> active(points, true);
  for (std::size_t p = 0; p < points; ++p) {
    curve[p].snr_db = config.snr_grid_db[p];
    sigmas[p] = std::sqrt(sigma2_from_snr_db(config.snr_grid_db[p]));
  }

  const std::size_t batch = 512 * std::max(1u, config.workers);
  std::vector<std::uint32_t> errors;
  std::vector<char> usable;
  std::uint64_t next_trial = 0;

  while (std::find(active.begin(), active.end(), true) != active.end()) {
    std::vector<std::size_t> live;
    std::vector<double> live_sigmas;
    for (std::size_t p = 0; p < points; ++p) {
      if (active[p]) {
        live.push_back(p);
        live_sigmas.push_back(sigmas[p]);
      }
    }
    std::uint64_t remaining = 0;
    for (const std::size_t p : live) remaining = std::max(remaining, config.max_trials - draws[p]);
    const std::size_t count = static_cast<std::size_t>(std::min<std::uint64_t>(batch, remaining));

    errors.assign(count * live.size(), 0);
    usable.assign(count, 0);
    detail::parallel_for(count, config.workers, [&](std::size_t i) {
      usable[i] = detail::trial_errors(config, next_trial + i, live_sigmas,
                                       std::span(errors).subspan(i * live.size(), live.size()))
                      ? 1
                      : 0;
    });

    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t l = 0; l < live.size(); ++l) {
        const std::size_t p = live[l];
        if (!active[p]) continue;
        ++draws[p];
        if (usable[i]) {
          ++curve[p].trials;
          curve[p].bit_errors += errors[i * live.size() + l];
        } else {
          ++curve[p].discarded;
        }
        if (curve[p].bit_errors >= config.target_bit_errors || draws[p] >= config.max_trials) {
          active[p] = false;
        }
      }
    }
    next_trial += count;
  }

  for (auto& pt : curve) {
    const double bits = static_cast<double>(pt.trials) * static_cast<double>(m) * kQam16Bits;
    pt.ber = bits > 0 ? static_cast<double>(pt.bit_errors) / bits : 0.0;
  }
  return curve;
}

/// Mean per-realization sum rate over max_trials channel draws.
inline std::vector<CurvePoint> run_sumrate(const SimConfig& config) {
  config.validate();
  const std::size_t points = config.snr_grid_db.size();
  const std::size_t n = static_cast<std::size_t>(config.max_trials);

  std::vector<double> rates(n * points, 0.0);
  std::vector<char> usable(n, 0);
  detail::parallel_for(n, config.workers, [&](std::size_t t) {
    const detail::TrialDraw draw = detail::draw_trial(config, t);
    try {
      const SelectionResult sel = detail::run_selector(config, draw.h);
      const ComplexMatrix hp = subset_apply(draw.h, sel.subset);
      for (std::size_t p = 0; p < points; ++p) {
        const double rho = 1.0 / sigma2_from_snr_db(config.snr_grid_db[p]);
        rates[t * points + p] =
            config.scheme == Scheme::zfthp ? sumrate_thp(hp, rho) : sumrate_lzf(hp, rho);
      }
      usable[t] = 1;
    } catch (const Error&) {
    }
  });

  std::vector<CurvePoint> curve(points);
  for (std::size_t p = 0; p < points; ++p) {
    CurvePoint& pt = curve[p];
    pt.snr_db = config.snr_grid_db[p];
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      if (!usable[t]) {
        ++pt.discarded;
        continue;
      }
      const double r = rates[t * points + p];
      sum += r;
      sum_sq += r * r;
      ++pt.trials;
    }
    if (pt.trials > 0) {
      const double cnt = static_cast<double>(pt.trials);
      pt.sumrate_mean = sum / cnt;
      const double var = pt.trials > 1 ? std::max(0.0, (sum_sq - sum * sum / cnt) / (cnt - 1)) : 0.0;
      pt.sumrate_stderr = std::sqrt(var / cnt);
    }
  }
  return curve;
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

inline constexpr std::string_view kBerCsvHeader = "scheme,selector,n,m,snr_db,trials,bit_errors,ber";
inline constexpr std::string_view kSumrateCsvHeader =
    "scheme,selector,n,m,snr_db,realizations,sumrate_mean,sumrate_stderr";

inline std::string format_double(double v, const char* fmt = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

inline void write_ber_rows(std::ostream& os, const SimConfig& config,
                           std::span<const CurvePoint> curve) {
  for (const auto& pt : curve) {
    os << to_string(config.scheme) << ',' << to_string(config.selector) << ','
       << config.n_antennas << ',' << config.n_users << ',' << format_double(pt.snr_db) << ','
       << pt.trials << ',' << pt.bit_errors << ',' << format_double(pt.ber, "%.6e") << '\n';
  }
}

inline void write_sumrate_rows(std::ostream& os, const SimConfig& config,
                               std::span<const CurvePoint> curve) {
  for (const auto& pt : curve) {
    os << to_string(config.scheme) << ',' << to_string(config.selector) << ','
       << config.n_antennas << ',' << config.n_users << ',' << format_double(pt.snr_db) << ','
       << pt.trials << ',' << format_double(pt.sumrate_mean, "%.8f") << ','
       << format_double(pt.sumrate_stderr, "%.8f") << '\n';
  }
}

/// SNR (dB) where a curve crosses `level`, interpolating log10(BER)
/// linearly between the bracketing points. Empty if never bracketed.
inline std::optional<double> snr_at_ber(std::span<const CurvePoint> curve, double level) {
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const CurvePoint& a = curve[i - 1];
    const CurvePoint& b = curve[i];
    if (a.ber >= level && b.ber <= level && a.ber > 0.0) {
      if (b.ber <= 0.0) return std::nullopt;
      const double la = std::log10(a.ber);
      const double lb = std::log10(b.ber);
      if (la == lb) return a.snr_db;
      return a.snr_db + (std::log10(level) - la) / (lb - la) * (b.snr_db - a.snr_db);
    }
  }
  return std::nullopt;
}

}  // namespace mumimo
