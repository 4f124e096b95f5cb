#pragma once

// Command-line front end. dispatch() parses an argument list, runs one
// subcommand and returns the process exit code:
//   0 success, 1 runtime failure, 2 usage error.
// Results go to `out` (or --out); every diagnostic goes to `err`.

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mumimo/channel.hpp"
#include "mumimo/complexity.hpp"
#include "mumimo/selectors.hpp"
#include "mumimo/sim.hpp"

namespace mumimo::cli {

/// Raised for bad flag values; the message starts with the flag name.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parses "start:step:stop" (inclusive) or a single value.
inline std::vector<double> parse_snr_grid(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string piece;
  while (std::getline(ss, piece, ':')) {
    double v = 0.0;
    const char* end = piece.data() + piece.size();
    auto [ptr, ec] = std::from_chars(piece.data(), end, v);
    if (piece.empty() || ec != std::errc{} || ptr != end || !std::isfinite(v)) {
      throw UsageError("--snr: '" + piece + "' is not a number");
    }
    parts.push_back(v);
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3) throw UsageError("--snr: expected start:step:stop");
  const double start = parts[0];
  const double step = parts[1];
  const double stop = parts[2];
  if (step <= 0.0) throw UsageError("--snr: step must be positive");
  if (stop < start) throw UsageError("--snr: stop is below start");
  const double span = (stop - start) / step;
  if (span > 10000) throw UsageError("--snr: grid too long");
  // Tolerate rounding so 0:0.1:1 includes 1.
  const auto count = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) grid[i] = start + static_cast<double>(i) * step;
  return grid;
}

/// Positive integer count, scientific notation allowed ("2e6").
inline std::uint64_t parse_count(const std::string& text, const std::string& flag) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc{} || ptr != end) {
    throw UsageError(flag + ": '" + text + "' is not a number");
  }
  if (!(v >= 1.0) || v > 1e15 || v != std::floor(v)) {
    throw UsageError(flag + ": expected a positive integer, got '" + text + "'");
  }
  return static_cast<std::uint64_t>(v);
}

inline std::uint64_t default_seed() {
  const char* env = std::getenv("MUMIMO_SEED");
  if (env == nullptr || *env == '\0') return 1;
  std::uint64_t v = 0;
  const std::string s(env);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw UsageError("MUMIMO_SEED: '" + s + "' is not an unsigned integer");
  }
  return v;
}

inline unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

namespace detail {

struct SimFlags {
  std::string scheme = "lzf";
  std::string selector = "maxr";
  std::size_t n = 8;
  std::size_t m = 4;
  std::string snr;
  std::string trials;
  std::uint64_t target_errors = 100;
  std::optional<std::uint64_t> seed;
  unsigned workers = 0;
  std::string out;
};

inline void add_sim_flags(CLI::App* app, SimFlags& f, bool ber) {
  app->add_option("--scheme", f.scheme, "Precoder: lzf or zfthp")
      ->check(CLI::IsMember({"lzf", "zfthp"}))
      ->capture_default_str();
  app->add_option("--selector", f.selector, "optimum, rc, maxr, singleqr, none or all")
      ->check(CLI::IsMember({"optimum", "rc", "maxr", "singleqr", "none", "all"}))
      ->capture_default_str();
  app->add_option("--n", f.n, "Transmit antennas")->check(CLI::Range(1, 64))->capture_default_str();
  app->add_option("--m", f.m, "Users")->check(CLI::Range(1, 16))->capture_default_str();
  app->add_option("--snr", f.snr, "SNR grid in dB, start:step:stop inclusive")->required();
  app->add_option("--trials", f.trials,
                  ber ? "Maximum trials per SNR point (default 1e6)"
                      : "Channel realizations (default 1e4)");
  if (ber) {
    app->add_option("--target-errors", f.target_errors, "Bit errors that end an SNR point")
        ->check(CLI::Range(std::uint64_t{1}, std::uint64_t{1} << 40))
        ->capture_default_str();
  }
  app->add_option("--seed", f.seed, "Base seed (default: $MUMIMO_SEED or 1)");
  app->add_option("--workers", f.workers, "Worker threads (default: all cores)")
      ->check(CLI::Range(1u, 1024u));
  app->add_option("--out", f.out, "Write CSV here instead of stdout");
}

inline std::vector<SelectorKind> selectors_of(const std::string& name) {
  if (name == "all") {
    return {SelectorKind::optimum, SelectorKind::rc, SelectorKind::maxr, SelectorKind::singleqr};
  }
  return {*parse_selector(name)};
}

inline SimConfig sim_config(const SimFlags& f, std::uint64_t default_trials) {
  SimConfig c;
  c.n_antennas = f.n;
  c.n_users = f.m;
  if (f.m > f.n) throw UsageError("--m: must not exceed --n");
  if (f.selector == "none" && f.n != f.m) throw UsageError("--selector: 'none' needs --n equal to --m");
  c.scheme = *parse_scheme(f.scheme);
  c.snr_grid_db = parse_snr_grid(f.snr);
  c.max_trials = f.trials.empty() ? default_trials : parse_count(f.trials, "--trials");
  c.target_bit_errors = f.target_errors;
  c.seed = f.seed ? *f.seed : default_seed();
  c.workers = f.workers ? f.workers : default_workers();
  return c;
}

// Runs `body` against the --out file or `out`; the file is only created
// once the run has succeeded, so failures never leave partial CSV behind.
template <typename Body>
void emit(const std::string& path, std::ostream& out, Body&& body) {
  if (path.empty()) {
    body(out);
    return;
  }
  std::ostringstream buf;
  body(buf);
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open '" + path + "' for writing");
  file << buf.str();
  if (!file) throw std::runtime_error("write to '" + path + "' failed");
}

inline int run_ber_command(const SimFlags& f, std::ostream& out) {
  SimConfig c = sim_config(f, 1'000'000);
  // Validate every selector before any simulation starts.
  for (auto kind : selectors_of(f.selector)) {
    c.selector = kind;
    c.validate();
  }
  emit(f.out, out, [&](std::ostream& os) {
    os << kBerCsvHeader << '\n';
    for (auto kind : selectors_of(f.selector)) {
      c.selector = kind;
      write_ber_rows(os, c, run_ber(c));
    }
  });
  return 0;
}

inline int run_sumrate_command(const SimFlags& f, std::ostream& out) {
  SimConfig c = sim_config(f, 10'000);
  for (auto kind : selectors_of(f.selector)) {
    c.selector = kind;
    c.validate();
  }
  emit(f.out, out, [&](std::ostream& os) {
    os << kSumrateCsvHeader << '\n';
    for (auto kind : selectors_of(f.selector)) {
      c.selector = kind;
      write_sumrate_rows(os, c, run_sumrate(c));
    }
  });
  return 0;
}

inline int run_complexity_command(std::size_t n, std::size_t m, bool csv, std::ostream& out) {
  if (m > n) throw UsageError("--m: must not exceed --n");
  const auto rows = ratio_table(n, m);
  if (csv) {
    out << "scheme,flops,ratio_pct\n";
    for (const auto& r : rows) {
      out << to_string(r.scheme) << ',' << format_double(r.flops, "%.1f") << ',' << r.ratio_text
          << '\n';
    }
    return 0;
  }
  out << "N = " << n << ", M = " << m << '\n';
  out << std::left << std::setw(10) << "scheme" << std::right << std::setw(18) << "flops"
      << std::setw(12) << "C/Copt %" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(10) << to_string(r.scheme) << std::right << std::setw(18)
        << format_double(r.flops, "%.1f") << std::setw(12) << r.ratio_text << '\n';
  }
  return 0;
}

inline nlohmann::json selection_json(const SelectionResult& r) {
  std::vector<std::size_t> one_based;
  for (auto i : r.subset.indices) one_based.push_back(i + 1);
  return {{"subset", one_based},
          {"metric", r.metric},
          {"flops", {{"adds", r.flops.adds}, {"mults", r.flops.mults},
                     {"weighted", r.flops.weighted()}}}};
}

inline int run_select_command(const std::string& channel, const std::string& selector, bool json,
                              bool no_prune, unsigned workers, std::ostream& out) {
  const Channel ch = read_fixture(channel);
  const SelectorKind kind = *parse_selector(selector);
  const SelectionResult r = select(kind, ch.h, MaxrOptions{!no_prune, workers});
  if (json) {
    out << selection_json(r).dump() << '\n';
    return 0;
  }
  out << "subset:";
  for (auto i : r.subset.indices) out << ' ' << i + 1;
  out << "\nmetric: " << format_double(r.metric, "%.17g") << "\nflops: " << r.flops.weighted()
      << " (" << r.flops.adds << " adds, " << r.flops.mults << " mults)\n";
  return 0;
}

}  // namespace detail

inline int dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multiuser MIMO transmit antenna selection and precoding simulator", "mumimo"};
  app.require_subcommand(1);

  detail::SimFlags ber_flags;
  CLI::App* ber = app.add_subcommand("ber", "Monte Carlo bit error rate curve (CSV)");
  detail::add_sim_flags(ber, ber_flags, true);

  detail::SimFlags rate_flags;
  CLI::App* sumrate = app.add_subcommand("sumrate", "Monte Carlo sum-rate curve (CSV)");
  detail::add_sim_flags(sumrate, rate_flags, false);

  std::size_t cn = 8;
  std::size_t cm = 4;
  bool csv = false;
  CLI::App* complexity = app.add_subcommand("complexity", "Closed-form selection cost table");
  complexity->add_option("--n", cn, "Transmit antennas")->check(CLI::Range(1, 64))->capture_default_str();
  complexity->add_option("--m", cm, "Users")->check(CLI::Range(1, 64))->capture_default_str();
  complexity->add_flag("--csv", csv, "CSV instead of an aligned table");

  std::string channel;
  std::string sel_name = "maxr";
  bool json = false;
  bool no_prune = false;
  unsigned sel_workers = 0;
  CLI::App* select_cmd = app.add_subcommand("select", "Run one selector on a channel fixture");
  select_cmd->add_option("--channel", channel, "Channel fixture file")->required();
  select_cmd->add_option("--selector", sel_name, "optimum, rc, maxr, singleqr or none")
      ->check(CLI::IsMember({"optimum", "rc", "maxr", "singleqr", "none"}))
      ->capture_default_str();
  select_cmd->add_flag("--json", json, "Emit JSON");
  select_cmd->add_flag("--no-prune", no_prune, "Disable maxR stage pruning");
  select_cmd->add_option("--workers", sel_workers, "Threads for maxR stages (0: sequential)")
      ->check(CLI::Range(0u, 1024u));

  std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    for (CLI::App* sub : app.get_subcommands()) err << "run '" << sub->get_name() << " --help' for usage\n";
    return 2;
  }

  try {
    if (ber->parsed()) return detail::run_ber_command(ber_flags, out);
    if (sumrate->parsed()) return detail::run_sumrate_command(rate_flags, out);
    if (complexity->parsed()) return detail::run_complexity_command(cn, cm, csv, out);
    return detail::run_select_command(channel, sel_name, json, no_prune, sel_workers, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

inline int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return dispatch(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace mumimo::cli
