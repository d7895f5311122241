#pragma once

// Experiment commands behind the netenv CLI. Each returns a process exit
// status: 0 ok, 2 usage or config error, 3 numeric divergence.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "netenv/config.hpp"
#include "netenv/envdist.hpp"
#include "netenv/error.hpp"
#include "netenv/learner.hpp"

namespace netenv {

inline constexpr std::string_view kCodeVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitDivergence = 3 };

struct CommandOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::optional<std::size_t> episodes;
  std::vector<std::string> overrides;
  /// "random" or "heuristic"; when set, eval ignores weights_path.
  std::string baseline;
  std::string weights_path;
  /// Also write curve.svg next to curve.csv.
  bool plot = false;
};

/// Message sinks; defaults discard everything.
struct Logger {
  std::function<void(const std::string&)> info = [](const std::string&) {};
  std::function<void(const std::string&)> debug = [](const std::string&) {};
  std::function<void(const std::string&)> error = [](const std::string&) {};
};

/// Shortest round-trip decimal text (never exponent notation).
inline std::string format_number(double v) {
  char buf[512];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  if (r.ec != std::errc{}) throw DomainError("cannot format number");
  return {buf, r.ptr};
}

/// Fixed precision for log lines.
inline std::string format_fixed(double v, int digits = 4) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  if (r.ec != std::errc{}) throw DomainError("cannot format number");
  return {buf, r.ptr};
}

inline std::string csv_header_curve() { return "episode,return,length,cause\n"; }
inline std::string csv_header_eval() { return "episode,seed,return,length,cause,variant\n"; }

inline std::string csv_row_curve(const EpisodeRecord& r) {
  return std::to_string(r.episode) + "," + format_number(r.ret) + "," + std::to_string(r.length) + "," +
         std::string(to_string(r.cause)) + "\n";
}

inline std::string csv_row_eval(const EpisodeRecord& r) {
  return std::to_string(r.episode) + "," + std::to_string(r.seed) + "," + format_number(r.ret) + "," +
         std::to_string(r.length) + "," + std::string(to_string(r.cause)) + "," + std::string(to_string(r.variant)) +
         "\n";
}

struct MeanCI {
  double mean = 0.0;
  /// Half-width of the normal-approximation 95% interval.
  double half_width = 0.0;
  std::size_t n = 0;
};

inline MeanCI mean_ci95(const std::vector<double>& xs) {
  MeanCI m;
  m.n = xs.size();
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return m;
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  m.half_width = 1.959963984540054 * sd / std::sqrt(static_cast<double>(xs.size()));
  return m;
}

/// Moving-average learning curve as a standalone SVG document.
inline std::string curve_svg(const std::vector<EpisodeRecord>& curve, std::size_t window = 100) {
  constexpr double W = 640, H = 360, pad = 40;
  std::vector<double> avg;
  double sum = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    sum += curve[i].ret;
    if (i >= window) sum -= curve[i - window].ret;
    avg.push_back(sum / static_cast<double>(std::min(i + 1, window)));
  }
  double lo = -1.0, hi = 1.0;
  for (double v : avg) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const double zero_y = H - pad - (0.0 - lo) / (hi - lo) * (H - 2 * pad);
  os << "<line x1=\"" << pad << "\" y1=\"" << zero_y << "\" x2=\"" << W - pad << "\" y2=\"" << zero_y
     << "\" stroke=\"#bbb\"/>\n";
  os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < avg.size(); ++i) {
    const double x = pad + (avg.size() > 1 ? static_cast<double>(i) / static_cast<double>(avg.size() - 1) : 0.0) * (W - 2 * pad);
    const double y = H - pad - (avg[i] - lo) / (hi - lo) * (H - 2 * pad);
    os << x << "," << y << " ";
  }
  os << "\"/>\n";
  os << "<text x=\"" << pad << "\" y=\"" << pad / 2 << "\" font-family=\"sans-serif\" font-size=\"12\">"
     << "mean return, trailing " << window << " episodes</text>\n";
  os << "<text x=\"4\" y=\"" << pad << "\" font-family=\"sans-serif\" font-size=\"10\">" << hi << "</text>\n";
  os << "<text x=\"4\" y=\"" << H - pad << "\" font-family=\"sans-serif\" font-size=\"10\">" << lo << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

namespace detail {

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

inline std::ofstream open_out(const std::filesystem::path& p, bool binary = false) {
  std::ofstream os(p, binary ? std::ios::binary : std::ios::out);
  if (!os) throw ConfigError("cannot write " + p.string());
  return os;
}

template <class F>
int guarded(const Logger& log, F&& body) {
  try {
    return body();
  } catch (const DivergenceError& e) {
    log.error(std::string("divergence: ") + e.what());
    return kExitDivergence;
  } catch (const ConfigError& e) {
    log.error(std::string("config error: ") + e.what());
    return kExitConfig;
  } catch (const ValidationError& e) {
    log.error(std::string("invalid program: ") + e.what());
    return kExitConfig;
  } catch (const DomainError& e) {
    log.error(e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    log.error(std::string("error: ") + e.what());
    return kExitFailure;
  }
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
}

}  // namespace detail

/// Trains a DQN and writes curve.csv, weights.bin and run.json to out_dir.
inline int cmd_train(const CommandOptions& opt, const Logger& log = {}) {
  return detail::guarded(log, [&] {
    const LoadedConfig loaded = load_config(opt.config_path, opt.overrides);
    const ExperimentConfig& cfg = loaded.config;
    const std::uint64_t seed = opt.seed.value_or(cfg.seed);
    const EnvFactory factory = make_factory(cfg);
    detail::ensure_dir(opt.out_dir);
    const std::filesystem::path out(opt.out_dir);

    log.info("training " + std::to_string(cfg.train.total_steps) + " steps, seed " + std::to_string(seed));
    auto curve_os = detail::open_out(out / "curve.csv");
    curve_os << csv_header_curve();
    std::size_t printed = 0;
    double recent = 0.0;
    auto result = train(factory, cfg.train, seed, [&](const EpisodeRecord& r) {
      curve_os << csv_row_curve(r);
      recent += r.ret;
      if (++printed % 1000 == 0) {
        log.info("episode " + std::to_string(r.episode + 1) + " mean return (last 1000) " + format_fixed(recent / 1000.0));
        recent = 0.0;
      }
      log.debug("episode " + std::to_string(r.episode) + " return " + format_number(r.ret) + " cause " +
                std::string(to_string(r.cause)));
    });
    curve_os.close();
    {
      auto w = detail::open_out(out / "weights.bin", true);
      write_weights(w, result.network);
    }
    if (opt.plot) detail::open_out(out / "curve.svg") << curve_svg(result.curve);

    Json run{{"command", "train"},
             {"code_version", std::string(kCodeVersion)},
             {"config_path", opt.config_path},
             {"config_hash", "fnv1a64:" + detail::hex64(fnv1a64(loaded.text))},
             {"seed", seed},
             {"overrides", opt.overrides},
             {"config", loaded.document},
             {"steps", result.steps},
             {"episodes", result.curve.size()}};
    detail::open_out(out / "run.json") << run.dump(2) << "\n";
    log.info("wrote " + std::to_string(result.curve.size()) + " episodes to " + (out / "curve.csv").string());
    return int{kExitOk};
  });
}

/// Runs a frozen policy, writes eval.csv, prints the mean return with its 95%
/// interval to `out`.
inline int cmd_eval(const CommandOptions& opt, std::ostream& out, const Logger& log = {}) {
  return detail::guarded(log, [&] {
    const std::size_t episodes = opt.episodes.value_or(100);
    if (episodes == 0) throw ConfigError("--episodes must be positive");
    const LoadedConfig loaded = load_config(opt.config_path, opt.overrides);
    const std::uint64_t seed = opt.seed.value_or(loaded.config.seed);
    const EnvFactory factory = make_factory(loaded.config);

    QNetwork net;
    Policy policy;
    if (opt.baseline == "heuristic") {
      policy = heuristic();
    } else if (opt.baseline == "random") {
      policy = random_policy(mix_seed(seed, 0x726e64));
    } else if (!opt.baseline.empty()) {
      throw ConfigError("--baseline must be 'random' or 'heuristic'");
    } else {
      if (opt.weights_path.empty()) throw ConfigError("eval needs --weights or --baseline");
      net = load_weights(opt.weights_path);
      if (net.inputs() < factory.max_hosts * kEventKinds || net.outputs() < Action::count(factory.max_hosts)) {
        throw ConfigError("weights are too small for the configured host count");
      }
      policy = greedy_policy(net);
    }

    const auto records = evaluate(factory, policy, episodes, seed);
    detail::ensure_dir(opt.out_dir);
    const std::filesystem::path dir(opt.out_dir);
    auto os = detail::open_out(dir / "eval.csv");
    os << csv_header_eval();
    std::vector<double> returns;
    std::map<std::string, std::size_t> causes;
    for (const auto& r : records) {
      os << csv_row_eval(r);
      returns.push_back(r.ret);
      ++causes[std::string(to_string(r.cause))];
    }
    const MeanCI ci = mean_ci95(returns);
    out << "mean_return " << format_fixed(ci.mean) << " +/- " << format_fixed(ci.half_width) << " (95% CI, n=" << ci.n
        << ")\n";
    for (const auto& [c, n] : causes) out << "cause " << c << " " << n << "\n";
    return int{kExitOk};
  });
}

/// Prints `episodes` sampled scenario configs, one JSON document per line.
inline int cmd_sample(const CommandOptions& opt, std::ostream& out, const Logger& log = {}) {
  return detail::guarded(log, [&] {
    const LoadedConfig loaded = load_config(opt.config_path, opt.overrides);
    const ExperimentConfig& cfg = loaded.config;
    const std::uint64_t seed = opt.seed.value_or(cfg.seed);
    const EnvironmentDistribution d = cfg.distribution.value_or(EnvironmentDistribution::point_mass(cfg.scenario));
    const std::size_t count = opt.episodes.value_or(1);
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint64_t s = mix_seed(seed, i);
      out << Json{{"seed", s}, {"scenario", to_json(sample_env(d, s))}}.dump() << "\n";
    }
    return int{kExitOk};
  });
}

}  // namespace netenv
