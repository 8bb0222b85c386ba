#pragma once

// Flat-file formats: dataset CSV, INI configuration and parameter files,
// per-rung posterior CSV, and content digests for run manifests.

#include "adm/likelihood.hpp"
#include "adm/sampler.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace adm::io {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::string digest_hex(std::uint64_t h) {
  std::ostringstream os;
  os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string file_digest(const std::string& path) { return digest_hex(fnv1a64(read_file(path))); }

// ---------------------------------------------------------------------------
// Dataset CSV

inline constexpr const char* kDatasetHeader = "specimen_id,failure_time_s,loading_rate_psi_per_s";

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  for (auto& c : cells) {
    while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
    while (!c.empty() && c.front() == ' ') c.erase(c.begin());
  }
  return cells;
}

}  // namespace detail

/// Reads the dataset CSV. mu_s is the sample mean of the failure times unless overridden.
inline Dataset read_dataset(std::istream& in, const std::string& source = "<dataset>",
                            std::optional<double> mu_s = std::nullopt) {
  Dataset d;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto cells = detail::split_csv(line);
    if (!header) {
      if (line != kDatasetHeader) throw ParseError(source, lineno, std::string("expected header '") + kDatasetHeader + "'");
      header = true;
      continue;
    }
    if (cells.size() != 3) throw ParseError(source, lineno, "expected 3 fields, found " + std::to_string(cells.size()));
    const auto t = parse_double(cells[1]);
    const auto k = parse_double(cells[2]);
    if (!t) throw ParseError(source, lineno, "failure time '" + cells[1] + "' is not a number");
    if (!k) throw ParseError(source, lineno, "loading rate '" + cells[2] + "' is not a number");
    if (cells[0].empty()) throw ParseError(source, lineno, "empty specimen id");
    if (!ids.insert(cells[0]).second) throw ValidationError(source + ":" + std::to_string(lineno) + ": duplicate specimen id '" + cells[0] + "'");
    if (!(*t > 0) || !std::isfinite(*t))
      throw ValidationError(source + ":" + std::to_string(lineno) + ": specimen " + cells[0] +
                            " has non-positive failure time " + cells[1]);
    if (!(*k > 0) || !std::isfinite(*k))
      throw ValidationError(source + ":" + std::to_string(lineno) + ": specimen " + cells[0] +
                            " has non-positive loading rate " + cells[2]);
    d.records.push_back({cells[0], *t, *k});
  }
  if (!header) throw ParseError(source, lineno, "missing header");
  if (d.records.empty()) throw ValidationError(source + ": no records");
  if (mu_s) {
    if (!(*mu_s > 0)) throw ValidationError(source + ": mu_s override must be positive");
    d.mu_s = *mu_s;
  } else {
    d.mu_s = d.mean_time();
  }
  return d;
}

inline Dataset load_dataset(const std::string& path, std::optional<double> mu_s = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
  return read_dataset(in, path, mu_s);
}

inline void write_dataset(std::ostream& out, const Dataset& d) {
  out << kDatasetHeader << '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& r = d.records[i];
    out << (r.id.empty() ? std::to_string(i + 1) : r.id) << ',' << format_double(r.time) << ','
        << format_double(r.rate) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Synthetic data

/// Loading rates: constant when log_sd = 0, otherwise log-normal around `median`.
struct LoadingRateSpec {
  double median = 1;
  double log_sd = 0;
};

struct SimulationResult {
  Dataset data;
  std::size_t redrawn = 0;  // non-failing effect draws that were replaced
};

inline SimulationResult simulate_dataset(const Params& p, std::size_t n, const LoadingRateSpec& k, double mu_s,
                                         std::uint64_t seed, std::size_t max_redraws = 1000,
                                         const SolverOptions& opt = {}) {
  if (n < 1) throw std::invalid_argument("simulate_dataset: n must be >= 1");
  if (!(k.median > 0) || !(k.log_sd >= 0)) throw std::invalid_argument("simulate_dataset: invalid loading-rate law");
  if (!(mu_s > 0)) throw std::invalid_argument("simulate_dataset: mu_s must be positive");
  SimulationResult res;
  res.data.mu_s = mu_s;
  const StreamKey key = StreamKey(seed).sub("simulate");
  for (std::size_t i = 0; i < n; ++i) {
    Stream rng(key.sub(i));
    const double rate = k.log_sd > 0 ? k.median * std::exp(k.log_sd * rng.normal()) : k.median;
    const RampContext ctx{rate, mu_s};
    std::optional<double> t;
    for (std::size_t attempt = 0; attempt <= max_redraws && !t; ++attempt) {
      const auto out = failure_time(sample_effects(p, rng), ctx, opt);
      if (out)
        t = out.time();
      else
        ++res.redrawn;
    }
    if (!t) throw std::runtime_error("simulate_dataset: redraw budget exhausted; parameters rarely give failures");
    res.data.records.push_back({std::to_string(i + 1), *t, rate});
  }
  return res;
}

// ---------------------------------------------------------------------------
// INI files

namespace detail {

using boost::property_tree::ptree;

inline ptree parse_ini(std::istream& in, const std::string& source) {
  ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(source, e.line(), e.message());
  }
  return tree;
}

template <class T>
T get_value(const ptree& node, const std::string& where) {
  const std::string text = node.get_value<std::string>();
  if constexpr (std::is_same_v<T, std::string>) {
    return text;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError(where + ": expected true or false, got '" + text + "'");
  } else if constexpr (std::is_floating_point_v<T>) {
    const auto v = parse_double(text);
    if (!v) throw ConfigError(where + ": expected a number, got '" + text + "'");
    return *v;
  } else {
    std::uint64_t v = 0;
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size() || text.empty())
      throw ConfigError(where + ": expected a non-negative integer, got '" + text + "'");
    return static_cast<T>(v);
  }
}

inline std::vector<double> get_list(const ptree& node, const std::string& where) {
  std::vector<double> out;
  std::istringstream ss(node.get_value<std::string>());
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = parse_double(item);
    if (!v) throw ConfigError(where + ": '" + item + "' is not a number");
    out.push_back(*v);
  }
  return out;
}

}  // namespace detail

/// Everything a fit needs besides the data.
struct RunConfig {
  std::optional<ModelId> model;
  std::optional<std::string> data_path;
  std::optional<double> mu_s;
  SamplerConfig sampler;
  LikelihoodConfig likelihood;
};

/// Grammar: INI sections [run], [data], [sampler], [likelihood] with
/// `key = value` lines; `;` starts a comment. Unknown sections or keys are errors.
inline RunConfig read_config(std::istream& in, const std::string& source = "<config>") {
  using detail::get_value;
  const auto tree = detail::parse_ini(in, source);
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError(source + ": key '" + section + "' must be inside a section");
    for (const auto& [key, node] : body) {
      const std::string where = source + ": [" + section + "] " + key;
      if (section == "run") {
        if (key == "model")
          cfg.model = parse_model(get_value<std::string>(node, where));
        else
          throw ConfigError(where + ": unknown key");
      } else if (section == "data") {
        if (key == "path")
          cfg.data_path = get_value<std::string>(node, where);
        else if (key == "mu_s")
          cfg.mu_s = get_value<double>(node, where);
        else
          throw ConfigError(where + ": unknown key");
      } else if (section == "sampler") {
        auto& s = cfg.sampler;
        if (key == "iterations")
          s.iterations = get_value<std::size_t>(node, where);
        else if (key == "burn_in")
          s.burn_in = get_value<std::size_t>(node, where);
        else if (key == "rungs")
          s.rungs = get_value<std::size_t>(node, where);
        else if (key == "ladder_exponent")
          s.ladder_exponent = get_value<double>(node, where);
        else if (key == "temperatures")
          s.temperatures = detail::get_list(node, where);
        else if (key == "initial_scale")
          s.initial_scale = get_value<double>(node, where);
        else if (key == "proposal_scales")
          s.proposal_scales = detail::get_list(node, where);
        else if (key == "target_acceptance")
          s.target_acceptance = get_value<double>(node, where);
        else if (key == "adapt")
          s.adapt = get_value<bool>(node, where);
        else if (key == "swap_stride")
          s.swap_stride = get_value<std::size_t>(node, where);
        else if (key == "seed")
          s.seed = get_value<std::uint64_t>(node, where);
        else if (key == "workers")
          s.workers = get_value<std::size_t>(node, where);
        else if (key == "init_budget")
          s.init_budget = get_value<std::size_t>(node, where);
        else
          throw ConfigError(where + ": unknown key");
      } else if (section == "likelihood") {
        auto& l = cfg.likelihood;
        if (key == "draws")
          l.draws = get_value<std::size_t>(node, where);
        else if (key == "window")
          l.window = get_value<double>(node, where);
        else if (key == "horizon_factor")
          l.solver.horizon_factor = get_value<double>(node, where);
        else if (key == "rel_tol")
          l.solver.rel_tol = get_value<double>(node, where);
        else
          throw ConfigError(where + ": unknown key");
      } else {
        throw ConfigError(source + ": unknown section [" + section + "]");
      }
    }
  }
  try {
    cfg.sampler.validate();
    cfg.likelihood.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  return read_config(in, path);
}

/// Generating parameters for `simulate`.
struct ParamsFile {
  Params params;
  std::optional<double> mu_s;
  std::optional<LoadingRateSpec> loading;
};

/// Grammar: [run] model = us|canadian|canadian2; [params] one key per
/// parameter name; optional [data] mu_s and [loading] k, k_log_sd.
inline ParamsFile read_params(std::istream& in, const std::string& source = "<params>",
                              std::optional<ModelId> model = std::nullopt) {
  using detail::get_value;
  const auto tree = detail::parse_ini(in, source);
  std::map<std::string, double> values;
  std::optional<double> mu_s;
  std::optional<LoadingRateSpec> loading;
  for (const auto& [section, body] : tree) {
    for (const auto& [key, node] : body) {
      const std::string where = source + ": [" + section + "] " + key;
      if (section == "run" && key == "model") {
        const auto m = parse_model(get_value<std::string>(node, where));
        if (model && *model != m)
          throw ConfigError(where + ": file is for model " + std::string(to_string(m)) + ", not " +
                            std::string(to_string(*model)));
        model = m;
      } else if (section == "params") {
        values[key] = get_value<double>(node, where);
      } else if (section == "data" && key == "mu_s") {
        mu_s = get_value<double>(node, where);
      } else if (section == "loading" && (key == "k" || key == "k_log_sd")) {
        if (!loading) loading = LoadingRateSpec{};
        (key == "k" ? loading->median : loading->log_sd) = get_value<double>(node, where);
      } else {
        throw ConfigError(where + ": unknown key");
      }
    }
  }
  if (!model) throw ConfigError(source + ": model not given");
  std::vector<double> v;
  for (const auto& name : parameter_names(*model)) {
    auto it = values.find(name);
    if (it == values.end()) throw ConfigError(source + ": missing parameter " + name);
    v.push_back(it->second);
    values.erase(it);
  }
  if (!values.empty()) throw ConfigError(source + ": unknown parameter " + values.begin()->first);
  return {Params(*model, v), mu_s, loading};
}

inline ParamsFile load_params(const std::string& path, std::optional<ModelId> model = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open params file '" + path + "'");
  return read_params(in, path, model);
}

// ---------------------------------------------------------------------------
// Posterior traces

/// One row per retained iteration: iteration, parameters..., log_likelihood.
inline void write_rung_csv(std::ostream& out, const std::vector<std::string>& names, const RungSamples& rung,
                           std::size_t first_iteration) {
  out << "iteration";
  for (const auto& n : names) out << ',' << n;
  out << ",log_likelihood\n";
  for (std::size_t i = 0; i < rung.draws.size(); ++i) {
    out << first_iteration + i;
    for (double v : rung.draws[i]) out << ',' << format_double(v);
    out << ',' << format_double(rung.log_likelihood[i]) << '\n';
  }
}

inline RungSamples read_rung_csv(std::istream& in, const std::string& source, std::vector<std::string>* names = nullptr) {
  RungSamples rung;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = detail::split_csv(line);
    if (lineno == 1) {
      if (cells.size() < 3 || cells.front() != "iteration" || cells.back() != "log_likelihood")
        throw ParseError(source, lineno, "not a posterior trace header");
      width = cells.size();
      if (names) names->assign(cells.begin() + 1, cells.end() - 1);
      continue;
    }
    if (cells.size() != width) throw ParseError(source, lineno, "wrong number of fields");
    std::vector<double> row;
    for (std::size_t j = 1; j < width; ++j) {
      const std::string& c = cells[j];
      std::optional<double> v = parse_double(c);
      if (!v && (c == "-inf" || c == "inf")) v = c == "inf" ? INFINITY : -INFINITY;
      if (!v) throw ParseError(source, lineno, "'" + c + "' is not a number");
      row.push_back(*v);
    }
    rung.log_likelihood.push_back(row.back());
    row.pop_back();
    rung.draws.push_back(std::move(row));
  }
  if (width == 0) throw ParseError(source, lineno, "empty trace");
  return rung;
}

}  // namespace adm::io
