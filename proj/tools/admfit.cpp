// admfit: command-line front end for dimensional analysis, simulation,
// tempered fitting, evidence, model comparison and posterior prediction.

#include "adm/dimensions.hpp"
#include "adm/io.hpp"
#include "adm/predictive.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace adm;

namespace {

constexpr const char* kVersion = "1.0.0";

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kInput = 3, kSolver = 4, kNotReproduced = 5, kCheckFailed = 6 };

class CommandError : public std::runtime_error {
 public:
  CommandError(std::string kind, int code, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)), code_(code) {}
  const std::string& kind() const noexcept { return kind_; }
  int code() const noexcept { return code_; }

 private:
  std::string kind_;
  int code_;
};

struct HelpShown {
  int code;
};

struct Outcome {
  json result;
  json manifest;
  std::optional<fs::path> manifest_path;  // written beside file outputs; inline otherwise
};

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string digest_of(const std::string& bytes) { return io::digest_hex(fnv1a64(bytes)); }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

json read_json(const fs::path& path) {
  try {
    return json::parse(io::read_file(path.string()));
  } catch (const json::exception& e) {
    throw io::ValidationError(path.string() + ": " + e.what());
  }
}

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

json base_manifest(const std::string& command, const std::vector<std::string>& argv) {
  return {{"tool", "admfit"},
          {"version", kVersion},
          {"command", command},
          {"argv", argv},
          {"cwd", fs::current_path().string()},
          {"seed", nullptr},
          {"model", nullptr},
          {"config_digest", nullptr},
          {"dataset_digest", nullptr},
          {"inputs", json::object()},
          {"outputs", json::object()}};
}

void add_input(json& manifest, const std::string& role, const std::string& path) {
  manifest["inputs"][role] = {{"path", fs::absolute(path).string()}, {"digest", io::file_digest(path)}};
}

// ---------------------------------------------------------------------------
// Run directories

struct RunDir {
  fs::path dir;
  json summary;
  ModelId model;
  std::vector<std::string> names;
  Dataset data;

  static RunDir open(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw io::ValidationError("run directory '" + dir.string() + "' does not exist");
    RunDir r;
    r.dir = dir;
    r.summary = read_json(dir / "summary.json");
    try {
      r.model = parse_model(r.summary.at("model").get<std::string>());
      r.names = r.summary.at("names").get<std::vector<std::string>>();
      r.data = io::load_dataset((dir / "data.csv").string(), r.summary.at("mu_s").get<double>());
    } catch (const json::exception& e) {
      throw io::ValidationError((dir / "summary.json").string() + ": " + e.what());
    }
    return r;
  }

  std::vector<double> temperatures() const { return summary.at("temperatures").get<std::vector<double>>(); }

  fs::path rung_path(std::size_t r) const {
    char name[32];
    std::snprintf(name, sizeof name, "rung_%02zu.csv", r);
    return dir / name;
  }

  RungSamples rung(std::size_t r) const {
    std::ifstream in(rung_path(r));
    if (!in) throw io::ValidationError("missing trace '" + rung_path(r).string() + "'");
    std::vector<std::string> got;
    auto s = io::read_rung_csv(in, rung_path(r).string(), &got);
    if (got != names) throw io::ValidationError(rung_path(r).string() + ": columns do not match summary.json");
    s.temperature = temperatures().at(r);
    return s;
  }

  PosteriorSamples samples() const {
    PosteriorSamples s;
    s.names = names;
    const auto t = temperatures();
    for (std::size_t r = 0; r < t.size(); ++r) s.rungs.push_back(rung(r));
    return s;
  }

  std::vector<Params> posterior() const { return posterior_params(rung(temperatures().size() - 1), model); }
};

json evidence_json(const EvidenceEstimate& ev) {
  json means = json::array();
  for (double m : ev.rung_means) means.push_back(number(m));
  return {{"log_marginal", number(ev.log_marginal)},
          {"standard_error", number(ev.standard_error)},
          {"temperatures", ev.temperatures},
          {"rung_means", means},
          {"substituted_rungs", ev.substituted}};
}

// ---------------------------------------------------------------------------
// Commands

struct PiGroupsOptions {
  std::string preset;
  std::string quantities;
  std::string repeating;
  std::string predictand;
  std::string out;
};

Outcome cmd_pi_groups(const PiGroupsOptions& o, json manifest) {
  namespace dm = adm::dimensions;
  if (o.preset.empty() == o.quantities.empty())
    throw CommandError("usage", kUsage, "give exactly one of --preset or --quantities");
  std::optional<dm::QuantitySystem> system;
  if (!o.preset.empty()) {
    if (o.preset != "table1") throw CommandError("usage", kUsage, "unknown preset '" + o.preset + "'");
    system = dm::table1_system();
  } else {
    if (o.repeating.empty()) throw CommandError("usage", kUsage, "--quantities needs --repeating");
    std::vector<std::string> rep;
    std::stringstream ss(o.repeating);
    for (std::string s; std::getline(ss, s, ',');) rep.push_back(s);
    std::ifstream in(o.quantities);
    if (!in) throw std::runtime_error("cannot open quantities '" + o.quantities + "'");
    system = dm::read_quantities_csv(in, rep, o.predictand.empty() ? std::nullopt : std::optional(o.predictand));
    add_input(manifest, "quantities", o.quantities);
  }
  const auto groups = dm::derive_pi_system(*system);
  json out = json::array();
  for (const auto& g : groups) {
    json e = json::object();
    e[g.target] = dm::to_string(g.exponent(g.target));
    for (const auto& q : system->quantities())
      if (q.symbol != g.target && g.exponent(q.symbol).numerator() != 0) e[q.symbol] = dm::to_string(g.exponent(q.symbol));
    out.push_back({{"label", g.label}, {"target", g.target}, {"exponents", e}});
  }
  Outcome res{{{"groups", out}}, manifest, std::nullopt};
  if (!o.out.empty()) {
    std::ostringstream csv;
    dm::write_pi_csv(csv, *system, groups);
    write_text(o.out, csv.str());
    res.manifest["outputs"][fs::path(o.out).filename().string()] = digest_of(csv.str());
    res.manifest_path = o.out + ".manifest.json";
  }
  return res;
}

struct SimulateOptions {
  std::string model;
  std::string params;
  std::size_t n = 98;
  std::uint64_t seed = 1;
  std::string out;
  std::optional<double> k, k_log_sd, mu_s;
  std::size_t max_redraws = 1000;
};

Outcome cmd_simulate(const SimulateOptions& o, json manifest) {
  const ModelId model = parse_model(o.model);
  const auto pf = io::load_params(o.params, model);
  io::LoadingRateSpec k = pf.loading.value_or(io::LoadingRateSpec{1.0, 0.0});
  if (o.k) k.median = *o.k;
  if (o.k_log_sd) k.log_sd = *o.k_log_sd;
  const double mu_s = o.mu_s.value_or(pf.mu_s.value_or(31.0));
  const auto sim = io::simulate_dataset(pf.params, o.n, k, mu_s, o.seed, o.max_redraws);
  std::ostringstream csv;
  io::write_dataset(csv, sim.data);
  write_text(o.out, csv.str());

  manifest["seed"] = o.seed;
  manifest["model"] = o.model;
  manifest["dataset_digest"] = digest_of(csv.str());
  add_input(manifest, "params", o.params);
  manifest["outputs"][fs::path(o.out).filename().string()] = digest_of(csv.str());
  json result = {{"out", o.out},       {"n", o.n},
                 {"mean_time", sim.data.mean_time()},
                 {"redrawn", sim.redrawn}, {"mu_s", mu_s},
                 {"k_median", k.median},   {"k_log_sd", k.log_sd}};
  return {result, manifest, o.out + ".manifest.json"};
}

struct FitOptions {
  std::string model;
  std::string data;
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<double> mu_s;
};

Outcome cmd_fit(const FitOptions& o, json manifest) {
  const Clock clock;
  io::RunConfig rc;
  std::string config_text;
  if (!o.config.empty()) {
    config_text = io::read_file(o.config);
    std::istringstream in(config_text);
    rc = io::read_config(in, o.config);
    add_input(manifest, "config", o.config);
  }
  if (o.seed) rc.sampler.seed = *o.seed;
  if (o.workers) rc.sampler.workers = *o.workers;
  if (o.mu_s) rc.mu_s = *o.mu_s;
  const ModelId model = !o.model.empty() ? parse_model(o.model)
                        : rc.model      ? *rc.model
                                        : throw CommandError("usage", kUsage, "no model given (--model or [run] model)");
  const std::string data_path = !o.data.empty() ? o.data
                                : rc.data_path  ? *rc.data_path
                                                : throw CommandError("usage", kUsage, "no dataset given (--data or [data] path)");
  const std::string data_text = io::read_file(data_path);
  std::istringstream data_in(data_text);
  const Dataset data = io::read_dataset(data_in, data_path, rc.mu_s);
  add_input(manifest, "data", data_path);

  const HierarchicalModel target(model, data, rc.likelihood);
  const auto samples = run_parallel_tempering(target, rc.sampler);

  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  write_text(dir / "config.ini", config_text);
  write_text(dir / "data.csv", data_text);
  json outputs = json::object();
  for (std::size_t r = 0; r < samples.rungs.size(); ++r) {
    std::ostringstream csv;
    io::write_rung_csv(csv, samples.names, samples.rungs[r], rc.sampler.burn_in);
    char name[32];
    std::snprintf(name, sizeof name, "rung_%02zu.csv", r);
    write_text(dir / name, csv.str());
    outputs[name] = digest_of(csv.str());
  }

  json rungs = json::array();
  for (const auto& r : samples.rungs)
    rungs.push_back({{"temperature", r.temperature},
                     {"acceptance_rate", r.acceptance_rate()},
                     {"solver_failures", r.solver_failures},
                     {"proposal_scales", r.proposal_scales}});
  json swaps = json::array();
  for (std::size_t i = 0; i + 1 < samples.rungs.size(); ++i) swaps.push_back(samples.swap_rate(i));
  json quantiles = json::array();
  for (const auto& q : summarize_posterior(samples.posterior(), samples.names))
    quantiles.push_back({{"name", q.name}, {"q025", q.q025}, {"q50", q.q50}, {"q975", q.q975}});
  const json summary = {{"model", to_string(model)},
                        {"names", samples.names},
                        {"n", data.size()},
                        {"mu_s", data.mu_s},
                        {"temperatures", samples.temperatures()},
                        {"iterations", samples.iterations},
                        {"burn_in", samples.burn_in},
                        {"draws", rc.likelihood.draws},
                        {"window", rc.likelihood.window},
                        {"seed", rc.sampler.seed},
                        {"rungs", rungs},
                        {"swap_rates", swaps},
                        {"posterior", quantiles}};
  const std::string summary_text = summary.dump(2) + "\n";
  write_text(dir / "summary.json", summary_text);
  outputs["summary.json"] = digest_of(summary_text);

  manifest["seed"] = rc.sampler.seed;
  manifest["model"] = to_string(model);
  manifest["config_digest"] = digest_of(config_text);
  manifest["dataset_digest"] = digest_of(data_text);
  manifest["iterations"] = samples.iterations;
  manifest["burn_in"] = samples.burn_in;
  manifest["rungs"] = samples.rungs.size();
  manifest["wall_clock_s"] = clock.seconds();
  manifest["outputs"] = outputs;
  json result = {{"run", dir.string()}, {"model", to_string(model)}, {"posterior", quantiles}, {"swap_rates", swaps}};
  return {result, manifest, dir / "manifest.json"};
}

Outcome cmd_evidence(const std::string& run, std::size_t batches, json manifest) {
  const auto r = RunDir::open(run);
  const auto ev = estimate_log_marginal(r.samples(), batches);
  json result = evidence_json(ev);
  result["run"] = run;
  result["model"] = to_string(r.model);
  manifest["model"] = to_string(r.model);
  manifest["inputs"]["run"] = {{"path", fs::absolute(run).string()}, {"digest", io::file_digest((r.dir / "summary.json").string())}};
  return {result, manifest, std::nullopt};
}

Outcome cmd_compare(const std::string& run_a, const std::string& run_b, std::size_t batches, json manifest) {
  const auto a = RunDir::open(run_a);
  const auto b = RunDir::open(run_b);
  if (io::file_digest((a.dir / "data.csv").string()) != io::file_digest((b.dir / "data.csv").string()))
    throw io::ValidationError("runs were fitted to different datasets; evidence is not comparable");
  const auto ea = estimate_log_marginal(a.samples(), batches);
  const auto eb = estimate_log_marginal(b.samples(), batches);
  const auto bf = bayes_factor(ea, eb);
  json result = {{"run_a", run_a},
                 {"run_b", run_b},
                 {"model_a", to_string(a.model)},
                 {"model_b", to_string(b.model)},
                 {"log_Z_a", number(ea.log_marginal)},
                 {"log_Z_b", number(eb.log_marginal)},
                 {"log_B12", number(bf.log_value)},
                 {"B12", number(bf.value)},
                 {"log_B12_standard_error", std::hypot(ea.standard_error, eb.standard_error)}};
  manifest["inputs"]["run_a"] = {{"path", fs::absolute(run_a).string()}, {"digest", io::file_digest((a.dir / "summary.json").string())}};
  manifest["inputs"]["run_b"] = {{"path", fs::absolute(run_b).string()}, {"digest", io::file_digest((b.dir / "summary.json").string())}};
  return {result, manifest, std::nullopt};
}

struct PredictOptions {
  std::string run;
  double k = 0;
  std::size_t draws = 10000;
  std::uint64_t seed = 1;
  std::string out;
};

Outcome cmd_predict(const PredictOptions& o, json manifest) {
  const auto r = RunDir::open(o.run);
  const auto res = predict_failure(r.posterior(), o.k, r.data.mu_s, o.draws, StreamKey(o.seed).sub("predict"));
  std::ostringstream csv;
  csv << "theta_index,T_f,load\n";
  for (const auto& s : res.samples)
    csv << s.theta_index << ',' << io::format_double(s.failure_time) << ',' << io::format_double(s.load) << '\n';
  write_text(o.out, csv.str());
  manifest["seed"] = o.seed;
  manifest["model"] = to_string(r.model);
  manifest["inputs"]["run"] = {{"path", fs::absolute(o.run).string()}, {"digest", io::file_digest((r.dir / "summary.json").string())}};
  manifest["outputs"][fs::path(o.out).filename().string()] = digest_of(csv.str());
  json result = {{"out", o.out},
                 {"k", o.k},
                 {"draws", o.draws},
                 {"failing", res.samples.size()},
                 {"non_failing", res.non_failing},
                 {"solver_failures", res.solver_failures},
                 {"mean_time", res.mean_time},
                 {"se_time", res.se_time},
                 {"mean_load", res.mean_load},
                 {"se_load", res.se_load}};
  return {result, manifest, o.out + ".manifest.json"};
}

struct ReplicateOptions {
  std::string run;
  std::size_t reps = 100;
  std::uint64_t seed = 1;
  std::string out;
  std::string band;
  std::size_t grid_points = 200;
  std::optional<double> central;
};

Outcome cmd_replicate(const ReplicateOptions& o, json manifest) {
  const auto r = RunDir::open(o.run);
  const auto set = replicate_datasets(r.posterior(), r.data, o.reps, StreamKey(o.seed).sub("replicate"));
  std::ostringstream csv;
  csv << "replicate,theta_index," << io::kDatasetHeader << '\n';
  double mean_of_means = 0;
  for (std::size_t i = 0; i < set.replicates.size(); ++i) {
    for (const auto& rec : set.replicates[i].records)
      csv << i << ',' << set.theta_index[i] << ',' << rec.id << ',' << io::format_double(rec.time) << ','
          << io::format_double(rec.rate) << '\n';
    mean_of_means += set.replicates[i].mean_time() / static_cast<double>(set.replicates.size());
  }
  write_text(o.out, csv.str());
  manifest["seed"] = o.seed;
  manifest["model"] = to_string(r.model);
  manifest["inputs"]["run"] = {{"path", fs::absolute(o.run).string()}, {"digest", io::file_digest((r.dir / "summary.json").string())}};
  manifest["outputs"][fs::path(o.out).filename().string()] = digest_of(csv.str());
  json result = {{"out", o.out},
                 {"reps", o.reps},
                 {"redrawn", set.redrawn},
                 {"observed_mean", r.data.mean_time()},
                 {"replicate_mean", mean_of_means}};

  if (!o.band.empty()) {
    if (o.grid_points < 2) throw CommandError("usage", kUsage, "--grid-points must be at least 2");
    double hi = 0;
    for (const auto& rec : r.data.records) hi = std::max(hi, rec.time);
    for (const auto& d : set.replicates)
      for (const auto& rec : d.records) hi = std::max(hi, rec.time);
    std::vector<double> grid(o.grid_points);
    for (std::size_t g = 0; g < grid.size(); ++g) grid[g] = hi * static_cast<double>(g) / static_cast<double>(grid.size() - 1);
    const auto band = ecdf_band(set.replicates, r.data, grid, o.central);
    std::ostringstream bcsv;
    bcsv << "t,observed,lower,upper" << (o.central ? ",central_lower,central_upper" : "") << '\n';
    std::size_t inside = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      bcsv << io::format_double(grid[g]) << ',' << io::format_double(band.observed[g]) << ','
           << io::format_double(band.lower[g]) << ',' << io::format_double(band.upper[g]);
      if (o.central) bcsv << ',' << io::format_double(band.central_lower[g]) << ',' << io::format_double(band.central_upper[g]);
      bcsv << '\n';
      inside += band.lower[g] <= band.observed[g] && band.observed[g] <= band.upper[g];
    }
    write_text(o.band, bcsv.str());
    manifest["outputs"][fs::path(o.band).filename().string()] = digest_of(bcsv.str());
    result["band"] = o.band;
    result["band_coverage"] = static_cast<double>(inside) / static_cast<double>(grid.size());
  }
  return {result, manifest, o.out + ".manifest.json"};
}

struct CheckOptions {
  std::string model;
  std::size_t draws = 1000;
  std::uint64_t seed = 1;
  double k = 1.0;
  double mu_s = 31.0;
  std::string params;
};

Params default_population(ModelId model) {
  switch (model) {
    case ModelId::us:
      return Params(USParams{std::log(1.5), 0.15, std::log(3.0), 0.15});
    case ModelId::canadian:
      return Params(model, CanadianParams{0.0824, 0.00824, std::log(3.0), 0.1, 0.0412, 0.00412, 0.0, 0.2, -0.8473, 0.2});
    case ModelId::canadian2:
      return Params(model, CanadianParams{2.813, 0.1, std::log(3.0), 0.1, 2.12, 0.1, 0.0, 0.2, -0.8473, 0.2});
  }
  throw std::invalid_argument("unknown model");
}

Outcome cmd_check(const CheckOptions& o, json manifest) {
  const ModelId model = parse_model(o.model);
  const Params pop = o.params.empty() ? default_population(model) : io::load_params(o.params, model).params;
  if (!o.params.empty()) add_input(manifest, "params", o.params);
  const RampContext ctx{o.k, o.mu_s};
  ctx.validate();
  const double tolerance = model == ModelId::us ? 1e-6 : 1e-4;
  const StreamKey key = StreamKey(o.seed).sub("check");
  std::size_t compared = 0, both_non_failing = 0, disagreements = 0, solver_failures = 0;
  double max_rel = 0;
  std::vector<double> rel;
  for (std::size_t i = 0; i < o.draws; ++i) {
    Stream rng(key.sub(i));
    const auto e = sample_effects(pop, rng);
    FailureOutcome fast = FailureOutcome::non_failing();
    try {
      fast = failure_time(e, ctx);
    } catch (const ConvergenceFailure&) {
      ++solver_failures;
      continue;
    }
    const auto slow = integrate_damage(e, LoadProfile::ramp(o.k), o.mu_s).outcome;
    if (!fast && !slow) {
      ++both_non_failing;
      continue;
    }
    if (fast.fails() != slow.fails()) {
      ++disagreements;
      continue;
    }
    ++compared;
    const double d = std::fabs(fast.time() - slow.time()) / slow.time();
    rel.push_back(d);
    max_rel = std::max(max_rel, d);
  }
  const bool pass = disagreements == 0 && solver_failures == 0 && max_rel < tolerance;
  manifest["seed"] = o.seed;
  manifest["model"] = o.model;
  json result = {{"model", o.model},
                 {"draws", o.draws},
                 {"compared", compared},
                 {"both_non_failing", both_non_failing},
                 {"disagreements", disagreements},
                 {"solver_failures", solver_failures},
                 {"max_relative_difference", max_rel},
                 {"median_relative_difference", rel.empty() ? 0.0 : quantile(rel, 0.5)},
                 {"tolerance", tolerance},
                 {"pass", pass}};
  return {result, manifest, std::nullopt};
}

// ---------------------------------------------------------------------------
// Dispatch

Outcome execute(const std::vector<std::string>& argv);

Outcome cmd_rerun(const std::string& manifest_file, const std::string& out_dir) {
  json m = read_json(manifest_file);
  if (m.contains("manifest")) m = m["manifest"];
  std::vector<std::string> argv;
  std::string command;
  try {
    argv = m.at("argv").get<std::vector<std::string>>();
    command = m.at("command").get<std::string>();
  } catch (const json::exception& e) {
    throw io::ValidationError(manifest_file + ": not a run manifest (" + e.what() + ")");
  }
  if (command == "rerun") throw CommandError("usage", kUsage, "a rerun manifest cannot be rerun");
  const fs::path target = fs::absolute(out_dir);
  fs::create_directories(target);

  const fs::path here = fs::current_path();
  fs::current_path(m.at("cwd").get<std::string>());
  struct Restore {
    fs::path p;
    ~Restore() { fs::current_path(p); }
  } restore{here};

  for (const auto& [role, input] : m["inputs"].items()) {
    const std::string path = input.at("path");
    const std::string recorded = input.at("digest");
    const bool is_run = fs::is_directory(path);
    const std::string now = is_run ? io::file_digest((fs::path(path) / "summary.json").string()) : io::file_digest(path);
    if (now != recorded)
      throw CommandError("input_changed", kNotReproduced, "input '" + role + "' (" + path + ") no longer matches its digest");
  }

  // outputs land in out_dir, keeping their file names
  for (std::size_t i = 0; i < argv.size(); ++i) {
    auto redirect = [&](const std::string& value, bool is_dir) {
      return is_dir ? target.string() : (target / fs::path(value).filename()).string();
    };
    for (const std::string flag : {"--out", "--out-dir", "--band"}) {
      if (argv[i] == flag && i + 1 < argv.size()) {
        argv[i + 1] = redirect(argv[i + 1], flag == "--out-dir");
        ++i;
        break;
      }
      if (argv[i].rfind(flag + "=", 0) == 0) {
        argv[i] = flag + "=" + redirect(argv[i].substr(flag.size() + 1), flag == "--out-dir");
        break;
      }
    }
  }
  const Outcome again = execute(argv);

  json expected = m["outputs"], actual = again.manifest["outputs"];
  if (expected.empty()) expected = {{"result", m.value("result_digest", "")}};
  if (actual.empty()) actual = {{"result", digest_of(again.result.dump())}};
  json diff = json::object();
  bool same = true;
  for (const auto& [name, digest] : expected.items()) {
    const std::string got = actual.value(name, "");
    diff[name] = {{"expected", digest}, {"actual", got}};
    same = same && got == digest.get<std::string>();
  }
  if (again.manifest_path) write_text(*again.manifest_path, again.manifest.dump(2) + "\n");
  if (!same) {
    throw CommandError("not_reproduced", kNotReproduced, "rerun outputs differ from the manifest: " + diff.dump());
  }
  return {{{"command", command}, {"reproduced", true}, {"outputs", diff}, {"out_dir", target.string()}},
          base_manifest("rerun", {}),
          std::nullopt};
}

Outcome execute(const std::vector<std::string>& argv) {
  CLI::App app{"Accumulated-damage models: dimensional analysis, simulation and Bayesian fitting", "admfit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  PiGroupsOptions pi;
  auto* s_pi = app.add_subcommand("pi-groups", "Derive Buckingham pi groups");
  s_pi->add_option("--preset", pi.preset, "Built-in quantity system (table1)");
  s_pi->add_option("--quantities", pi.quantities, "CSV: symbol,name,<base dims...>");
  s_pi->add_option("--repeating", pi.repeating, "Comma-separated repeating symbols");
  s_pi->add_option("--predictand", pi.predictand, "Symbol of the predictand");
  s_pi->add_option("--out", pi.out, "Also write group,symbol,exponent CSV");

  SimulateOptions sim;
  auto* s_sim = app.add_subcommand("simulate", "Generate a synthetic ramp-load dataset");
  s_sim->add_option("--model", sim.model)->required()->check(CLI::IsMember({"us", "canadian", "canadian2"}));
  s_sim->add_option("--params", sim.params, "Parameter file")->required();
  s_sim->add_option("--n", sim.n)->required()->check(CLI::PositiveNumber);
  s_sim->add_option("--seed", sim.seed)->required();
  s_sim->add_option("--out", sim.out)->required();
  s_sim->add_option("--k", sim.k, "Median loading rate (psi/s)")->check(CLI::PositiveNumber);
  s_sim->add_option("--k-log-sd", sim.k_log_sd, "Log-scale spread of loading rates")->check(CLI::NonNegativeNumber);
  s_sim->add_option("--mu-s", sim.mu_s, "Reference mean failure time (s)")->check(CLI::PositiveNumber);
  s_sim->add_option("--max-redraws", sim.max_redraws);

  FitOptions fit;
  auto* s_fit = app.add_subcommand("fit", "Parallel-tempering fit; writes a run directory");
  s_fit->add_option("--model", fit.model)->check(CLI::IsMember({"us", "canadian", "canadian2"}));
  s_fit->add_option("--data", fit.data);
  s_fit->add_option("--config", fit.config);
  s_fit->add_option("--out-dir", fit.out_dir)->required();
  s_fit->add_option("--seed", fit.seed);
  s_fit->add_option("--workers", fit.workers, "Threads (0: all); results do not depend on it");
  s_fit->add_option("--mu-s", fit.mu_s, "Reference mean failure time (s); default the sample mean")
      ->check(CLI::PositiveNumber);

  std::string ev_run;
  std::size_t batches = 20;
  auto* s_ev = app.add_subcommand("evidence", "Thermodynamic-integration log marginal likelihood");
  s_ev->add_option("--run", ev_run)->required();
  s_ev->add_option("--batches", batches)->check(CLI::PositiveNumber);

  std::string run_a, run_b;
  auto* s_cmp = app.add_subcommand("compare", "Bayes factor of run A over run B");
  s_cmp->add_option("--run-a", run_a)->required();
  s_cmp->add_option("--run-b", run_b)->required();
  s_cmp->add_option("--batches", batches)->check(CLI::PositiveNumber);

  PredictOptions pred;
  auto* s_pred = app.add_subcommand("predict", "Posterior predictive failure times at a loading rate");
  s_pred->add_option("--run", pred.run)->required();
  s_pred->add_option("--k", pred.k)->required()->check(CLI::PositiveNumber);
  s_pred->add_option("--draws", pred.draws)->check(CLI::PositiveNumber);
  s_pred->add_option("--seed", pred.seed);
  s_pred->add_option("--out", pred.out)->required();

  ReplicateOptions rep;
  auto* s_rep = app.add_subcommand("replicate", "Replicate datasets and an ECDF band");
  s_rep->add_option("--run", rep.run)->required();
  s_rep->add_option("--reps", rep.reps)->check(CLI::PositiveNumber);
  s_rep->add_option("--seed", rep.seed);
  s_rep->add_option("--out", rep.out)->required();
  s_rep->add_option("--band", rep.band, "Write t,observed,lower,upper CSV");
  s_rep->add_option("--grid-points", rep.grid_points);
  s_rep->add_option("--central", rep.central, "Also a central band of this mass")->check(CLI::Range(0.0, 1.0));

  CheckOptions chk;
  auto* s_chk = app.add_subcommand("check", "Cross-check fast failure times against the ODE oracle");
  s_chk->add_option("--model", chk.model)->required()->check(CLI::IsMember({"us", "canadian", "canadian2"}));
  s_chk->add_option("--draws", chk.draws)->check(CLI::PositiveNumber);
  s_chk->add_option("--seed", chk.seed);
  s_chk->add_option("--k", chk.k)->check(CLI::PositiveNumber);
  s_chk->add_option("--mu-s", chk.mu_s)->check(CLI::PositiveNumber);
  s_chk->add_option("--params", chk.params);

  std::string manifest_file, rerun_out;
  auto* s_rerun = app.add_subcommand("rerun", "Repeat a run from its manifest and verify the outputs");
  s_rerun->add_option("--manifest", manifest_file)->required();
  s_rerun->add_option("--out-dir", rerun_out)->required();

  std::vector<std::string> reversed(argv.rbegin(), argv.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    throw HelpShown{app.exit(e)};
  }

  const std::string command = app.get_subcommands().front()->get_name();
  json manifest = base_manifest(command, argv);
  if (s_pi->parsed()) return cmd_pi_groups(pi, manifest);
  if (s_sim->parsed()) return cmd_simulate(sim, manifest);
  if (s_fit->parsed()) return cmd_fit(fit, manifest);
  if (s_ev->parsed()) return cmd_evidence(ev_run, batches, manifest);
  if (s_cmp->parsed()) return cmd_compare(run_a, run_b, batches, manifest);
  if (s_pred->parsed()) return cmd_predict(pred, manifest);
  if (s_rep->parsed()) return cmd_replicate(rep, manifest);
  if (s_chk->parsed()) return cmd_check(chk, manifest);
  return cmd_rerun(manifest_file, rerun_out);
}

void error_line(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    Outcome out = execute(args);
    const bool check_failed = out.result.contains("pass") && !out.result["pass"].get<bool>();
    if (out.manifest["command"] != "rerun") {
      if (out.manifest_path) {
        write_text(*out.manifest_path, out.manifest.dump(2) + "\n");
        out.result["manifest"] = out.manifest_path->string();
      } else {
        out.manifest["result_digest"] = digest_of(out.result.dump());
        out.result["manifest"] = out.manifest;
      }
    }
    std::cout << out.result.dump(2) << std::endl;
    if (check_failed) {
      error_line("check_failed", "fast solver and ODE oracle disagree beyond tolerance");
      return kCheckFailed;
    }
    return kOk;
  } catch (const HelpShown& h) {
    return h.code;
  } catch (const CLI::ParseError& e) {
    error_line("usage", e.what());
    return kUsage;
  } catch (const CommandError& e) {
    error_line(e.kind(), e.what());
    return e.code();
  } catch (const io::ParseError& e) {
    error_line("parse_error", e.what());
    return kInput;
  } catch (const io::ValidationError& e) {
    error_line("validation_error", e.what());
    return kInput;
  } catch (const io::ConfigError& e) {
    error_line("config_error", e.what());
    return kInput;
  } catch (const dimensions::DimensionError& e) {
    error_line("dimension_error", e.what());
    return kInput;
  } catch (const InitializationFailure& e) {
    error_line("initialization_failure", e.what());
    return kSolver;
  } catch (const ConvergenceFailure& e) {
    error_line("convergence_failure", e.what());
    return kSolver;
  } catch (const std::invalid_argument& e) {
    error_line("invalid_argument", e.what());
    return kInput;
  } catch (const std::exception& e) {
    error_line("runtime_error", e.what());
    return kFailure;
  }
}
