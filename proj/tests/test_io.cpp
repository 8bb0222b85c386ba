#include "adm/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

using namespace adm;
using namespace adm::io;

namespace {

Dataset parse(const std::string& text, std::optional<double> mu_s = std::nullopt) {
  std::istringstream in(text);
  return read_dataset(in, "test.csv", mu_s);
}

std::size_t parse_error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

RunConfig config(const std::string& text) {
  std::istringstream in(text);
  return read_config(in, "test.ini");
}

ParamsFile params(const std::string& text, std::optional<ModelId> model = std::nullopt) {
  std::istringstream in(text);
  return read_params(in, "params.ini", model);
}

const std::string kHeader = std::string(kDatasetHeader) + "\n";

}  // namespace

TEST(Numbers, ShortestTextRoundTrips) {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int i = 0; i < 20000; ++i) {
    double v;
    const auto b = bits(gen);
    std::memcpy(&v, &b, sizeof v);
    if (!std::isfinite(v)) continue;
    ASSERT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_EQ(format_double(31.0), "31");
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(parse_double(" 2.5 "), 2.5);
  EXPECT_FALSE(parse_double("2.5x"));
  EXPECT_FALSE(parse_double(""));
}

TEST(Digest, Fnv1aReferenceVectors) {
  EXPECT_EQ(digest_hex(fnv1a64("")), "fnv1a64:cbf29ce484222325");
  EXPECT_EQ(digest_hex(fnv1a64("a")), "fnv1a64:af63dc4c8601ec8c");
  EXPECT_EQ(digest_hex(fnv1a64("foobar")), "fnv1a64:85944171f73967e8");
}

TEST(ReadDataset, ThreeRowsGiveTheirMean) {
  const auto d = parse(kHeader + "a,30,0.5\nb,20,1\nc,40,2\n");
  ASSERT_EQ(d.size(), 3u);
  EXPECT_DOUBLE_EQ(d.mu_s, 30.0);
  EXPECT_EQ(d.records[1].id, "b");
  EXPECT_EQ(d.records[2].rate, 2.0);
}

TEST(ReadDataset, OverrideAndComments) {
  const auto d = parse("# synthetic\n" + kHeader + "# note\na,30,0.5\r\n\nb,20,1\n", 31.0);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.mu_s, 31.0);
}

TEST(ReadDataset, ParseErrorsCarryLineNumbers) {
  EXPECT_EQ(parse_error_line("id,t,k\na,1,1\n"), 1u);
  EXPECT_EQ(parse_error_line(kHeader + "a,1,1\nb,1\n"), 3u);
  EXPECT_EQ(parse_error_line(kHeader + "a,1,1\nb,1,1\nc,abc,1\n"), 4u);
  EXPECT_EQ(parse_error_line(kHeader + ",1,1\n"), 2u);
  EXPECT_THROW(parse(""), ParseError);
}

TEST(ReadDataset, ValidationErrorsNameTheRow) {
  try {
    parse(kHeader + "a,30,1\nbad_one,-1,1\n");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("bad_one"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos);
  }
  EXPECT_THROW(parse(kHeader + "a,30,0\n"), ValidationError);
  EXPECT_THROW(parse(kHeader + "a,30,1\na,31,1\n"), ValidationError);
  EXPECT_THROW(parse(kHeader), ValidationError);
  EXPECT_THROW(parse(kHeader + "a,30,1\n", -2.0), ValidationError);
}

TEST(ReadDataset, ShippedSyntheticStandIn) {
  const auto d = load_dataset(std::string(ADM_DATA_DIR) + "/synthetic_ramp_98.csv");
  EXPECT_EQ(d.size(), 98u);
  EXPECT_NEAR(d.mu_s, 31.0, 1e-9);
}

TEST(Simulate, DegenerateLawGivesIdenticalTimes) {
  const Params p(USParams{0.2, 0.0, 0.4, 0.0});
  const auto r = simulate_dataset(p, 20, {1.0, 0.3}, 31.0, 5);
  for (const auto& rec : r.data.records) EXPECT_EQ(rec.time, r.data.records[0].time);
}

TEST(Simulate, SameSeedSameFile) {
  const Params p(USParams{0.2, 0.3, 0.4, 0.3});
  std::ostringstream a, b, c;
  write_dataset(a, simulate_dataset(p, 50, {1.0, 0.3}, 31.0, 9).data);
  write_dataset(b, simulate_dataset(p, 50, {1.0, 0.3}, 31.0, 9).data);
  write_dataset(c, simulate_dataset(p, 50, {1.0, 0.3}, 31.0, 10).data);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str(), c.str());
}

TEST(Simulate, CentredUsLawAveragesNearReferenceMean) {
  // B = 1 and e^A = e - 1 put the deterministic solve at exactly mu_s
  const double mu_A = std::log(std::log(std::exp(1.0) - 1.0));
  const Params central(USParams{mu_A, 0.0, 0.0, 0.0});
  EXPECT_NEAR(simulate_dataset(central, 1, {1.0, 0}, 31.0, 1).data.records[0].time, 31.0, 1e-12);

  const Params p(USParams{mu_A, 0.05, 0.0, 0.05});
  const auto d = simulate_dataset(p, 98, {1.0, 0}, 31.0, 3).data;
  double m = d.mean_time(), ss = 0;
  for (const auto& r : d.records) ss += (r.time - m) * (r.time - m);
  const double se = std::sqrt(ss / 97 / 98);
  EXPECT_NEAR(m, 31.0, 3 * se);
}

TEST(Simulate, RoundTripIsBitExact) {
  const Params p(ModelId::canadian, CanadianParams{0.08, 0.008, std::log(3.0), 0.1, 0.04, 0.004, 0, 0.2, -0.85, 0.2});
  const auto sim = simulate_dataset(p, 40, {1.0, 0.3}, 31.0, 4).data;
  std::stringstream ss;
  write_dataset(ss, sim);
  const auto back = read_dataset(ss, "roundtrip", 31.0);
  ASSERT_EQ(back.size(), sim.size());
  for (std::size_t i = 0; i < sim.size(); ++i) {
    EXPECT_EQ(back.records[i].id, sim.records[i].id);
    EXPECT_EQ(back.records[i].time, sim.records[i].time);
    EXPECT_EQ(back.records[i].rate, sim.records[i].rate);
  }
}

TEST(Simulate, RedrawBudgetExhaustion) {
  const Params p(ModelId::canadian, CanadianParams{-5, 0.1, 1, 0.1, 0.5, 0.1, 0, 0.1, 0, 0.1});
  EXPECT_THROW(simulate_dataset(p, 3, {1.0, 0}, 31.0, 1, 10), std::runtime_error);
}

TEST(Config, ParsesEverySection) {
  const auto c = config(R"(; desk run
[run]
model = canadian
[data]
path = data/synthetic_ramp_98.csv
mu_s = 31
[sampler]
iterations = 2000
burn_in = 500
rungs = 8
ladder_exponent = 4
initial_scale = 0.05
target_acceptance = 0.3
adapt = false
swap_stride = 2
seed = 17
workers = 4
init_budget = 50
[likelihood]
draws = 1000
window = 0.25
horizon_factor = 1e5
rel_tol = 1e-11
)");
  EXPECT_EQ(c.model, ModelId::canadian);
  EXPECT_EQ(c.data_path, "data/synthetic_ramp_98.csv");
  EXPECT_EQ(c.mu_s, 31.0);
  EXPECT_EQ(c.sampler.iterations, 2000u);
  EXPECT_EQ(c.sampler.burn_in, 500u);
  EXPECT_EQ(c.sampler.rungs, 8u);
  EXPECT_EQ(c.sampler.ladder_exponent, 4.0);
  EXPECT_EQ(c.sampler.initial_scale, 0.05);
  EXPECT_EQ(c.sampler.target_acceptance, 0.3);
  EXPECT_FALSE(c.sampler.adapt);
  EXPECT_EQ(c.sampler.swap_stride, 2u);
  EXPECT_EQ(c.sampler.seed, 17u);
  EXPECT_EQ(c.sampler.workers, 4u);
  EXPECT_EQ(c.sampler.init_budget, 50u);
  EXPECT_EQ(c.likelihood.draws, 1000u);
  EXPECT_EQ(c.likelihood.window, 0.25);
  EXPECT_EQ(c.likelihood.solver.horizon_factor, 1e5);
  EXPECT_EQ(c.likelihood.solver.rel_tol, 1e-11);
}

TEST(Config, ExplicitLadderAndScales) {
  const auto c = config("[sampler]\ntemperatures = 0, 0.1, 0.5, 1\nproposal_scales = 0.1,0.2\n");
  EXPECT_EQ(c.sampler.ladder().temperatures(), (std::vector<double>{0, 0.1, 0.5, 1}));
  EXPECT_EQ(*c.sampler.proposal_scales, (std::vector<double>{0.1, 0.2}));
}

TEST(Config, DefaultsWhenEmpty) {
  const auto c = config("");
  EXPECT_FALSE(c.model);
  EXPECT_EQ(c.sampler.iterations, SamplerConfig{}.iterations);
  EXPECT_EQ(c.likelihood.draws, LikelihoodConfig{}.draws);
}

TEST(Config, UnknownOrMalformedEntriesAreErrors) {
  EXPECT_THROW(config("[sampler]\niteratons = 10\n"), ConfigError);
  EXPECT_THROW(config("[samplers]\niterations = 10\n"), ConfigError);
  EXPECT_THROW(config("iterations = 10\n"), ConfigError);
  EXPECT_THROW(config("[sampler]\niterations = ten\n"), ConfigError);
  EXPECT_THROW(config("[sampler]\niterations = -3\n"), ConfigError);
  EXPECT_THROW(config("[sampler]\nadapt = maybe\n"), ConfigError);
  EXPECT_THROW(config("[sampler]\niterations = 100\nburn_in = 100\n"), ConfigError);
  EXPECT_THROW(config("[run]\nmodel = british\n"), std::exception);
  EXPECT_THROW(config("[likelihood]\nwindow = 0\n"), ConfigError);
  EXPECT_THROW(config("[sampler\niterations = 10\n"), ParseError);
}

TEST(ParamsFileFormat, ReadsEveryField) {
  const auto p = params("[run]\nmodel = us\n[params]\nmu_A = 0.4\nsigma_A = 0.1\nmu_B = 1.1\nsigma_B = 0.2\n"
                        "[data]\nmu_s = 31\n[loading]\nk = 2\nk_log_sd = 0.3\n");
  EXPECT_EQ(p.params.model(), ModelId::us);
  EXPECT_EQ(p.params.values(), (std::vector<double>{0.4, 0.1, 1.1, 0.2}));
  EXPECT_EQ(p.mu_s, 31.0);
  ASSERT_TRUE(p.loading);
  EXPECT_EQ(p.loading->median, 2.0);
  EXPECT_EQ(p.loading->log_sd, 0.3);
}

TEST(ParamsFileFormat, ModelCanComeFromTheCaller) {
  const auto p = params("[params]\nmu_A = 0.4\nsigma_A = 0.1\nmu_B = 1.1\nsigma_B = 0.2\n", ModelId::us);
  EXPECT_FALSE(p.loading);
  EXPECT_THROW(params("[run]\nmodel = canadian\n[params]\nmu_A = 0.4\n", ModelId::us), ConfigError);
}

TEST(ParamsFileFormat, MissingOrUnknownParameters) {
  EXPECT_THROW(params("[run]\nmodel = us\n[params]\nmu_A = 0.4\nsigma_A = 0.1\nmu_B = 1.1\n"), ConfigError);
  EXPECT_THROW(params("[run]\nmodel = us\n[params]\nmu_A = 0.4\nsigma_A = 0.1\nmu_B = 1.1\nsigma_B = 0.2\nmu_C = 1\n"),
               ConfigError);
  EXPECT_THROW(params("[params]\nmu_A = 0.4\n"), ConfigError);
  EXPECT_THROW(params("[run]\nmodel = us\n[extra]\nx = 1\n"), ConfigError);
}

TEST(ShippedFiles, ParseCleanly) {
  const std::string dir = ADM_DATA_DIR;
  EXPECT_EQ(load_params(dir + "/params_us.ini").params.model(), ModelId::us);
  EXPECT_EQ(load_params(dir + "/params_canadian.ini").params.model(), ModelId::canadian);
  EXPECT_EQ(load_params(dir + "/params_canadian2.ini").params.model(), ModelId::canadian2);
  const auto c = load_config(dir + "/fit_desk.ini");
  EXPECT_EQ(c.sampler.rungs, 8u);
  EXPECT_EQ(c.sampler.iterations, 2000u);
  EXPECT_EQ(c.likelihood.draws, 1000u);
}

TEST(RungCsv, RoundTripIsBitExact) {
  RungSamples r;
  r.draws = {{0.1, 1.0 / 3.0, -2e-300}, {5e10, 0.7, 1.25}};
  r.log_likelihood = {-123.456789012345678, kNegInf};
  const std::vector<std::string> names{"mu_A", "sigma_A", "mu_B"};
  std::stringstream ss;
  write_rung_csv(ss, names, r, 1000);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "iteration,mu_A,sigma_A,mu_B,log_likelihood");
  std::vector<std::string> got_names;
  const auto back = read_rung_csv(ss, "rung", &got_names);
  EXPECT_EQ(got_names, names);
  EXPECT_EQ(back.draws, r.draws);
  EXPECT_EQ(back.log_likelihood, r.log_likelihood);
}

TEST(RungCsv, RejectsMalformedTraces) {
  std::istringstream bad_header("a,b\n1,2\n");
  EXPECT_THROW(read_rung_csv(bad_header, "x"), ParseError);
  std::istringstream short_row("iteration,x,log_likelihood\n0,1\n");
  EXPECT_THROW(read_rung_csv(short_row, "x"), ParseError);
  std::istringstream empty("");
  EXPECT_THROW(read_rung_csv(empty, "x"), ParseError);
}
