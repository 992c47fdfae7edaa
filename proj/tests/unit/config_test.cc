#include <gtest/gtest.h>

#include "pemlab/config.h"
#include "pemlab/error.h"

using namespace pemlab;

namespace {

std::string error_of(const std::string& text, std::string_view kind = {}) {
  try {
    RunConfig::parse(text, "t.cfg").resolved(kind);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, MinimalGetsDefaults) {
  const auto c = RunConfig::parse("family.kind = tent\n").resolved();
  EXPECT_EQ(c.text("experiment.kind"), "clt");
  EXPECT_EQ(c.count("experiment.n"), 20000u);
  EXPECT_EQ(c.count("experiment.samples"), 2000u);
  EXPECT_DOUBLE_EQ(c.real("family.base"), 1.85);
  EXPECT_DOUBLE_EQ(c.real("family.window"), 0.1);
  EXPECT_EQ(c.text("family.kind"), "tent_slope");
  EXPECT_EQ(c.count("solver.grid_count"), 4096u);
  EXPECT_EQ(c.seed(), 1u);
}

TEST(Config, KindSpecificDefaults) {
  const auto base = RunConfig::parse("family.kind = doubling\n");
  EXPECT_EQ(base.resolved("lil").count("experiment.n"), 1000000u);
  EXPECT_EQ(base.resolved("lil").count("experiment.samples"), 200u);
  EXPECT_EQ(base.resolved("erdos-fortet").text("experiment.variant"), "power");
  EXPECT_DOUBLE_EQ(base.resolved("blocks").real("experiment.gamma"), 0.41);
  EXPECT_EQ(base.resolved("typicality").count("experiment.indicators"), 16u);
}

TEST(Config, FamilyDefaults) {
  const auto beta = RunConfig::parse("family.kind = beta\n").resolved().family();
  EXPECT_NEAR(beta.base(), (1 + std::sqrt(5.0)) / 2, 1e-15);
  EXPECT_DOUBLE_EQ(beta.window(), 0.05);
  const auto markov = RunConfig::parse("family.kind = markov\n").resolved().family();
  EXPECT_DOUBLE_EQ(markov.base(), 0.1);
  EXPECT_EQ(RunConfig::parse("family.kind = doubling\n").resolved().family().kind(),
            FamilyKind::constant_doubling);
}

TEST(Config, RoundTripIsStable) {
  const auto c = RunConfig::parse(
                     "# lab run\n"
                     "family.kind = beta\n"
                     "family.base = 2.5   # inline comment\n"
                     "experiment.kind = lil\n"
                     "experiment.samples = 12\n"
                     "observable.preset = erdos_fortet\n")
                     .resolved();
  const auto again = RunConfig::parse(c.serialize()).resolved();
  EXPECT_EQ(c.serialize(), again.serialize());
  EXPECT_EQ(again.count("experiment.samples"), 12u);
  EXPECT_DOUBLE_EQ(again.family().base(), 2.5);
}

TEST(Config, UnknownFamilyNamesField) {
  const auto msg = error_of("family.kind = logistic\n");
  EXPECT_NE(msg.find("family.kind"), std::string::npos) << msg;
  EXPECT_NE(msg.find("t.cfg:1"), std::string::npos) << msg;
}

TEST(Config, EmptyFileIsError) {
  EXPECT_THROW(RunConfig::parse("", "e.cfg"), ConfigError);
  EXPECT_THROW(RunConfig::parse("# only a comment\n\n", "e.cfg"), ConfigError);
}

TEST(Config, LineDiagnostics) {
  const auto msg = error_of("family.kind = tent\n\nexperiment.n = many\n");
  EXPECT_NE(msg.find("t.cfg:3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("experiment.n"), std::string::npos) << msg;
  try {
    RunConfig::parse("family.kind = tent\nno equals sign\n", "t.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("t.cfg:2"), std::string::npos) << e.what();
  }
}

TEST(Config, DuplicateAndUnknownKeys) {
  EXPECT_THROW(RunConfig::parse("family.kind = tent\nfamily.kind = beta\n"), ConfigError);
  EXPECT_FALSE(error_of("family.kind = tent\nfamily.colour = red\n").empty());
  RunConfig c = RunConfig::parse("family.kind = tent\n");
  EXPECT_THROW(c.set("nonsense.key", "1"), ConfigError);
  c.set("experiment.n", "77");
  EXPECT_EQ(c.resolved().count("experiment.n"), 77u);
}

TEST(Config, InvalidValues) {
  EXPECT_FALSE(error_of("family.kind = tent\nfamily.base = steep\n").empty());
  EXPECT_FALSE(error_of("family.kind = tent\nexperiment.n = -4\n").empty());
  EXPECT_FALSE(error_of("family.kind = tent\nobservable.preset = wiggle\n").empty());
  EXPECT_FALSE(error_of("family.kind = tent\nexperiment.kind = dance\n").empty());
  EXPECT_FALSE(error_of("family.kind = doubling\nexperiment.variant = cube\n", "erdos-fortet").empty());
}

TEST(Config, HashIgnoresSeedAndOutput) {
  const auto a = RunConfig::parse("family.kind = tent\nexperiment.seed = 1\n").resolved();
  const auto b = RunConfig::parse("family.kind = tent\nexperiment.seed = 9\noutput.dir = elsewhere\n")
                     .resolved();
  const auto c = RunConfig::parse("family.kind = tent\nexperiment.n = 100\n").resolved();
  EXPECT_EQ(a.hash8().size(), 8u);
  EXPECT_EQ(a.hash8(), b.hash8());
  EXPECT_NE(a.hash8(), c.hash8());
  EXPECT_EQ(a.hash8(), RunConfig::parse(a.serialize()).resolved().hash8());
}

TEST(Config, ObservableViews) {
  const auto ef = RunConfig::parse("family.kind = doubling\nobservable.preset = erdos_fortet\n")
                      .resolved()
                      .observable();
  EXPECT_NEAR(ef(0.1), std::cos(0.2 * M_PI) + std::cos(0.4 * M_PI), 1e-14);
  const auto custom = RunConfig::parse(
                          "family.kind = doubling\nobservable.preset = custom\n"
                          "observable.terms = const:2,ind:0:0.5:3\n")
                          .resolved()
                          .observable();
  EXPECT_DOUBLE_EQ(custom(0.25), 5.0);
  EXPECT_DOUBLE_EQ(custom(0.75), 2.0);
}

TEST(Terms, Parsing) {
  const auto t = parse_terms("cos:1:1.0,cos:2:0.5");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].kind, Term::Kind::cosine);
  EXPECT_EQ(t[1].k, 2);
  EXPECT_DOUBLE_EQ(t[1].coef, 0.5);
  const auto i = parse_terms("ind:0.25:0.5");
  ASSERT_EQ(i.size(), 1u);
  EXPECT_DOUBLE_EQ(i[0].coef, 1.0);
  EXPECT_DOUBLE_EQ(i[0].q, 0.5);
  const auto b = parse_terms("bump:0.3:0.5:2, linear:4");
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b[0].kind, Term::Kind::holder_bump);
  EXPECT_EQ(b[1].kind, Term::Kind::linear);
  EXPECT_THROW(parse_terms("cos:x"), ConfigError);
  EXPECT_THROW(parse_terms("tan:1"), ConfigError);
}

TEST(Config, ExperimentKinds) {
  for (auto k : kExperimentKinds) EXPECT_TRUE(is_experiment_kind(k));
  EXPECT_FALSE(is_experiment_kind("all"));
}
