#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "maglab/experiment.hpp"

using namespace maglab;

TEST(Config, DefaultsRoundTrip) {
  for (const char* b : {"flat-torus", "torus", "bolza"}) {
    const ExperimentConfig c = default_config(b);
    const Json j = to_json(c);
    EXPECT_EQ(to_json(config_from_json(j)).dump(), j.dump()) << b;
  }
}

TEST(Config, SeedIsMandatory) {
  Json j = to_json(default_config("bolza"));
  j.erase("seed");
  EXPECT_THROW(config_from_json(j), ConfigError);
}

TEST(Config, RejectsUnknownKeysAndRanges) {
  Json j = to_json(default_config("bolza"));
  j["extra"] = 1;
  EXPECT_THROW(config_from_json(j), ConfigError);

  auto with = [](const std::function<void(Json&)>& edit) {
    Json k = to_json(default_config("bolza"));
    edit(k);
    return k;
  };
  EXPECT_THROW(config_from_json(with([](Json& k) { k["backend"] = "sphere"; })), ConfigError);
  EXPECT_THROW(config_from_json(with([](Json& k) { k["bolza"]["kappa_mean"] = 1.2; })), ConfigError);
  EXPECT_THROW(config_from_json(with([](Json& k) { k["carleman"]["sigma"] = 0.0; })), ConfigError);
  EXPECT_THROW(config_from_json(with([](Json& k) { k["batteries"] = {"nonsense"}; })), ConfigError);
  EXPECT_THROW(config_from_json(with([](Json& k) { k["torus"]["kappa"] = {{{"kind", "tan"}, {"a", 1}}}; })),
               ConfigError);
  EXPECT_THROW(config_from_json(with([](Json& k) { k["seed"] = "abc"; })), ConfigError);
}

TEST(Config, SigmaZeroMessageCitesStrictness) {
  ExperimentConfig c = default_config("bolza");
  c.sigma = 0.0;
  try {
    validate(c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("strict"), std::string::npos);
  }
}

TEST(Config, ClassRangesExpand) {
  const auto v = expand_class_list({"g2..g4", "g1g2"});
  EXPECT_EQ(v, (std::vector<std::string>{"g2", "g3", "g4", "g1g2"}));
  EXPECT_THROW(expand_class_list({"g0..g9"}), ConfigError);
  EXPECT_THROW(expand_class_list({"a1..b2"}), ConfigError);
  const TorusClass t = parse_torus_class("(2, -1)");
  EXPECT_EQ(t.m, 2);
  EXPECT_EQ(t.n, -1);
  EXPECT_THROW(parse_torus_class("2"), ConfigError);
}

TEST(Batteries, CatalogHasAnchors) {
  for (const char* b : {"pestov", "carleman", "jacobi"}) EXPECT_FALSE(battery_info(b).anchor.empty());
  EXPECT_THROW(battery_info("nope"), ConfigError);
}

TEST(Batteries, TorusSkipsNegativityBatteries) {
  ExperimentConfig c = default_config("flat-torus");
  c.batteries = {"carleman"};
  const auto r = run_verify(c);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].status, RowStatus::Skipped);
  EXPECT_FALSE(r.failed());
}

TEST(Batteries, SeedChangesMembersNotVerdict) {
  ExperimentConfig c = default_config("flat-torus");
  c.batteries = {"pestov"};
  c.battery_size = 5;
  const auto a = run_verify(c);
  c.seed += 1;
  const auto b = run_verify(c);
  EXPECT_FALSE(a.failed());
  EXPECT_FALSE(b.failed());
  EXPECT_NE(report_json("verify", c, a), report_json("verify", c, b));
}

TEST(Reports, RowsCarryAnchorResidualTolerance) {
  ExperimentConfig c = default_config("flat-torus");
  c.batteries = {"structural", "mode"};
  const auto r = run_verify(c);
  const Json j = Json::parse(report_json("verify", c, r));
  ASSERT_FALSE(j["results"].empty());
  for (const auto& row : j["results"]) {
    EXPECT_FALSE(row["anchor"].get<std::string>().empty());
    EXPECT_TRUE(row.contains("residual"));
    EXPECT_TRUE(row.contains("tolerance"));
    EXPECT_TRUE(row.contains("status"));
  }
  EXPECT_TRUE(j["pass"].get<bool>());
}

TEST(Reports, NonFiniteNumbersStayValidJson) {
  ResultRow row;
  row.residual = std::numeric_limits<double>::infinity();
  row.left = std::numeric_limits<double>::quiet_NaN();
  const Json j = to_json(row);
  EXPECT_EQ(j["residual"], "inf");
  EXPECT_EQ(j["left"], "nan");
  EXPECT_NO_THROW(Json::parse(j.dump()));
}

TEST(Reports, CsvEscapesAndRoundTripsNumbers) {
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"x\""), "\"say \"\"x\"\"\"");
  EXPECT_EQ(format_double(0.6), "0.6");
  const double v = 0.1 + 0.2;
  EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(Reports, RunDirectoriesAreAppendOnly) {
  const auto root = std::filesystem::temp_directory_path() / "maglab-test-append";
  std::filesystem::remove_all(root);
  ExperimentConfig c = default_config("flat-torus");
  c.batteries = {"structural"};
  c.output_dir = root.string();
  const auto r = run_verify(c);
  write_reports("verify", c, r);
  write_reports("verify", c, r);
  EXPECT_TRUE(std::filesystem::exists(root / "verify" / "run-001" / "report.json"));
  EXPECT_TRUE(std::filesystem::exists(root / "verify" / "run-002" / "manifest.json"));
  std::ifstream m(root / "verify" / "run-001" / "manifest.json");
  const Json man = Json::parse(m);
  EXPECT_EQ(man["config_hash"], hex64(fnv1a(to_json(c).dump())));
  EXPECT_EQ(man["seed"], c.seed);
  std::filesystem::remove_all(root);
}

TEST(Reports, FnvKnownValues) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
}
