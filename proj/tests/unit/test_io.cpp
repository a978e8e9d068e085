#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include <sprinter/io.hpp>
#include <sprinter/random.hpp>

using namespace sprinter;

namespace {

LinearModel sample_model() {
  LinearModel m;
  m.family = Family::poisson();
  m.x_center = {0.1, -2.5, 1.0 / 3.0};
  m.x_scale = {1.0, 0.7, 1e-3};
  m.main = {0.25, 0.0, -1.0 / 7.0};
  m.intercept = 0.1 + 0.2;
  m.interactions = {{0, 2, 0.5}, {1, 1, -3.0e-17}};
  return m;
}

}  // namespace

TEST(Io, FormatDoubleRoundTripsExactly) {
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const double v = rng.normal() * std::pow(10.0, double(int(rng.uniform_int(40)) - 20));
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(parse_double(format_double(std::numeric_limits<double>::denorm_min())),
            std::numeric_limits<double>::denorm_min());
  EXPECT_THROW(parse_double("1.5x"), InputError);
  EXPECT_THROW(parse_double(""), InputError);
}

TEST(Io, CsvWithNamedResponseColumn) {
  const CsvData d = parse_csv("a,y,b\n1,0,2.5\n-3,1,4e-1\n");
  EXPECT_EQ(d.header, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(d.x.rows(), 2u);
  EXPECT_EQ(d.x(1, 0), -3.0);
  EXPECT_EQ(d.x(1, 1), 0.4);
  EXPECT_EQ(d.y, (std::vector<double>{0, 1}));
}

TEST(Io, CsvFallsBackToTheLastColumn) {
  const CsvData d = parse_csv("u,v,w\r\n1,2,3\r\n4,5,6\r\n");
  EXPECT_EQ(d.header.size(), 2u);
  EXPECT_EQ(d.y, (std::vector<double>{3, 6}));
  const CsvData none = parse_csv("u,v\n1,2\n", false);
  EXPECT_TRUE(none.y.empty());
  EXPECT_EQ(none.x.cols(), 2u);
}

TEST(Io, CsvRejectionsNameTheLine) {
  auto message = [](const std::string& text) {
    try {
      parse_csv(text);
    } catch (const InputError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message("a,y\n1,2\n3\n").find("line 3"), std::string::npos);
  EXPECT_NE(message("a,y\n1,2\nnan,1\n").find("line 3"), std::string::npos);
  EXPECT_NE(message("a,y\n1,\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("a,y\n1,inf\n").find("line 2"), std::string::npos);
  EXPECT_FALSE(message("").empty());
}

TEST(Io, CsvWriteThenRead) {
  Matrix x(3, 2);
  x(0, 0) = 0.1;
  x(1, 1) = -1e-300;
  x(2, 0) = 12345.678;
  const std::vector<double> y = {1, 0, 1};
  const CsvData back = parse_csv(format_csv(x, y));
  EXPECT_EQ(back.header, (std::vector<std::string>{"x1", "x2"}));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(back.x(i, j), x(i, j));
  EXPECT_EQ(back.y, y);
}

TEST(Io, ModelJsonRoundTripIsBitExact) {
  ModelFile f;
  f.model = sample_model();
  f.family = "poisson";
  f.lambda1 = 0.0123;
  f.lambda4 = 1.0 / 3.0;
  f.provenance.seed = 42;
  f.provenance.config_hash = fnv1a_hex("x");
  const std::string text = model_to_json(f);
  const ModelFile back = model_from_json(text);
  EXPECT_EQ(model_to_json(back), text);
  EXPECT_EQ(back.model.main, f.model.main);
  EXPECT_EQ(back.model.intercept, f.model.intercept);
  EXPECT_EQ(back.model.x_scale, f.model.x_scale);
  ASSERT_EQ(back.model.interactions.size(), 2u);
  EXPECT_EQ(back.model.interactions[1].coef, -3.0e-17);
  EXPECT_FALSE(back.provenance.created.has_value());
  const auto j = nlohmann::json::parse(text);
  EXPECT_EQ(j["format_version"], kModelFormatVersion);
  EXPECT_FALSE(j["provenance"].contains("created"));
}

TEST(Io, OrdinalModelKeepsCutpoints) {
  ModelFile f;
  f.model = sample_model();
  f.model.family = Family::binomial();
  f.model.cutpoints = {-1.25, 0.1, 2.0 / 3.0};
  f.family = "ordinal";
  f.provenance.created = "2024-01-02T03:04:05Z";
  const ModelFile back = model_from_json(model_to_json(f));
  EXPECT_EQ(back.model.cutpoints, f.model.cutpoints);
  EXPECT_EQ(back.family, "ordinal");
  EXPECT_EQ(back.provenance.created, f.provenance.created);
  Matrix x(2, 3);
  const auto lines = format_predictions(back, x);
  EXPECT_EQ(lines.substr(0, lines.find('\n')), "prob_1,prob_2,prob_3,prob_4");
}

TEST(Io, MalformedModelsAreInputErrors) {
  EXPECT_THROW(model_from_json("{"), InputError);
  EXPECT_THROW(model_from_json("[]"), InputError);
  ModelFile f;
  f.model = sample_model();
  f.family = "poisson";
  auto j = nlohmann::json::parse(model_to_json(f));
  j["format_version"] = 99;
  EXPECT_THROW(model_from_json(j.dump()), InputError);
  j = nlohmann::json::parse(model_to_json(f));
  j["family"] = "gamma";
  EXPECT_THROW(model_from_json(j.dump()), InputError);
  j = nlohmann::json::parse(model_to_json(f));
  j.erase("intercept");
  EXPECT_THROW(model_from_json(j.dump()), InputError);
}

TEST(Io, FnvDigestMatchesPublishedVectors) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(Io, FingerprintTracksSettings) {
  SprinterConfig a;
  SprinterConfig b = a;
  EXPECT_EQ(config_fingerprint(a, "binomial"), config_fingerprint(b, "binomial"));
  b.m = 7;
  EXPECT_NE(config_fingerprint(a, "binomial"), config_fingerprint(b, "binomial"));
  EXPECT_NE(config_fingerprint(a, "binomial"), config_fingerprint(a, "poisson"));
  b = a;
  b.workers = 5;
  EXPECT_EQ(config_fingerprint(a, "binomial"), config_fingerprint(b, "binomial"));
}

TEST(Io, TimestampShape) {
  const std::string t = utc_timestamp();
  ASSERT_EQ(t.size(), 20u);
  EXPECT_EQ(t[4], '-');
  EXPECT_EQ(t[10], 'T');
  EXPECT_EQ(t.back(), 'Z');
}

TEST(Io, FileErrors) {
  EXPECT_THROW(read_text("/nonexistent/dir/file.csv"), FileError);
  EXPECT_THROW(write_text("/nonexistent/dir/file.csv", "x"), FileError);
  const auto path = std::filesystem::temp_directory_path() / "sprinter_io_test.json";
  ModelFile f;
  f.model = sample_model();
  f.family = "poisson";
  save_model(path.string(), f);
  EXPECT_EQ(model_to_json(load_model(path.string())), model_to_json(f));
  std::filesystem::remove(path);
}

TEST(Io, ScreenCsvIsZeroBased) {
  ScreenResult r;
  r.selected = {{make_pair_index(0, 3, 5), -0.5}, {make_pair_index(2, 2, 5), 0.25}};
  EXPECT_EQ(format_screen_csv(r), "a,b,gamma_hat\n0,3,-0.5\n2,2,0.25\n");
}
