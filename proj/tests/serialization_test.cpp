#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

#include <gtest/gtest.h>

#include "holokit/errors.hpp"
#include "holokit/serialization.hpp"
#include "support.hpp"

using namespace holokit;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("holokit_test_" + std::to_string(::getpid()) + "_" +
                                                   std::to_string(counter_++))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST(Json, FormsAndStructuresRoundTrip) {
  for (const auto& [tag, p] : std::vector<std::pair<GroupTag, int>>{
           {GroupTag::Spin7, 0}, {GroupTag::G2, 0}, {GroupTag::SU, 3}, {GroupTag::Sp, 2}}) {
    const GStructureValue chi = model_form(tag, p);
    EXPECT_EQ(structure_from_json(nlohmann::json::parse(to_json(chi).dump())), chi);
  }
  const FormValue omega = model_form(GroupTag::SU, 2).form(0);
  const nlohmann::json j = to_json(omega);
  EXPECT_TRUE(j.at("complexified").get<bool>());
  EXPECT_EQ(j.at("coeffs").size(), 12u);  // 6 complex coefficients, interleaved
  EXPECT_EQ(form_from_json(j), omega);
}

TEST(Json, MalformedFormsAreFormatErrors) {
  EXPECT_THROW(form_from_json(nlohmann::json::parse(R"({"dim": 4, "degree": 2, "coeffs": [1, 2]})")), FormatError);
  EXPECT_THROW(form_from_json(nlohmann::json::parse(R"({"dim": 12, "degree": 1, "coeffs": []})")), FormatError);
  EXPECT_THROW(structure_from_json(nlohmann::json::parse(R"({"group": "e8", "forms": []})")), FormatError);
  EXPECT_THROW(metric_from_json(nlohmann::json::parse(R"([[1, 0], [0]])")), FormatError);
}

TEST(Json, DomainAxesAreOneBased) {
  const TorusDomain d(7, {0, 3}, 8);
  const nlohmann::json j = to_json(d);
  EXPECT_EQ(j.at("active_axes"), nlohmann::json::parse("[1, 4]"));
  EXPECT_EQ(domain_from_json(j), d);
}

TEST(Json, DecompositionSchema) {
  const nlohmann::json j = decomposition_json(GroupTag::G2, 0, 2, model_isotypic_decomposition(GroupTag::G2, 0, 2));
  EXPECT_EQ(j.at("group"), "g2");
  EXPECT_EQ(j.at("degree"), 2);
  ASSERT_EQ(j.at("components").size(), 2u);
  EXPECT_TRUE(j.at("components")[0].contains("eigenvalue"));
}

TEST(Base64, KnownEncodingAndRoundTrip) {
  const double one = 1.0;
  EXPECT_EQ(base64_encode_doubles(std::span<const double>(&one, 1)), "AAAAAAAA8D8=");
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  for (std::size_t n : {0u, 1u, 2u, 3u, 17u}) {
    std::vector<double> v(n);
    for (auto& x : v) x = normal(rng);
    EXPECT_EQ(base64_decode_doubles(base64_encode_doubles(v)), v);
  }
}

TEST(Base64, RejectsGarbage) {
  EXPECT_THROW(base64_decode_doubles("AAA"), FormatError);
  EXPECT_THROW(base64_decode_doubles("AA=AAAAA"), FormatError);
  EXPECT_THROW(base64_decode_doubles("AAAA"), FormatError);  // 3 bytes: not whole doubles
  EXPECT_THROW(base64_decode_doubles("AA!AAAAAAAA="), FormatError);
}

TEST(FieldFiles, RoundTripBothEncodings) {
  TempDir tmp;
  std::mt19937_64 rng(2);
  const TorusDomain d = TorusDomain(5, {1, 2}, 8).with_metric(MetricValue(2.0 * Matrix::Identity(5, 5)));
  const BundleField f = random_band_limited(d, FiberKind::form(2), 2, 1.0, rng);
  for (auto enc : {FieldEncoding::Base64, FieldEncoding::Sidecar}) {
    const fs::path p = tmp.path() / (enc == FieldEncoding::Base64 ? "a.json" : "b.json");
    write_field(f, p, enc);
    const BundleField back = read_field(p);
    EXPECT_EQ(back.domain(), f.domain());
    EXPECT_EQ(back.fiber(), f.fiber());
    EXPECT_EQ(back.band_limit(), f.band_limit());
    EXPECT_EQ(std::vector<double>(back.values().begin(), back.values().end()),
              std::vector<double>(f.values().begin(), f.values().end()));
  }
  EXPECT_TRUE(fs::exists(tmp.path() / "b.json.bin"));
}

TEST(FieldFiles, MalformedInputs) {
  TempDir tmp;
  const fs::path p = tmp.path() / "f.json";
  EXPECT_THROW(read_field(tmp.path() / "missing.json"), FormatError);
  write_text(p, "{not json");
  EXPECT_THROW(read_field(p), FormatError);
  write_text(p, R"({"format": "other"})");
  EXPECT_THROW(read_field(p), FormatError);

  const BundleField f = constant_field(TorusDomain(3, {0}, 4), FiberKind::one_form(), Vector::Ones(3));
  nlohmann::json good = field_header(f);
  good["encoding"] = "base64-f64le";
  good["data"] = base64_encode_doubles(f.values());
  write_text(p, good.dump());
  EXPECT_NO_THROW(read_field(p));

  nlohmann::json short_data = good;
  short_data["data"] = base64_encode_doubles(std::vector<double>(5, 1.0));
  write_text(p, short_data.dump());
  EXPECT_THROW(read_field(p), FormatError);

  nlohmann::json bad_res = good;
  bad_res["domain"]["resolution"] = 6;
  write_text(p, bad_res.dump());
  EXPECT_THROW(read_field(p), FormatError);

  nlohmann::json bad_axis = good;
  bad_axis["domain"]["active_axes"] = {0};
  write_text(p, bad_axis.dump());
  EXPECT_THROW(read_field(p), FormatError);

  nlohmann::json no_sidecar = good;
  no_sidecar["encoding"] = "sidecar-f64le";
  no_sidecar["data"] = "nowhere.bin";
  write_text(p, no_sidecar.dump());
  EXPECT_THROW(read_field(p), FormatError);
}

TEST(FieldFiles, IndefiniteMetricDataIsAMetricError) {
  TempDir tmp;
  const TorusDomain d(2, {0}, 4);
  Vector bad(3);
  bad << 1.0, 2.0, 1.0;  // [[1, 2], [2, 1]] is indefinite
  std::vector<double> values;
  for (std::size_t k = 0; k < d.node_count(); ++k) values.insert(values.end(), bad.data(), bad.data() + 3);
  nlohmann::json j{{"format", "holokit-field"},
                   {"version", 1},
                   {"domain", to_json(d)},
                   {"fiber", to_json(FiberKind::metric())},
                   {"band_limit", 0},
                   {"encoding", "base64-f64le"},
                   {"data", base64_encode_doubles(values)}};
  write_text(tmp.path() / "g.json", j.dump());
  EXPECT_THROW(read_field(tmp.path() / "g.json"), MetricError);
}
