#include "holokit/serialization.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>

#include "holokit/errors.hpp"

namespace holokit {

namespace {

constexpr const char* kFieldFormat = "holokit-field";
constexpr int kFieldVersion = 1;

template <class T>
T get(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::vector<char> to_little_endian(std::span<const double> values) {
  std::vector<char> bytes(values.size() * sizeof(double));
  std::memcpy(bytes.data(), values.data(), bytes.size());
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < bytes.size(); i += sizeof(double))
      std::reverse(bytes.begin() + std::ptrdiff_t(i), bytes.begin() + std::ptrdiff_t(i + sizeof(double)));
  }
  return bytes;
}

std::vector<double> from_little_endian(std::vector<char> bytes) {
  if (bytes.size() % sizeof(double) != 0) throw FormatError("data length is not a multiple of 8 bytes");
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < bytes.size(); i += sizeof(double))
      std::reverse(bytes.begin() + std::ptrdiff_t(i), bytes.begin() + std::ptrdiff_t(i + sizeof(double)));
  }
  std::vector<double> out(bytes.size() / sizeof(double));
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

}  // namespace

nlohmann::json to_json(const FormValue& x) {
  return {{"dim", x.dimension()},
          {"degree", x.degree()},
          {"complexified", x.complexified()},
          {"coeffs", std::vector<double>(x.coefficients().data(),
                                         x.coefficients().data() + x.coefficients().size())}};
}

FormValue form_from_json(const nlohmann::json& j) {
  const int dim = get<int>(j, "dim");
  const int degree = get<int>(j, "degree");
  const bool complexified = j.contains("complexified") ? get<bool>(j, "complexified") : false;
  const auto coeffs = get<std::vector<double>>(j, "coeffs");
  try {
    return FormValue(dim, degree, Eigen::Map<const Vector>(coeffs.data(), Eigen::Index(coeffs.size())),
                     complexified);
  } catch (const ShapeError& e) {
    throw FormatError(std::string("invalid form: ") + e.what());
  }
}

nlohmann::json to_json(const GStructureValue& chi) {
  nlohmann::json forms = nlohmann::json::array();
  for (const auto& f : chi.forms()) forms.push_back(to_json(f));
  return {{"group", to_string(chi.tag())}, {"n", chi.parameter()}, {"forms", forms}};
}

GStructureValue structure_from_json(const nlohmann::json& j) {
  GroupTag tag;
  try {
    tag = parse_group_tag(get<std::string>(j, "group"));
  } catch (const ShapeError& e) {
    throw FormatError(e.what());
  }
  const int n = j.contains("n") ? get<int>(j, "n") : 0;
  if (!j.contains("forms")) throw FormatError("missing key 'forms'");
  const auto& list = j.at("forms");
  if (!list.is_array()) throw FormatError("'forms' must be an array");
  std::vector<FormValue> forms;
  for (const auto& f : list) forms.push_back(form_from_json(f));
  try {
    return GStructureValue(tag, n, std::move(forms));
  } catch (const ShapeError& e) {
    throw FormatError(std::string("invalid structure: ") + e.what());
  }
}

nlohmann::json to_json(const MetricValue& g) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < g.dimension(); ++i) {
    std::vector<double> row(std::size_t(g.dimension()));
    for (int k = 0; k < g.dimension(); ++k) row[std::size_t(k)] = g.entries()(i, k);
    rows.push_back(row);
  }
  return rows;
}

MetricValue metric_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw FormatError("metric must be a non-empty array of rows");
  const int n = int(j.size());
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    if (!j[std::size_t(i)].is_array() || int(j[std::size_t(i)].size()) != n) {
      throw FormatError("metric must be square");
    }
    for (int k = 0; k < n; ++k) {
      const auto& v = j[std::size_t(i)][std::size_t(k)];
      if (!v.is_number()) throw FormatError("metric entries must be numbers");
      m(i, k) = v.get<double>();
    }
  }
  try {
    return MetricValue(m);
  } catch (const ShapeError& e) {
    throw FormatError(std::string("invalid metric: ") + e.what());
  }
}

nlohmann::json to_json(const FiberKind& fiber) {
  nlohmann::json j{{"kind", fiber.name()}};
  if (fiber.kind == FiberKind::Kind::Form) j["degree"] = fiber.degree;
  if (fiber.kind == FiberKind::Kind::Structure) {
    j["group"] = to_string(fiber.group);
    if (fiber.group == GroupTag::SU || fiber.group == GroupTag::Sp) j["n"] = fiber.group_parameter;
  }
  return j;
}

FiberKind fiber_from_json(const nlohmann::json& j) {
  const auto kind = get<std::string>(j, "kind");
  if (kind == "scalar") return FiberKind::scalar();
  if (kind == "one_form") return FiberKind::one_form();
  if (kind == "form") return FiberKind::form(get<int>(j, "degree"));
  if (kind == "sym2") return FiberKind::sym2();
  if (kind == "metric") return FiberKind::metric();
  if (kind == "structure") {
    try {
      const GroupTag tag = parse_group_tag(get<std::string>(j, "group"));
      return FiberKind::structure(tag, j.contains("n") ? get<int>(j, "n") : 0);
    } catch (const ShapeError& e) {
      throw FormatError(e.what());
    }
  }
  throw FormatError("unknown fiber kind '" + kind + "'");
}

nlohmann::json to_json(const TorusDomain& domain) {
  // Axes are numbered from 1 in files.
  std::vector<int> axes;
  for (int a : domain.active_axes()) axes.push_back(a + 1);
  return {{"n", domain.dimension()},
          {"active_axes", axes},
          {"resolution", domain.resolution()},
          {"metric", to_json(domain.metric())}};
}

TorusDomain domain_from_json(const nlohmann::json& j) {
  const int n = get<int>(j, "n");
  std::vector<int> axes = get<std::vector<int>>(j, "active_axes");
  for (int& a : axes) --a;
  const int resolution = get<int>(j, "resolution");
  try {
    if (j.contains("metric")) return TorusDomain(n, axes, resolution, metric_from_json(j.at("metric")));
    return TorusDomain(n, axes, resolution);
  } catch (const ShapeError& e) {
    throw FormatError(std::string("invalid domain: ") + e.what());
  }
}

nlohmann::json decomposition_json(GroupTag tag, int parameter, int degree,
                                  const std::vector<IsotypicComponent>& components) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& c : components) list.push_back({{"dim", c.dim}, {"eigenvalue", c.casimir_eigenvalue}});
  return {{"group", to_string(tag)}, {"n", parameter}, {"degree", degree}, {"components", list}};
}

nlohmann::json to_json(const IdentityReport& r) {
  return {{"name", r.name},
          {"residual", r.residual},
          {"tolerance", r.tolerance},
          {"pass", r.pass},
          {"metadata", r.metadata}};
}

std::string base64_encode_doubles(std::span<const double> values) {
  using namespace boost::archive::iterators;
  using Encoder = base64_from_binary<transform_width<const char*, 6, 8>>;
  const std::vector<char> bytes = to_little_endian(values);
  std::string out(Encoder(bytes.data()), Encoder(bytes.data() + bytes.size()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

std::vector<double> base64_decode_doubles(const std::string& text) {
  using namespace boost::archive::iterators;
  using Decoder = transform_width<binary_from_base64<std::string::const_iterator>, 8, 6>;
  std::string clean;
  clean.reserve(text.size());
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) clean.push_back(c);
  if (clean.size() % 4 != 0) throw FormatError("base64 data length is not a multiple of 4");
  std::size_t padding = 0;
  while (!clean.empty() && clean.back() == '=' && padding < 2) {
    clean.pop_back();
    ++padding;
  }
  if (clean.find('=') != std::string::npos) throw FormatError("misplaced base64 padding");
  clean.append(padding, 'A');
  std::vector<char> bytes;
  try {
    bytes.assign(Decoder(clean.begin()), Decoder(clean.end()));
  } catch (const std::exception& e) {
    throw FormatError(std::string("invalid base64 data: ") + e.what());
  }
  bytes.resize(bytes.size() - std::min(bytes.size(), padding));
  return from_little_endian(std::move(bytes));
}

nlohmann::json field_header(const BundleField& field) {
  return {{"format", kFieldFormat},
          {"version", kFieldVersion},
          {"domain", to_json(field.domain())},
          {"fiber", to_json(field.fiber())},
          {"band_limit", field.band_limit()}};
}

void write_field(const BundleField& field, const std::filesystem::path& path, FieldEncoding encoding) {
  nlohmann::json j = field_header(field);
  if (encoding == FieldEncoding::Base64) {
    j["encoding"] = "base64-f64le";
    j["data"] = base64_encode_doubles(field.values());
  } else {
    const std::filesystem::path sidecar = path.string() + ".bin";
    j["encoding"] = "sidecar-f64le";
    j["data"] = sidecar.filename().string();
    const std::vector<char> bytes = to_little_endian(field.values());
    std::ofstream bin(sidecar, std::ios::binary);
    if (!bin) throw FormatError("cannot open '" + sidecar.string() + "' for writing");
    bin.write(bytes.data(), std::streamsize(bytes.size()));
    if (!bin) throw FormatError("failed writing '" + sidecar.string() + "'");
  }
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw FormatError("failed writing '" + path.string() + "'");
}

BundleField field_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw FormatError("field file must contain a JSON object");
  if (j.contains("format") && j.at("format") != kFieldFormat) throw FormatError("not a holokit field file");
  const TorusDomain domain = domain_from_json(j.contains("domain") ? j.at("domain") : nlohmann::json());
  const FiberKind fiber = fiber_from_json(j.contains("fiber") ? j.at("fiber") : nlohmann::json());
  const int band_limit = get<int>(j, "band_limit");
  const auto encoding = get<std::string>(j, "encoding");
  std::vector<double> values;
  if (encoding == "base64-f64le") {
    values = base64_decode_doubles(get<std::string>(j, "data"));
  } else if (encoding == "sidecar-f64le") {
    const std::filesystem::path sidecar = base_dir / get<std::string>(j, "data");
    std::ifstream bin(sidecar, std::ios::binary);
    if (!bin) throw FormatError("cannot open sidecar '" + sidecar.string() + "'");
    std::vector<char> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
    values = from_little_endian(std::move(bytes));
  } else {
    throw FormatError("unknown encoding '" + encoding + "'");
  }
  for (double v : values)
    if (!std::isfinite(v)) throw FormatError("field data contains non-finite values");
  try {
    return BundleField(domain, fiber, band_limit, std::move(values));
  } catch (const ShapeError& e) {
    throw FormatError(std::string("inconsistent field: ") + e.what());
  }
}

BundleField read_field(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
  return field_from_json(j, path.parent_path());
}

}  // namespace holokit
