#pragma once

// JSON encodings of forms, structures, decompositions and reports, and the
// field file format: a JSON header plus little-endian float64 data, either
// inline (base64) or in a sidecar file next to the header.

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "holokit/identities.hpp"

namespace holokit {

// {dim, degree, complexified, coeffs}; coeffs are interleaved (re, im) for
// complexified forms, in lexicographic multi-index order.
nlohmann::json to_json(const FormValue& x);
FormValue form_from_json(const nlohmann::json& j);

// {group, n, forms: [...]}
nlohmann::json to_json(const GStructureValue& chi);
GStructureValue structure_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MetricValue& g);
MetricValue metric_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FiberKind& fiber);
FiberKind fiber_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TorusDomain& domain);
TorusDomain domain_from_json(const nlohmann::json& j);

// {group, n, degree, components: [{dim, eigenvalue}]}
nlohmann::json decomposition_json(GroupTag tag, int parameter, int degree,
                                  const std::vector<IsotypicComponent>& components);

nlohmann::json to_json(const IdentityReport& r);

std::string base64_encode_doubles(std::span<const double> values);
std::vector<double> base64_decode_doubles(const std::string& text);

enum class FieldEncoding { Base64, Sidecar };

/// Writes `path` (JSON header). With Sidecar the data goes to `path` + ".bin"
/// and the header records its file name.
void write_field(const BundleField& field, const std::filesystem::path& path,
                 FieldEncoding encoding = FieldEncoding::Base64);
/// Throws FormatError on any malformed input.
BundleField read_field(const std::filesystem::path& path);

nlohmann::json field_header(const BundleField& field);
BundleField field_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

}  // namespace holokit
