#include "holokit/suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "holokit/errors.hpp"
#include "holokit/pointwise_maps.hpp"
#include "holokit/serialization.hpp"
#include "holokit/version.hpp"

namespace holokit {

namespace {

struct GroupChoice {
  GroupTag tag;
  int parameter;
};

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{
      "pointwise",  "bianchi",    "contracted-bianchi", "linearized-ricci", "diffeo-ricci", "lie-derivative",
      "dm-commute", "isotypic-commute", "kernels",      "adjoint",          "torsion-detection"};
  return names;
}

int default_parameter(GroupTag tag) {
  if (tag == GroupTag::SU) return 3;
  if (tag == GroupTag::Sp) return 2;
  return 0;
}

GroupChoice configured_group(const SuiteConfig& c) {
  const GroupTag tag = parse_group_tag(c.group);
  const bool parametric = tag == GroupTag::SU || tag == GroupTag::Sp;
  return {tag, parametric ? (c.group_parameter > 0 ? c.group_parameter : default_parameter(tag)) : 0};
}

// The configured group, or `fallback` when none was given.
std::vector<GroupChoice> groups_or(const SuiteConfig& c, std::vector<GroupChoice> fallback) {
  if (c.group.empty()) return fallback;
  return {configured_group(c)};
}

const std::vector<GroupChoice>& all_groups() {
  static const std::vector<GroupChoice> groups{
      {GroupTag::Spin7, 0}, {GroupTag::G2, 0}, {GroupTag::SU, 3}, {GroupTag::Sp, 2}};
  return groups;
}

// Torus for structure-valued suites: ambient dimension from the group, and
// two active axes unless configured otherwise.
TorusOptions structure_torus(const SuiteConfig& c, GroupChoice g) {
  TorusOptions o = c.torus();
  o.dimension = ambient_dimension(g.tag, g.parameter);
  const int active = std::min(c.active > 0 ? c.active : 2, std::min(o.dimension, 4));
  o.active_axes.clear();
  for (int a = 0; a < active; ++a) o.active_axes.push_back(a);
  return o;
}

// Isotypic dimensions of the exceptional model structures that are known
// independently of the Casimir computation.
std::vector<int> known_isotypic_dimensions(GroupTag tag, int degree) {
  if (tag == GroupTag::G2) {
    switch (std::min(degree, 7 - degree)) {
      case 0: return {1};
      case 1: return {7};
      case 2: return {7, 14};
      case 3: return {1, 7, 27};
    }
  }
  if (tag == GroupTag::Spin7) {
    switch (std::min(degree, 8 - degree)) {
      case 0: return {1};
      case 1: return {8};
      case 2: return {7, 21};
      case 3: return {8, 48};
      case 4: return {1, 7, 27, 35};
    }
  }
  return {};
}

long choose(int n, int k) {
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

void append(std::vector<IdentityReport>& out, std::vector<IdentityReport> more) {
  for (auto& r : more) out.push_back(std::move(r));
}

void apply_overrides(const SuiteConfig& c, std::vector<IdentityReport>& reports) {
  for (auto& r : reports) {
    auto it = c.tolerances.find(r.name);
    if (it == c.tolerances.end()) continue;
    r.tolerance = it->second;
    r.pass = std::isfinite(r.residual) && r.residual <= r.tolerance;
  }
}

SuiteReport finish(const SuiteConfig& c, std::vector<IdentityReport> reports, nlohmann::json results,
                   std::chrono::steady_clock::time_point start) {
  apply_overrides(c, reports);
  SuiteReport out;
  out.config = c;
  out.reports = std::move(reports);
  out.results = std::move(results);
  out.pass = std::all_of(out.reports.begin(), out.reports.end(), [](const IdentityReport& r) { return r.pass; });
  out.duration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.version = kVersion;
  return out;
}

std::vector<std::string> failing(const std::vector<IdentityReport>& reports) {
  std::vector<std::string> names;
  for (const auto& r : reports)
    if (!r.pass) names.push_back(r.name);
  return names;
}

std::vector<IdentityReport> run_named(const SuiteConfig& c, const std::string& suite) {
  const TorusOptions torus = c.torus();
  std::vector<IdentityReport> out;
  if (suite == "pointwise") {
    append(out, check_cayley_self_duality());
    for (const auto& g : groups_or(c, all_groups()))
      out.push_back(check_induced_metric_equivariance(g.tag, g.parameter, c.seed));
    out.push_back(check_volume_identity(2));
    out.push_back(check_volume_identity(3));
  } else if (suite == "bianchi") {
    auto rng = seeded_rng(c.seed, 50);
    append(out, check_bianchi_delta_star(torus, MetricValue::euclidean(torus.dimension)));
    append(out, check_bianchi_delta_star(torus, MetricValue(random_spd(torus.dimension, rng))));
  } else if (suite == "contracted-bianchi") {
    append(out, check_contracted_bianchi(torus));
  } else if (suite == "linearized-ricci") {
    append(out, check_linearized_ricci(torus));
  } else if (suite == "diffeo-ricci") {
    out.push_back(check_diffeomorphism_ricci(torus));
  } else if (suite == "lie-derivative") {
    out.push_back(check_lie_derivative(torus));
  } else if (suite == "dm-commute") {
    for (const auto& g : groups_or(c, {{GroupTag::G2, 0}, {GroupTag::Spin7, 0}}))
      out.push_back(check_dm_commutation(g.tag, g.parameter, structure_torus(c, g)));
  } else if (suite == "isotypic-commute") {
    for (const auto& g : groups_or(c, {{GroupTag::G2, 0}, {GroupTag::Spin7, 0}})) {
      const int degree = c.degree > 0 ? c.degree : (g.tag == GroupTag::Spin7 ? 4 : 2);
      append(out, check_isotypic_commutation(g.tag, g.parameter, degree, structure_torus(c, g)));
    }
  } else if (suite == "kernels") {
    append(out, check_kernels(torus.dimension, 4, 1));
  } else if (suite == "adjoint") {
    append(out, check_adjointness(torus));
  } else if (suite == "torsion-detection") {
    const auto groups = groups_or(c, all_groups());
    for (const auto& g : groups) append(out, check_torsion_detection(g.tag, g.parameter, structure_torus(c, g)));
    if (std::any_of(groups.begin(), groups.end(), [](const GroupChoice& g) { return g.tag == GroupTag::G2; }))
      append(out, check_closed_g2_perturbation(structure_torus(c, {GroupTag::G2, 0})));
  } else {
    throw FormatError("unknown suite '" + suite + "'");
  }
  return out;
}

}  // namespace

// --- SuiteConfig -------------------------------------------------------------------

void SuiteConfig::validate() const {
  for (const auto& [name, value] : tolerances) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw FormatError("tolerance for '" + name + "' must be positive");
    }
  }
  if (resolution < 4 || (resolution & (resolution - 1)) != 0) {
    throw FormatError("resolution must be a power of two >= 4, got " + std::to_string(resolution));
  }
  if (band_limit < 1) throw FormatError("band limit must be positive");
  if (dimension < 1) throw FormatError("dimension must be positive");
  if (active < 0 || active > 4) throw FormatError("at most four active axes are supported");
  if (format != "json" && format != "csv") throw FormatError("format must be json or csv, got '" + format + "'");
  if (!group.empty()) {
    try {
      parse_group_tag(group);
    } catch (const Error& e) {
      throw FormatError(e.what());
    }
  }
  if (command == "verify" && suite != "all") {
    const auto& names = suite_names();
    if (std::find(names.begin(), names.end(), suite) == names.end()) {
      throw FormatError("unknown suite '" + suite + "'");
    }
  }
}

TorusOptions SuiteConfig::torus() const {
  TorusOptions o;
  o.dimension = dimension;
  const int count = active > 0 ? std::min(active, dimension) : std::min(dimension, 4);
  for (int a = 0; a < count; ++a) o.active_axes.push_back(a);
  o.resolution = resolution;
  o.band_limit = band_limit;
  o.seed = seed;
  return o;
}

nlohmann::json SuiteConfig::to_json() const {
  nlohmann::json tol = nlohmann::json::object();
  for (const auto& [name, value] : tolerances) tol[name] = value;
  nlohmann::json j{{"command", command},
                   {"dimension", dimension},
                   {"active", active},
                   {"resolution", resolution},
                   {"band_limit", band_limit},
                   {"tolerances", tol},
                   {"seed", seed},
                   {"format", format}};
  if (command == "verify") j["suite"] = suite;
  if (!group.empty()) j["group"] = group;
  if (group_parameter > 0) j["n"] = group_parameter;
  if (degree > 0) j["degree"] = degree;
  if (!input.empty()) j["input"] = input.string();
  return j;
}

// --- SuiteReport -------------------------------------------------------------------

nlohmann::json SuiteReport::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& r : reports) list.push_back(holokit::to_json(r));
  return {{"config", config.to_json()},
          {"reports", list},
          {"results", results},
          {"pass", pass},
          {"failing", failing(reports)},
          {"seed", config.seed},
          {"duration_seconds", duration_seconds},
          {"version", version}};
}

std::string SuiteReport::to_csv() const {
  auto text = [](const nlohmann::json& meta, const char* key) -> std::string {
    if (!meta.contains(key)) return "";
    return meta[key].is_string() ? meta[key].get<std::string>() : meta[key].dump();
  };
  std::ostringstream out;
  out.precision(17);
  out << "name,group,n,residual,tolerance,pass,seed\n";
  for (const auto& r : reports) {
    out << r.name << ',' << text(r.metadata, "group") << ',' << text(r.metadata, "n") << ',' << r.residual << ','
        << r.tolerance << ',' << (r.pass ? "true" : "false") << ',' << config.seed << '\n';
  }
  return out.str();
}

std::vector<std::string> verify_suite_names() { return suite_names(); }

// --- commands ------------------------------------------------------------------------

SuiteReport run_suite(const SuiteConfig& config) {
  config.validate();
  if (config.command == "stabilizer") return run_stabilizer(config);
  if (config.command == "decompose") return run_decompose(config);
  if (config.command == "verify") return run_verify(config);
  if (config.command == "torsion") return run_torsion(config);
  if (config.command == "metric") return run_metric(config);
  throw FormatError("unknown command '" + config.command + "'");
}

SuiteReport run_stabilizer(const SuiteConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  if (config.group.empty()) throw FormatError("stabilizer needs --group");
  const GroupChoice g = configured_group(config);
  std::vector<IdentityReport> reports = check_stabilizer(g.tag, g.parameter);
  append(reports, check_metric_derivative(g.tag, g.parameter, config.seed));
  nlohmann::json results{{"group", to_string(g.tag)},
                         {"dim", reports[0].metadata["dim"]},
                         {"E_dim", reports[0].metadata["E_dim"]}};
  if (g.parameter > 0) results["n"] = g.parameter;
  return finish(config, std::move(reports), std::move(results), start);
}

SuiteReport run_decompose(const SuiteConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  if (config.group.empty()) throw FormatError("decompose needs --group");
  const GroupChoice g = configured_group(config);
  const int n = ambient_dimension(g.tag, g.parameter);
  if (config.degree < 0 || config.degree > n) {
    throw FormatError("degree must lie in [0, " + std::to_string(n) + "]");
  }
  const auto& parts = model_isotypic_decomposition(g.tag, g.parameter, config.degree);
  std::vector<int> dims;
  int total = 0;
  for (const auto& c : parts) {
    dims.push_back(c.dim);
    total += c.dim;
  }
  std::sort(dims.begin(), dims.end());

  nlohmann::json meta{{"group", to_string(g.tag)}, {"degree", config.degree}, {"total", total}};
  std::vector<IdentityReport> reports{
      make_report("isotypic_total_dimension", std::abs(double(total - choose(n, config.degree))), 0.0, meta)};
  const std::vector<int> known = known_isotypic_dimensions(g.tag, config.degree);
  if (!known.empty()) {
    append(reports, check_isotypic_dimensions(g.tag, g.parameter, config.degree, known));
  }
  nlohmann::json results = decomposition_json(g.tag, g.parameter, config.degree, parts);
  results["dims"] = dims;
  return finish(config, std::move(reports), std::move(results), start);
}

SuiteReport run_verify(const SuiteConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<IdentityReport> reports;
  nlohmann::json ran = nlohmann::json::array();
  if (config.suite == "all") {
    for (const auto& name : suite_names()) {
      append(reports, run_named(config, name));
      ran.push_back(name);
    }
  } else {
    reports = run_named(config, config.suite);
    ran.push_back(config.suite);
  }
  return finish(config, std::move(reports), {{"suites", ran}}, start);
}

SuiteReport run_torsion(const SuiteConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  if (config.input.empty()) throw FormatError("torsion needs an input field file");
  const BundleField field = read_field(config.input);
  if (field.fiber().kind != FiberKind::Kind::Structure) {
    throw FormatError("torsion expects a structure field, got fiber '" + field.fiber().name() + "'");
  }
  const double tolerance = 1e-8;
  const TorsionReport torsion = torsion_residuals(field);
  std::vector<IdentityReport> reports;
  nlohmann::json residuals = nlohmann::json::object();
  for (const auto& r : torsion.residuals) {
    nlohmann::json meta{{"group", to_string(torsion.group)}, {"condition", r.condition}};
    if (field.fiber().group_parameter > 0) meta["n"] = field.fiber().group_parameter;
    reports.push_back(make_report("torsion_" + r.condition, r.residual, tolerance, meta));
    residuals[r.condition] = r.residual;
  }
  apply_overrides(config, reports);
  const bool clean = std::all_of(reports.begin(), reports.end(), [](const IdentityReport& r) { return r.pass; });
  nlohmann::json results{{"group", to_string(torsion.group)},
                         {"residuals", residuals},
                         {"verdict", clean ? "torsion-free" : "has-torsion"}};
  return finish(config, std::move(reports), std::move(results), start);
}

SuiteReport run_metric(const SuiteConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  if (config.input.empty()) throw FormatError("metric needs an input structure file");
  nlohmann::json j;
  try {
    std::ifstream in(config.input);
    if (!in) throw FormatError("cannot open '" + config.input.string() + "'");
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed structure file: ") + e.what());
  }
  const GStructureValue chi = structure_from_json(j);
  const OrbitSolveResult solve = solve_orbit(chi);
  const MetricValue g = induced_metric(chi);  // OrbitError when off the orbit
  const int n = chi.ambient_dimension();
  const int rank = metric_derivative_rank(chi);

  nlohmann::json meta{{"group", to_string(chi.tag())}};
  if (chi.parameter() > 0) meta["n"] = chi.parameter();
  nlohmann::json rmeta = meta;
  rmeta["rank"] = rank;
  std::vector<IdentityReport> reports{make_report("orbit_residual", solve.residual, kOrbitTolerance, meta),
                                      make_report("dm_rank", std::abs(rank - n * (n + 1) / 2), 0.0, rmeta)};
  nlohmann::json results = meta;
  results["metric"] = holokit::to_json(g);
  results["iterations"] = solve.iterations;
  results["dm_rank"] = rank;
  return finish(config, std::move(reports), std::move(results), start);
}

}  // namespace holokit
