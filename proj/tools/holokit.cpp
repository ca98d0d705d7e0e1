// holokit command-line tool: runs verification suites and converts files.
//
// Exit codes: 0 pass, 1 usage / I/O / malformed input, 2 a check failed,
// 3 the input is outside the model orbit (or otherwise outside the domain).

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "holokit/errors.hpp"
#include "holokit/identities.hpp"
#include "holokit/serialization.hpp"
#include "holokit/suites.hpp"

namespace {

enum Exit { kPass = 0, kUsage = 1, kFailed = 2, kDomain = 3 };

struct GenerateOptions {
  std::string kind = "model";  // model | closed | perturbed
  double epsilon = 1e-2;
  bool sidecar = false;
};

std::map<std::string, double> parse_tolerances(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw holokit::FormatError("--tol expects name=value, got '" + item + "'");
    try {
      std::size_t used = 0;
      const double v = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument("trailing characters");
      out[item.substr(0, eq)] = v;
    } catch (const std::exception&) {
      throw holokit::FormatError("--tol: cannot parse the value in '" + item + "'");
    }
  }
  return out;
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream file(out);
  if (!file) throw holokit::FormatError("cannot write '" + out + "'");
  file << text;
  if (!file) throw holokit::FormatError("error writing '" + out + "'");
}

int run_generate(const holokit::SuiteConfig& c, const GenerateOptions& g, const std::string& out) {
  using namespace holokit;
  if (out.empty()) throw FormatError("generate needs --out");
  if (c.group.empty()) throw FormatError("generate needs --group");
  const GroupTag tag = parse_group_tag(c.group);
  const int parameter =
      (tag == GroupTag::SU || tag == GroupTag::Sp) ? (c.group_parameter > 0 ? c.group_parameter : (tag == GroupTag::SU ? 3 : 2)) : 0;
  TorusOptions o = c.torus();
  o.dimension = ambient_dimension(tag, parameter);
  o.active_axes.clear();
  for (int a = 0; a < std::min(c.active > 0 ? c.active : 2, std::min(o.dimension, 4)); ++a) o.active_axes.push_back(a);
  const TorusDomain domain = o.domain();

  BundleField field = constant_field(domain, FiberKind::structure(tag, parameter), model_form(tag, parameter).stacked(),
                                     c.band_limit);
  if (g.kind == "closed") {
    if (tag != GroupTag::G2) throw FormatError("closed perturbations are only generated for g2");
    field = perturbed_structure(tag, parameter, domain, c.band_limit, g.epsilon, true, c.seed);
  } else if (g.kind == "perturbed") {
    field = perturbed_structure(tag, parameter, domain, c.band_limit, g.epsilon, false, c.seed);
  } else if (g.kind != "model") {
    throw FormatError("--kind must be model, closed or perturbed");
  }
  write_field(field, out, g.sidecar ? FieldEncoding::Sidecar : FieldEncoding::Base64);
  std::cout << "wrote " << out << " (" << field.fiber().name() << ", " << domain.node_count() << " nodes)\n";
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"holokit: special-holonomy structures and spectral identity checks on flat tori"};
  app.require_subcommand(1);
  app.fallthrough();

  holokit::SuiteConfig config;
  std::string out;
  int threads = 0;
  std::vector<std::string> tolerance_items;
  GenerateOptions gen;

  app.add_option("--seed", config.seed, "PRNG seed")->capture_default_str();
  app.add_option("--out", out, "Output file (default: stdout)");
  app.add_option("--format", config.format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  app.add_option("--threads", threads, "Worker threads (default: $HOLOKIT_THREADS or 1)")->check(CLI::PositiveNumber);

  auto add_group = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--group", config.group, "spin7, g2, su or sp");
    if (required) opt->required();
    sub->add_option("--n", config.group_parameter, "n for su(n) / sp(n)");
  };
  auto add_torus = [&](CLI::App* sub) {
    sub->add_option("--dim", config.dimension, "Torus dimension")->capture_default_str();
    sub->add_option("--active", config.active, "Number of active axes (1-4)");
    sub->add_option("--res", config.resolution, "Grid points per active axis")->capture_default_str();
    sub->add_option("--band", config.band_limit, "Band limit of random fields")->capture_default_str();
  };
  auto add_tol = [&](CLI::App* sub) {
    sub->add_option("--tol", tolerance_items, "Tolerance override name=value (repeatable)");
  };

  auto* stabilizer = app.add_subcommand("stabilizer", "Stabilizer algebra and orbit tangent space of a model structure");
  add_group(stabilizer, true);
  add_tol(stabilizer);

  auto* decompose = app.add_subcommand("decompose", "Isotypic decomposition of forms under the model stabilizer");
  add_group(decompose, true);
  decompose->add_option("--degree", config.degree, "Form degree")->required();
  add_tol(decompose);

  auto* verify = app.add_subcommand("verify", "Run identity suites on flat tori");
  verify->add_option("--suite", config.suite, "Suite name or 'all'")->capture_default_str();
  add_group(verify, false);
  add_torus(verify);
  verify->add_option("--degree", config.degree, "Form degree (isotypic-commute)");
  add_tol(verify);

  auto* torsion = app.add_subcommand("torsion", "Torsion residuals of a structure field file");
  torsion->add_option("input", config.input, "Field file")->required();
  add_tol(torsion);

  auto* metric = app.add_subcommand("metric", "Induced metric of a structure JSON file");
  metric->add_option("input", config.input, "Structure file")->required();
  add_tol(metric);

  auto* generate = app.add_subcommand("generate", "Write a structure field file");
  add_group(generate, true);
  add_torus(generate);
  generate->add_option("--kind", gen.kind, "model, closed or perturbed")->capture_default_str();
  generate->add_option("--epsilon", gen.epsilon, "Perturbation size")->capture_default_str();
  generate->add_flag("--sidecar", gen.sidecar, "Store data in a .bin file next to the header");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  if (threads == 0) {
    if (const char* env = std::getenv("HOLOKIT_THREADS")) {
      try {
        threads = std::max(1, std::stoi(env));
      } catch (const std::exception&) {
        std::cerr << "error: HOLOKIT_THREADS must be an integer\n";
        return kUsage;
      }
    }
  }
  holokit::set_thread_count(threads > 0 ? threads : 1);

  try {
    config.tolerances = parse_tolerances(tolerance_items);
    CLI::App* sub = app.get_subcommands().front();
    config.command = sub->get_name();
    if (config.command == "generate") {
      config.validate();
      return run_generate(config, gen, out);
    }

    const holokit::SuiteReport report = holokit::run_suite(config);
    emit(config.format == "csv" ? report.to_csv() : report.to_json().dump(2) + "\n", out);
    if (!out.empty()) {
      std::cout << config.command << ": " << (report.pass ? "pass" : "FAIL") << " (" << report.reports.size()
                << " checks, " << report.duration_seconds << " s) -> " << out << "\n";
    }
    if (!report.pass) {
      for (const auto& r : report.reports)
        if (!r.pass) std::cerr << "failed: " << r.name << " residual " << r.residual << " > " << r.tolerance << "\n";
      return kFailed;
    }
    return kPass;
  } catch (const holokit::OrbitError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kDomain;
  } catch (const holokit::TangentSpaceError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kDomain;
  } catch (const holokit::MetricError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
}
