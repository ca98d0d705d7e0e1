// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "holokit/errors.hpp"
#include "holokit/identities.hpp"
#include "holokit/model_structures.hpp"

using namespace holokit;

namespace {

struct Group {
  GroupTag tag;
  int parameter;
};

const std::vector<Group> kGroups{{GroupTag::Spin7, 0}, {GroupTag::G2, 0}, {GroupTag::SU, 3}, {GroupTag::Sp, 2}};

std::string label(const Group& g) {
  return to_string(g.tag) + (g.parameter > 0 ? "(" + std::to_string(g.parameter) + ")" : "");
}

// Collects reports for one criterion and remembers the worst offender.
class Criterion {
 public:
  void add(const IdentityReport& r, const std::string& where = "") {
    if (r.pass) return;
    ok_ = false;
    if (detail_.empty()) {
      char buf[256];
      std::snprintf(buf, sizeof buf, "%s%s%s residual=%.3e tolerance=%.3e", r.name.c_str(), where.empty() ? "" : "@",
                    where.c_str(), r.residual, r.tolerance);
      detail_ = buf;
    }
  }
  void add(const std::vector<IdentityReport>& rs, const std::string& where = "") {
    for (const auto& r : rs) add(r, where);
  }
  void fail(const std::string& why) {
    ok_ = false;
    if (detail_.empty()) detail_ = why;
  }
  bool ok() const { return ok_; }
  const std::string& detail() const { return detail_; }

 private:
  bool ok_ = true;
  std::string detail_;
};

TorusOptions flat_torus(int resolution, int band_limit = 1) {
  TorusOptions o;
  o.dimension = 4;
  o.active_axes = {0, 1, 2, 3};
  o.resolution = resolution;
  o.band_limit = band_limit;
  o.seed = 20240601;
  return o;
}

TorusOptions structure_torus(const Group& g, int resolution) {
  TorusOptions o;
  o.dimension = ambient_dimension(g.tag, g.parameter);
  o.active_axes = {0, 1};
  o.resolution = resolution;
  o.band_limit = 1;
  o.seed = 20240601;
  return o;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

void ac1(Criterion& c) {
  for (const auto& g : kGroups) {
    const auto start = std::chrono::steady_clock::now();
    const auto reports = check_stabilizer(g.tag, g.parameter);
    const double elapsed = seconds_since(start);
    c.add(reports, label(g));
    if (elapsed >= 1.0) c.fail("stabilizer " + label(g) + " took " + std::to_string(elapsed) + " s");
  }
}

void ac2(Criterion& c) { c.add(check_isotypic_dimensions(GroupTag::Spin7, 0, 4, {1, 7, 27, 35})); }

void ac3(Criterion& c) { c.add(check_cayley_self_duality()); }

void ac4(Criterion& c) {
  for (const auto& [tag, expected] : {std::pair{GroupTag::Spin7, 43}, std::pair{GroupTag::G2, 35}}) {
    const int dim = tangent_space(model_form(tag)).dim();
    if (dim != expected) c.fail("dim E for " + to_string(tag) + " is " + std::to_string(dim));
  }
  for (const auto& g : kGroups) c.add(check_metric_derivative(g.tag, g.parameter, 4), label(g));
}

void ac5(Criterion& c) {
  for (const auto& g : kGroups) c.add(check_induced_metric_equivariance(g.tag, g.parameter, 5, 20, 0.2, 1e-8), label(g));
}

void ac6(Criterion& c) {
  for (int n : {2, 3}) c.add(check_volume_identity(n, 1e-12), "n=" + std::to_string(n));
}

void ac7(Criterion& c) {
  const TorusOptions o = flat_torus(16);
  c.add(check_bianchi_delta_star(o, MetricValue::euclidean(4), 20, 1e-8), "identity");
  auto rng = seeded_rng(o.seed, 50);
  c.add(check_bianchi_delta_star(o, MetricValue(random_spd(4, rng)), 20, 1e-8), "random-spd");
}

void ac8(Criterion& c) { c.add(check_contracted_bianchi(flat_torus(16), 10, 0.1, 1e-6)); }

void ac9(Criterion& c) { c.add(check_linearized_ricci(flat_torus(16), 1e-3, 0.2)); }

void ac10(Criterion& c) { c.add(check_diffeomorphism_ricci(flat_torus(16), 0.1, 1e-7)); }

void ac11(Criterion& c) {
  for (const Group g : {Group{GroupTag::G2, 0}, Group{GroupTag::Spin7, 0}}) {
    c.add(check_dm_commutation(g.tag, g.parameter, structure_torus(g, 32), 1e-8), label(g));
  }
  c.add(check_isotypic_commutation(GroupTag::G2, 0, 2, structure_torus({GroupTag::G2, 0}, 8), 1e-10), "g2");
  c.add(check_isotypic_commutation(GroupTag::Spin7, 0, 4, structure_torus({GroupTag::Spin7, 0}, 8), 1e-10),
        "spin7");
}

void ac12(Criterion& c) { c.add(check_kernels(4, 4, 1)); }

void ac13(Criterion& c) {
  for (const auto& g : kGroups) c.add(check_torsion_detection(g.tag, g.parameter, structure_torus(g, 8), 1e-2, 1e-5), label(g));
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Criterion&)>>> criteria{
      {"AC1 stabilizer dimensions", ac1},
      {"AC2 isotypic dimensions of 4-forms under spin7", ac2},
      {"AC3 Cayley form self-duality", ac3},
      {"AC4 tangent spaces and metric derivative", ac4},
      {"AC5 induced metric equivariance", ac5},
      {"AC6 special unitary volume identities", ac6},
      {"AC7 (2 delta + d tr) delta* = Laplacian", ac7},
      {"AC8 contracted Bianchi identity", ac8},
      {"AC9 linearized Ricci", ac9},
      {"AC10 Ricci of a pulled-back flat metric", ac10},
      {"AC11 metric derivative and isotypic commutation", ac11},
      {"AC12 harmonic and Killing kernels", ac12},
      {"AC13 torsion detection", ac13},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Criterion c;
    const auto start = std::chrono::steady_clock::now();
    try {
      run(c);
    } catch (const std::exception& e) {
      c.fail(std::string("exception: ") + e.what());
    }
    const double elapsed = seconds_since(start);
    if (c.ok()) {
      std::printf("[PASS] %s (%.2f s)\n", name.c_str(), elapsed);
    } else {
      ++failures;
      std::printf("[FAIL] %s (%.2f s): %s\n", name.c_str(), elapsed, c.detail().c_str());
    }
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
