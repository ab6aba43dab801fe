#include "singflow/report.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace singflow {

using nlohmann::json;

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json RunConfig::to_json() const {
  json j;
  j["command"] = command;
  j["field"] = field;
  j["params"] = params;
  if (region) j["region"] = json::array({singflow::to_json(region->lo), singflow::to_json(region->hi)});
  j["h"] = h;
  j["eps"] = effective_eps();
  j["time_samples"] = time_samples;
  j["samples_per_edge"] = samples_per_edge;
  j["graph_tol"] = graph_tol;
  j["window"] = window;
  j["dt"] = dt;
  j["tol"] = tol;
  j["seed_count"] = seed_count;
  j["rng_seed"] = rng_seed;
  if (class_of) j["class_of"] = singflow::to_json(*class_of);
  if (point) j["point"] = singflow::to_json(*point);
  j["time"] = time;
  j["out_dt"] = out_dt;
  j["grid"] = grid;
  j["budget_boxes"] = budget_boxes;
  j["budget_edges"] = budget_edges;
  return j;
}

std::string config_hash(const json& j) {
  const std::string text = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::vector<std::string> unchecked_assumptions() {
  return {
      "every periodic orbit in the class is a hyperbolic saddle",
      "the class is not the suspension of an irrational rotation",
      "box-level classes over-approximate chain recurrence classes without rigorous enclosure",
      "finite-time exponents over the window represent the asymptotic rates",
  };
}

json report_header(const RunConfig& cfg) {
  json h;
  h["tool"] = "singflow";
  h["version"] = kToolVersion;
  h["config_hash"] = config_hash(cfg.to_json());
  h["config"] = cfg.to_json();
  h["banner"] = "numerical, non-rigorous";
  h["platform_note"] = "floating-point results are reproducible on the same platform and build only";
  h["assumptions_unchecked"] = unchecked_assumptions();
  return h;
}

json to_json(const Field& field) {
  json j;
  j["name"] = field.name();
  j["params"] = field.params();
  j["scale"] = field.scale();
  j["region"] = json::array({to_json(field.region().lo), to_json(field.region().hi)});
  return j;
}

json to_json(const SingularityRecord& rec) {
  json j;
  j["position"] = to_json(rec.position);
  j["classification"] = to_string(rec.classification);
  json ev = json::array();
  for (const auto& l : rec.eigenvalues) ev.push_back({{"re", l.real()}, {"im", l.imag()}});
  j["eigenvalues"] = ev;
  json vecs = json::array();
  for (const auto& v : rec.eigenvectors) vecs.push_back(to_json(v));
  j["eigenvectors"] = vecs;
  j["resolution_flag"] = rec.resolution_flag;
  j["non_diagonalizable"] = rec.non_diagonalizable;
  j["non_hyperbolic_candidate"] = rec.non_hyperbolic_candidate;
  j["wss_check"] = rec.wss_check ? json(*rec.wss_check ? "pass" : "fail") : json(nullptr);
  return j;
}

json to_json(const RateFit& fit) {
  return {{"C", fit.C},
          {"lambda", fit.lambda},
          {"pass", fit.pass},
          {"pass_fraction", fit.pass_fraction},
          {"n_failures", fit.n_failures},
          {"margin", fit.margin}};
}

json to_json(const SplittingCertificate& cert) {
  json j;
  j["flow_kind"] = to_string(cert.flow_kind);
  j["window"] = cert.window;
  j["dt"] = cert.dt;
  j["checkpoints"] = cert.checkpoints;
  j["verdict"] = to_string(cert.verdict);
  if (cert.fitted) {
    j["fitted"] = {{"C", cert.fitted->C}, {"lambda", cert.fitted->lambda}};
    j["margin"] = cert.fitted->margin;
    j["n_failures"] = cert.fitted->n_failures;
    j["pass_fraction"] = cert.fitted->pass_fraction;
  } else {
    j["fitted"] = nullptr;
    j["margin"] = nullptr;
    j["n_failures"] = 0;
  }
  j["n_samples"] = cert.samples.size();
  j["n_skipped"] = cert.n_skipped;
  j["assumptions_unchecked"] = unchecked_assumptions();
  return j;
}

json to_json(const HyperbolicReport& rep) {
  json j;
  j["checker"] = "hyperbolic";
  j["verdict"] = to_string(rep.verdict);
  j["stable_contraction"] = to_json(rep.contraction);
  j["unstable_expansion"] = to_json(rep.expansion);
  j["certificate"] = to_json(rep.certificate);
  return j;
}

json to_json(const SingularHyperbolicReport& rep) {
  json j;
  j["checker"] = "singular_hyperbolic";
  j["orientation"] = rep.orientation == Orientation::X ? "X" : "-X";
  j["verdict"] = to_string(rep.verdict);
  j["offending"] = rep.offending;
  json s = json::array();
  for (const auto& r : rep.singularities) s.push_back(to_json(r));
  j["singularities"] = s;
  j["ess_contraction"] = to_json(rep.ess_contraction);
  j["ess_exponent"] = rep.ess_exponent;
  j["area_expansion"] = to_json(rep.area_expansion);
  j["area_slope"] = rep.area_slope;
  j["certificate"] = to_json(rep.certificate);
  return j;
}

json to_json(const EquivalenceReport& rep) {
  json j;
  j["agree"] = rep.agree;
  j["tangent"] = to_json(rep.tangent);
  j["linear_poincare"] = to_json(rep.linear_poincare);
  return j;
}

json to_json(const BoxCover& cover) {
  json j;
  j["region"] = json::array({to_json(cover.region().lo), to_json(cover.region().hi)});
  j["h_requested"] = cover.requested_h();
  j["h"] = to_json(cover.h());
  j["counts"] = cover.counts();
  j["box_count"] = cover.box_count();
  j["snapped"] = cover.snapped();
  j["resolution_too_coarse"] = cover.too_coarse();
  return j;
}

json graph_summary(const BoxGraph& graph) {
  json j;
  j["box_count"] = graph.cover.box_count();
  j["edge_count"] = graph.edge_count();
  j["scc_count"] = graph.scc_count;
  std::size_t recurrent = 0;
  for (int s : graph.scc) recurrent += s >= 0;
  j["recurrent_box_count"] = recurrent;
  j["eps"] = graph.eps;
  j["time_samples"] = graph.time_samples;
  j["samples_per_edge"] = graph.samples_per_edge;
  j["sample_count"] = graph.sample_count;
  j["failed_samples"] = graph.failed_samples;
  j["low_confidence"] = graph.low_confidence;
  j["cover"] = to_json(graph.cover);
  return j;
}

void write_edges_csv(std::ostream& os, const BoxGraph& graph) {
  os << "src_box_index,dst_box_index\n";
  const std::size_t n = graph.cover.box_count();
  for (std::size_t a = 0; a < n; ++a)
    for (const auto* b = graph.graph.begin(a); b != graph.graph.end(a); ++b) {
      os << a << ',';
      if (*b == n)
        os << -1;
      else
        os << *b;
      os << '\n';
    }
}

namespace {

void box_row(std::ostream& os, const BoxCover& cover, std::size_t b) {
  const auto c = cover.cell(b);
  const Vec3 m = cover.center(b);
  os << b << ',' << c[0] << ',' << c[1] << ',' << c[2] << ',' << m.x() << ',' << m.y() << ',' << m.z();
}

}  // namespace

void write_scc_csv(std::ostream& os, const BoxGraph& graph) {
  os << "box_index,i,j,k,center_x,center_y,center_z,scc\n";
  os << std::setprecision(12);
  for (std::size_t b = 0; b < graph.cover.box_count(); ++b) {
    box_row(os, graph.cover, b);
    os << ',' << graph.scc[b] << '\n';
  }
}

void write_boxes_csv(std::ostream& os, const BoxCover& cover, const std::vector<std::size_t>& boxes) {
  os << "box_index,i,j,k,center_x,center_y,center_z\n";
  os << std::setprecision(12);
  for (std::size_t b : boxes) {
    box_row(os, cover, b);
    os << '\n';
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path);
  f << j.dump(2) << '\n';
}

}  // namespace singflow
