#include "singflow/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <omp.h>

#include "CLI11.hpp"

namespace singflow {

using nlohmann::json;

namespace {

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("malformed " + what + ": '" + text + "'");
    }
  }
  return out;
}

Vec3 parse_point(const std::string& text, const std::string& what) {
  const auto v = parse_list(text, what);
  if (v.size() != 3) throw ConfigError(what + " needs three comma-separated numbers");
  return {v[0], v[1], v[2]};
}

void require_positive(double v, const std::string& name) {
  if (!(v > 0) || !std::isfinite(v)) throw ConfigError(name + " must be positive");
}

void validate(const RunConfig& cfg) {
  require_positive(cfg.h, "--box");
  require_positive(cfg.effective_eps(), "--eps");
  require_positive(cfg.window, "--window");
  require_positive(cfg.dt, "--dt");
  require_positive(cfg.tol, "--tol");
  require_positive(cfg.graph_tol, "--graph-tol");
  require_positive(cfg.time, "--time");
  require_positive(cfg.out_dt, "--out-dt");
  if (cfg.samples_per_edge < 1) throw ConfigError("--samples-per-edge must be at least 1");
  if (cfg.grid < 2) throw ConfigError("--grid must be at least 2");
  if (cfg.time_samples.empty()) throw ConfigError("--time-samples must be non-empty");
  for (double t : cfg.time_samples)
    if (!(t >= 1.0 && t <= 2.0)) throw ConfigError("--time-samples must lie in [1, 2]");
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path);
  return f;
}

TransitionData transition_data(const Field& field, const RunConfig& cfg) {
  const BoxCover cover = build_box_cover(field.region(), cfg.h, cfg.budget_boxes);
  TransitionOptions topts;
  topts.time_samples = cfg.time_samples;
  topts.samples_per_edge = cfg.samples_per_edge;
  topts.tol = cfg.graph_tol;
  return compute_transition_data(field, cover, topts);
}

json class_json(const RunConfig& cfg, const Field& field, const TransitionData& data,
                const std::vector<std::size_t>& boxes) {
  json j;
  j["header"] = report_header(cfg);
  j["field"] = to_json(field);
  j["cover"] = to_json(data.cover);
  j["eps"] = cfg.effective_eps();
  j["time_samples"] = data.times;
  j["sample_count"] = data.sample_count;
  j["failed_samples"] = data.failed_count;
  j["low_confidence"] = data.low_confidence();
  j["selector"] = to_json(*cfg.class_of);
  j["selector_box"] = *data.cover.locate(*cfg.class_of);
  j["class_box_count"] = boxes.size();
  return j;
}

ClassRegion selected_class(const Field& field, const RunConfig& cfg, std::ostream& log) {
  const TransitionData data = transition_data(field, cfg);
  log << "cover: " << data.cover.box_count() << " boxes, " << data.sample_count << " samples\n";
  std::vector<std::size_t> boxes = chain_class_of(data, cfg.effective_eps(), *cfg.class_of);
  log << "class of selector: " << boxes.size() << " boxes\n";
  return ClassRegion(data.cover, std::move(boxes));
}

CheckOptions check_options(const RunConfig& cfg) {
  CheckOptions o;
  o.T = cfg.window;
  o.splitting.dt = cfg.dt;
  o.splitting.tol = cfg.tol;
  o.singularity_grid = cfg.grid;
  return o;
}

std::vector<Vec3> class_seeds(const Field& field, const ClassRegion& cls, const RunConfig& cfg) {
  SeedOptions so;
  so.random_boxes = cfg.seed_count;
  so.rng_seed = cfg.rng_seed;
  return sample_class_seeds(field, cls, *cfg.class_of, so);
}

}  // namespace

Field resolve_field(const RunConfig& cfg) {
  const std::string& spec = cfg.field;
  Field field = [&] {
    if (!spec.empty() && spec.front() == '{') return parse_field_spec(spec);
    if (std::filesystem::is_regular_file(spec)) {
      std::ifstream f(spec);
      std::stringstream ss;
      ss << f.rdbuf();
      return parse_field_spec(ss.str());
    }
    return Field::from_catalogue(spec, parse_params(cfg.params));
  }();
  if (cfg.region) field.set_region(*cfg.region);
  return field;
}

int cmd_singularities(const RunConfig& cfg, std::ostream& log) {
  const Field field = resolve_field(cfg);
  json records = json::array();
  for (const auto& found : find_singularities(field, cfg.grid)) {
    SingularityRecord rec = classify_singularity(field, found.position);
    rec.non_hyperbolic_candidate = found.non_hyperbolic_candidate;
    records.push_back(to_json(rec));
  }
  json j;
  j["header"] = report_header(cfg);
  j["field"] = to_json(field);
  j["singularities"] = records;
  const std::string path = out_path(cfg, "singularities.json");
  write_json_file(path, j);
  log << records.size() << " singular points written to " << path << '\n';
  return kExitOk;
}

int cmd_chain_classes(const RunConfig& cfg, std::ostream& log) {
  const Field field = resolve_field(cfg);
  const TransitionData data = transition_data(field, cfg);
  if (data.cover.snapped()) log << "note: box size snapped to " << data.cover.h().transpose() << '\n';
  if (data.cover.too_coarse()) log << "warning: resolution too coarse (single box along an axis)\n";
  if (cfg.class_of) {
    const auto boxes = chain_class_of(data, cfg.effective_eps(), *cfg.class_of);
    write_json_file(out_path(cfg, "class.json"), class_json(cfg, field, data, boxes));
    auto f = open_out(out_path(cfg, "class.csv"));
    write_boxes_csv(f, data.cover, boxes);
    log << "class of selector: " << boxes.size() << " of " << data.cover.box_count() << " boxes\n";
    return kExitOk;
  }
  const BoxGraph graph = build_transition_graph(data, cfg.effective_eps(), cfg.budget_edges);
  json j = graph_summary(graph);
  j["header"] = report_header(cfg);
  j["field"] = to_json(field);
  write_json_file(out_path(cfg, "graph.json"), j);
  {
    auto f = open_out(out_path(cfg, "edges.csv"));
    write_edges_csv(f, graph);
  }
  {
    auto f = open_out(out_path(cfg, "scc.csv"));
    write_scc_csv(f, graph);
  }
  log << graph.cover.box_count() << " boxes, " << graph.edge_count() << " edges, " << graph.scc_count
      << " recurrent classes, " << j["recurrent_box_count"].get<std::size_t>() << " recurrent boxes\n";
  return kExitOk;
}

int cmd_certify(const RunConfig& cfg, std::ostream& log) {
  if (!cfg.class_of) throw ConfigError("certify needs a class selector (--class-of x,y,z)");
  const Field field = resolve_field(cfg);
  const ClassRegion cls = selected_class(field, cfg, log);
  const auto seeds = class_seeds(field, cls, cfg);
  const CheckOptions opts = check_options(cfg);
  json j;
  j["header"] = report_header(cfg);
  j["field"] = to_json(field);
  j["class_box_count"] = cls.boxes().size();
  j["seed_count"] = seeds.size();
  const auto sing = singularities_in(field, cls, cfg.grid);
  if (sing.empty()) {
    const HyperbolicReport rep = check_hyperbolic(field, cls, seeds, opts);
    j["result"] = to_json(rep);
    log << "verdict: " << to_string(rep.verdict) << '\n';
  } else {
    Orientation orientation = Orientation::X;
    const auto rec = classify_singularity(field, sing.front());
    if (rec.classification == SingularityRecord::Kind::lorenz_like_for_minus_X) orientation = Orientation::minus_X;
    const SingularHyperbolicReport rep = check_singular_hyperbolic(field, cls, seeds, opts, orientation);
    j["result"] = to_json(rep);
    log << "verdict: " << to_string(rep.verdict);
    if (!rep.offending.empty()) log << " (" << rep.offending << ")";
    log << '\n';
  }
  write_json_file(out_path(cfg, "certificate.json"), j);
  return kExitOk;
}

int cmd_equivalence(const RunConfig& cfg, std::ostream& log) {
  const Field field = resolve_field(cfg);
  ClassRegion cls;
  std::vector<Vec3> seeds;
  if (cfg.class_of) {
    cls = selected_class(field, cfg, log);
    seeds = class_seeds(field, cls, cfg);
  } else {
    const TransitionData data = transition_data(field, cfg);
    const BoxGraph graph = build_transition_graph(data, cfg.effective_eps(), cfg.budget_edges);
    cls = ClassRegion(graph.cover, chain_recurrent_boxes(graph));
    if (!cls.empty()) {
      SeedOptions so;
      so.random_boxes = cfg.seed_count;
      so.rng_seed = cfg.rng_seed;
      so.max_orbit_seeds = 0;
      seeds = sample_class_seeds(field, cls, cls.cover().center(cls.boxes().front()), so);
    }
  }
  const EquivalenceReport rep = check_equivalence(field, cls, seeds, check_options(cfg));
  json j = to_json(rep);
  j["header"] = report_header(cfg);
  j["field"] = to_json(field);
  j["class_box_count"] = cls.boxes().size();
  write_json_file(out_path(cfg, "equivalence.json"), j);
  log << "tangent: " << to_string(rep.tangent.verdict) << ", linear_poincare: "
      << to_string(rep.linear_poincare.verdict) << ", agree: " << (rep.agree ? "true" : "false") << '\n';
  return kExitOk;
}

int cmd_trace(const RunConfig& cfg, std::ostream& log) {
  if (!cfg.point) throw ConfigError("trace needs a seed point (--point x,y,z)");
  const Field field = resolve_field(cfg);
  const NormalFrame f0 = normal_frame(field, *cfg.point);
  const OrbitSegment seg = sample_orbit(field, *cfg.point, cfg.time, cfg.out_dt, cfg.tol);
  auto orbit = open_out(out_path(cfg, "orbit.csv"));
  auto trace = open_out(out_path(cfg, "trace.csv"));
  orbit << std::setprecision(12);
  trace << std::setprecision(12);
  orbit << "t,x,y,z,speed,m11,m12,m13,m21,m22,m23,m31,m32,m33\n";
  trace << "t,x,y,z,speed,psi11,psi12,psi21,psi22,psis11,psis12,psis21,psis22,norm_psi,norm_psis\n";
  for (std::size_t i = 0; i < seg.times.size(); ++i) {
    const Vec3& p = seg.points[i];
    const Mat3& M = seg.cocycle[i];
    orbit << seg.times[i] << ',' << p.x() << ',' << p.y() << ',' << p.z() << ',' << seg.speed[i];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) orbit << ',' << M(r, c);
    orbit << '\n';
    const NormalFrame fi = frame_for_direction(p, field.evaluate(p));
    const Mat2 psi = project_cocycle(f0, fi, M);
    const Mat2 psis = (f0.speed / fi.speed) * psi;
    trace << seg.times[i] << ',' << p.x() << ',' << p.y() << ',' << p.z() << ',' << seg.speed[i];
    for (const Mat2* m : {&psi, &psis})
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) trace << ',' << (*m)(r, c);
    trace << ',' << psi.operatorNorm() << ',' << psis.operatorNorm() << '\n';
  }
  if (seg.truncated) {
    orbit << "# proximity truncation at t=" << seg.truncation_time << '\n';
    trace << "# proximity truncation at t=" << seg.truncation_time << '\n';
    log << "orbit truncated near a singular point at t=" << seg.truncation_time << '\n';
  }
  log << seg.times.size() << " samples written\n";
  return kExitOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"singflow: numerical checks of dominated splittings and singular hyperbolicity for 3D flows"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string region, time_samples, class_of, point;
  std::optional<double> eps;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--field", cfg.field, "catalogue name, JSON spec file, or inline JSON");
    sub->add_option("--params", cfg.params, "catalogue parameters k=v,...");
    sub->add_option("--region", region, "xmin,xmax,ymin,ymax,zmin,zmax");
    sub->add_option("--box", cfg.h, "box edge length h");
    sub->add_option("--eps", eps, "pseudo-orbit jump size (default 2h)");
    sub->add_option("--time-samples", time_samples, "times in [1,2], comma separated");
    sub->add_option("--samples-per-edge", cfg.samples_per_edge, "lattice samples per box edge");
    sub->add_option("--graph-tol", cfg.graph_tol, "integration tolerance for box images");
    sub->add_option("--window", cfg.window, "certificate window T");
    sub->add_option("--dt", cfg.dt, "checkpoint spacing");
    sub->add_option("--tol", cfg.tol, "integration tolerance");
    sub->add_option("--seeds", cfg.seed_count, "number of random class boxes used as seeds");
    sub->add_option("--seed", cfg.rng_seed, "RNG seed");
    sub->add_option("--class-of", class_of, "class selector point x,y,z");
    sub->add_option("--point", point, "trace seed x,y,z");
    sub->add_option("--time", cfg.time, "trace length");
    sub->add_option("--out-dt", cfg.out_dt, "trace output spacing");
    sub->add_option("--grid", cfg.grid, "singularity search grid per axis");
    sub->add_option("--budget-boxes", cfg.budget_boxes, "maximum box count");
    sub->add_option("--budget-edges", cfg.budget_edges, "maximum edge count");
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--jobs", cfg.jobs, "worker threads (default: all processors)");
  };
  const std::pair<const char*, const char*> commands[] = {
      {"singularities", "locate and classify zeros of the field"},
      {"chain-classes", "box graph, chain recurrent set and classes"},
      {"certify", "hyperbolicity or singular-hyperbolicity check of a class"},
      {"equivalence", "tangent vs linear Poincare domination on the same seeds"},
      {"trace", "orbit with tangent and linear Poincare cocycles"}};
  for (const auto& [name, about] : commands) add_common(app.add_subcommand(name, about));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "singflow: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    cfg.command = app.get_subcommands().front()->get_name();
    cfg.eps = eps;
    if (!region.empty()) cfg.region = parse_region(region);
    if (!time_samples.empty()) cfg.time_samples = parse_list(time_samples, "--time-samples");
    if (!class_of.empty()) cfg.class_of = parse_point(class_of, "--class-of");
    if (!point.empty()) cfg.point = parse_point(point, "--point");
    validate(cfg);
    if (cfg.jobs > 0) omp_set_num_threads(cfg.jobs);
    if (cfg.command == "singularities") return cmd_singularities(cfg, out);
    if (cfg.command == "chain-classes") return cmd_chain_classes(cfg, out);
    if (cfg.command == "certify") return cmd_certify(cfg, out);
    if (cfg.command == "equivalence") return cmd_equivalence(cfg, out);
    return cmd_trace(cfg, out);
  } catch (const BudgetError& e) {
    err << "singflow: budget exceeded: " << e.what() << " (required: " << e.required() << ")\n";
    return kExitBudget;
  } catch (const ConfigError& e) {
    err << "singflow: " << e.what() << '\n';
    return kExitConfig;
  } catch (const PreconditionError& e) {
    err << "singflow: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "singflow: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "singflow: " << e.what() << '\n';
    return kExitConfig;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"singflow"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace singflow
