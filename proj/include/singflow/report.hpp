#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "singflow/hypcheck.hpp"

namespace singflow {

inline constexpr const char* kToolVersion = "0.1.0";

/// Everything a CLI run depends on. Output directory and worker count do not
/// affect results and are left out of the config hash.
struct RunConfig {
  std::string command;
  std::string field = "lorenz";
  std::string params;
  std::optional<Box3> region;
  double h = 0.25;
  std::optional<double> eps;  // defaults to 2 h
  std::vector<double> time_samples{1.0, 1.25, 1.5, 1.75, 2.0};
  int samples_per_edge = 1;
  double graph_tol = 1e-6;
  double window = 10.0;
  double dt = 1.0;
  double tol = kDefaultTol;
  std::size_t seed_count = 50;
  std::uint64_t rng_seed = 1;
  std::optional<Vec3> class_of;
  std::optional<Vec3> point;  // trace seed
  double time = 10.0;         // trace length
  double out_dt = 0.01;       // trace output spacing
  int grid = 10;              // singularity search grid
  std::size_t budget_boxes = 5'000'000;
  std::size_t budget_edges = 100'000'000;
  std::string out_dir = ".";
  int jobs = 0;

  double effective_eps() const { return eps ? *eps : 2.0 * h; }
  nlohmann::json to_json() const;
};

/// 64-bit FNV-1a of the compact JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

/// Hypotheses of the underlying theory that no command checks.
std::vector<std::string> unchecked_assumptions();

nlohmann::json report_header(const RunConfig& cfg);

nlohmann::json to_json(const Vec3& v);
nlohmann::json to_json(const Field& field);
nlohmann::json to_json(const SingularityRecord& rec);
nlohmann::json to_json(const RateFit& fit);
nlohmann::json to_json(const SplittingCertificate& cert);
nlohmann::json to_json(const HyperbolicReport& rep);
nlohmann::json to_json(const SingularHyperbolicReport& rep);
nlohmann::json to_json(const EquivalenceReport& rep);
nlohmann::json to_json(const BoxCover& cover);
nlohmann::json graph_summary(const BoxGraph& graph);

/// Edge list; the EXIT node is written as -1.
void write_edges_csv(std::ostream& os, const BoxGraph& graph);
/// box_index,i,j,k,center_x,center_y,center_z,scc for every box.
void write_scc_csv(std::ostream& os, const BoxGraph& graph);
/// box_index,i,j,k,center_x,center_y,center_z for the given boxes.
void write_boxes_csv(std::ostream& os, const BoxCover& cover, const std::vector<std::size_t>& boxes);

void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace singflow
