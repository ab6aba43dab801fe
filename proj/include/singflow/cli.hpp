#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "singflow/report.hpp"

namespace singflow {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitBudget = 3, kExitNumerical = 4 };

/// Field named by cfg.field: a JSON spec file, inline JSON, or a catalogue
/// name combined with cfg.params. cfg.region overrides the field region.
Field resolve_field(const RunConfig& cfg);

int cmd_singularities(const RunConfig& cfg, std::ostream& log);
int cmd_chain_classes(const RunConfig& cfg, std::ostream& log);
int cmd_certify(const RunConfig& cfg, std::ostream& log);
int cmd_equivalence(const RunConfig& cfg, std::ostream& log);
int cmd_trace(const RunConfig& cfg, std::ostream& log);

/// Parses argv and runs the subcommand, mapping errors to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace singflow
