#pragma once

// JSON run configuration for the command-line tool. Parsing is strict: an
// unknown key is rejected with a nearest-known-key suggestion, and every
// value violation is collected so one failure reports them all.

#include <cstdint>
#include <string>

#include "rddmk/engine.hpp"
#include "rddmk/simgen.hpp"

namespace rddmk {

enum class Command { Simulate, Krige, Cv, Variogram, McStudy };

struct DataConfig {
  enum class Metric { Triangulation, Euclidean, Matrix };
  std::string sites;
  std::string observations;
  std::string boundary;   // triangulation metric only
  std::string distances;  // matrix metric only
  std::string targets;    // krige only; defaults to the sites themselves
  Metric metric = Metric::Triangulation;
};

struct SimulateConfig {
  ManifoldKind field = ManifoldKind::Spd;
  std::uint64_t seed = 0;
  int n_replicates = 1;
  int n_sites = 100;
  bool new_field_per_replicate = false;
  CDomainSpec domain;
  GrfSpec grf;
};

struct StudyConfig {
  McConfig mc;            // run and manifold filled from the other sections
  bool dump_spe = false;  // per-target error dump alongside the summaries
};

struct CliConfig {
  ManifoldKind manifold = ManifoldKind::Spd;
  RunConfig run;
  DataConfig data;
  SimulateConfig sim;
  StudyConfig study;
};

Command parse_command(const std::string& name);

// Reads and fully validates the configuration a command needs. Structural
// problems (bad JSON, wrong type, unknown key) raise ParseError; value and
// missing-section problems are gathered into a single ValidationError.
CliConfig parse_config(const std::string& path, Command command);

}  // namespace rddmk
