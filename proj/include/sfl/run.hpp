#pragma once

#include "sfl/config.hpp"

#include "json.hpp"

namespace sfl {

struct RunResult {
  int exit_code = 0;
  nlohmann::json summary;
};

// Mode dispatch. train writes metrics.jsonl, visits.csv, config.ini and
// checkpoint.sfl (plus trace.jsonl when enabled); eval writes results.jsonl
// and summary.json; heatmap writes heatmap.csv; export-graph writes
// graph.dot; coverage and replay read artifacts back and report.
RunResult run(const RunConfig& cfg);

}  // namespace sfl
