#pragma once

#include <string>

#include "artifacts.hpp"
#include "run_config.hpp"

namespace cantcn::cli {

// Each subcommand writes its artifacts through `out` and returns normally, or
// throws StageError naming the stage that failed.

void run_parse(const RunConfig& config, ArtifactWriter& out);
void run_extract_signals(const RunConfig& config, ArtifactWriter& out);
void run_inject(const RunConfig& config, ArtifactWriter& out);
void run_train(const RunConfig& config, ArtifactWriter& out);
void run_calibrate(const RunConfig& config, ArtifactWriter& out);
void run_detect(const RunConfig& config, ArtifactWriter& out);
void run_evaluate(const RunConfig& config, ArtifactWriter& out);
void run_pipeline(const RunConfig& config, ArtifactWriter& out);

} // namespace cantcn::cli
