#pragma once

#include <string>

#include "pipeline_config.hpp"

namespace psgm::cli {

int cmd_sgbm(PipelineConfig config);
int cmd_sgbmp(PipelineConfig config);
int cmd_prior(PipelineConfig config);
int cmd_eval(PipelineConfig config);
int cmd_cloud(PipelineConfig config);
int cmd_synth(PipelineConfig config);
int cmd_batch(PipelineConfig config, const std::string& cases_file);

/// Routes by config.command; used by batch case files.
int dispatch(const PipelineConfig& config);

}  // namespace psgm::cli
