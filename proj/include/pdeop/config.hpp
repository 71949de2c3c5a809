#pragma once

#include <string>

#include "pdeop/pipeline.hpp"

namespace pdeop {

/// Everything a run needs, parsed from a flat key=value file with # comments.
/// Unknown keys are errors; missing keys take the defaults below.
struct RunConfig {
  Domain domain{};
  GpConfig gp{};
  TrainConfig train{};
  FdmConfig fdm{};
  DiffusionFunction diffusion = DiffusionFunction::quadratic();
  int n_test = 10;
  int eval_grid = 50;
};

RunConfig parse_run_config(const std::string& path);
RunConfig parse_run_config_text(const std::string& text, const std::string& origin);

}  // namespace pdeop
