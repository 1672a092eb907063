#pragma once

#include <string>
#include <vector>

#include "catt/tensor.hpp"

namespace catt {

// Textual checkpoint: a version tag, then name/shape/values per parameter.
// Values are printed at 17 significant digits so doubles round-trip exactly.
void save_checkpoint(const std::string& path, const std::vector<ParamPtr>& params);

// Loads values into an existing parameter list. Names and shapes in the file
// must match the list exactly (same order); mismatch throws CheckpointError.
void load_checkpoint(const std::string& path, const std::vector<ParamPtr>& params);

}  // namespace catt
