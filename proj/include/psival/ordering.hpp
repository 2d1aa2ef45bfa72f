#pragma once

#include <string>
#include <vector>

namespace psival {

/// The order in which features join the coalition for one Shapley sample.
using Ordering = std::vector<std::string>;

}  // namespace psival
