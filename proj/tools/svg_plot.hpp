// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "odorgen/diffusion.hpp"

namespace odorgen::cli {

/// Line chart of mse, ce and total loss against epoch, one polyline each.
std::string render_loss_svg(const std::vector<diffusion::EpochMetrics>& metrics);

}  // namespace odorgen::cli
