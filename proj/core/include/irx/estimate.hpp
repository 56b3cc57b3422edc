#pragma once

#include <vector>

#include "irx/cmatrix.hpp"

namespace irx {

// One soft symbol estimate together with its effective noise variance.
struct SymbolEstimate {
    cxd value;
    double noise_var;
};

using EstimateSeq = std::vector<SymbolEstimate>;

} // namespace irx
