#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "softfreeze/harness/run_config.hpp"

namespace softfreeze {

struct SweepRow {
    PolicyParams params;
    double mean_compression = 0.0;
    int max_absence = 0;
    std::int64_t recovery_count = 0;
};

// One run per cell of the tau x window x softness x history_window grid, in
// grid order. An empty axis keeps the base value. Cells run concurrently.
std::vector<SweepRow> run_sweep(const RunConfig& config);
void write_sweep_table(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace softfreeze
