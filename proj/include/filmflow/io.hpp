#pragma once

#include "filmflow/grid.hpp"
#include "filmflow/stepper.hpp"

#include <string>

namespace filmflow::io {

// Profile CSV layout: header line "m,b,n", then node values with 17
// significant digits. m = 1 writes one value per line; m = 2 writes n rows of
// n comma-separated values (row-major, y outer).
void write_profile_csv(const Profile& h, const std::string& path);
Profile read_profile_csv(const std::string& path);

// Per-step scalar diagnostics of an evolution, one row per accepted step
// (plus a step-0 row for the initial profile).
void write_trace_csv(const EvolutionTrace& trace, const std::string& path);

// Stacked profile snapshots: "step,t,values..." rows every `stride` steps,
// always including the final profile.
void write_snapshots_csv(const EvolutionTrace& trace, const std::string& path,
                         int stride);

// Gnuplot script that plots the trace energy columns and the final profile.
void write_gnuplot_script(const EvolutionTrace& trace, const std::string& directory);

} // namespace filmflow::io
