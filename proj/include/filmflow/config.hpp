#pragma once

#include "filmflow/anisotropy.hpp"
#include "filmflow/elasticity.hpp"
#include "filmflow/energy.hpp"
#include "filmflow/grid.hpp"
#include "filmflow/stepper.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace filmflow {

/// INI-style config: '#' comments, [section] headers, key = value lines.
/// Every key must be consumed by the run description or parsing fails.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    int get_int(const std::string& section, const std::string& key, int fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::uint64_t get_u64(const std::string& section, const std::string& key,
                          std::uint64_t fallback) const;

    /// Overrides like "flow.tau=0.001" (used by the sweep driver).
    void set(const std::string& section, const std::string& key, const std::string& value);

    /// Throws listing any key that was never read.
    void check_all_consumed() const;

private:
    struct Entry {
        std::string value;
        mutable bool used = false;
    };
    std::map<std::string, std::map<std::string, Entry>> sections_;
    std::string origin_;

    const Entry* find(const std::string& section, const std::string& key) const;
};

/// Everything needed to run an evolution, assembled from a config.
struct RunSetup {
    Profile h0 = Profile::flat(1, 1.0, 4, 1.0);
    EnergyModel::Setup model;
    FlowParams flow;
    StepOptions step;
    int steps = 1;
    std::string output_dir = ".";
    bool write_trace = true;
    bool write_snapshots = true;
    int snapshot_stride = 10;
    bool gnuplot = false;
    std::uint64_t seed = 0;
};

/// Builds the run description; consumes and validates all keys.
RunSetup build_run(Config& cfg);

} // namespace filmflow
