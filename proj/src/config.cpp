#include "filmflow/config.hpp"

#include "filmflow/geometry.hpp"
#include "filmflow/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace filmflow {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    std::size_t z = s.find_last_not_of(" \t\r\n");
    return s.substr(a, z - a + 1);
}

[[noreturn]] void bad_key(const std::string& section, const std::string& key,
                          const std::string& what) {
    throw std::runtime_error("config: [" + section + "] " + key + ": " + what);
}

std::vector<double> parse_numbers(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cell = trim(cell);
        if (cell.empty()) continue;
        out.push_back(std::stod(cell));
    }
    return out;
}

// "(k,amp,phase) (k,amp,phase)" -> list of tuples
std::vector<std::vector<double>> parse_tuples(const std::string& s, std::size_t arity,
                                              const std::string& section,
                                              const std::string& key) {
    std::vector<std::vector<double>> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t open = s.find('(', pos);
        if (open == std::string::npos) break;
        std::size_t close = s.find(')', open);
        if (close == std::string::npos) bad_key(section, key, "unbalanced parentheses");
        std::vector<double> tup;
        try {
            tup = parse_numbers(s.substr(open + 1, close - open - 1));
        } catch (const std::exception&) {
            bad_key(section, key, "bad number in tuple");
        }
        if (tup.size() != arity)
            bad_key(section, key,
                    "each tuple needs " + std::to_string(arity) + " entries");
        out.push_back(std::move(tup));
        pos = close + 1;
    }
    if (out.empty()) bad_key(section, key, "no (..) tuples found");
    return out;
}

} // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::stringstream ss(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                         ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                         ": empty section name");
            cfg.sections_[section];
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                     ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key");
        if (section.empty())
            throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                     ": key outside any [section]");
        if (!cfg.sections_[section].emplace(key, Entry{value, false}).second)
            throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                     ": duplicate key '" + key + "' in [" + section + "]");
    }
    return cfg;
}

const Config::Entry* Config::find(const std::string& section, const std::string& key) const {
    auto sit = sections_.find(section);
    if (sit == sections_.end()) return nullptr;
    auto kit = sit->second.find(key);
    if (kit == sit->second.end()) return nullptr;
    return &kit->second;
}

bool Config::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    e->used = true;
    return e->value;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    e->used = true;
    try {
        std::size_t pos = 0;
        double v = std::stod(e->value, &pos);
        if (pos != e->value.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        bad_key(section, key, "expected a number, got '" + e->value + "'");
    }
}

int Config::get_int(const std::string& section, const std::string& key, int fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    e->used = true;
    try {
        std::size_t pos = 0;
        long v = std::stol(e->value, &pos, 10);
        if (pos != e->value.size()) throw std::invalid_argument("trailing junk");
        return static_cast<int>(v);
    } catch (const std::exception&) {
        bad_key(section, key, "expected an integer, got '" + e->value + "'");
    }
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& key,
                              std::uint64_t fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    e->used = true;
    try {
        std::size_t pos = 0;
        unsigned long long v = std::stoull(e->value, &pos, 10);
        if (pos != e->value.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        bad_key(section, key, "expected an unsigned integer, got '" + e->value + "'");
    }
}

bool Config::get_bool(const std::string& section, const std::string& key,
                      bool fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    e->used = true;
    const std::string& v = e->value;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    bad_key(section, key, "expected a boolean, got '" + v + "'");
}

void Config::set(const std::string& section, const std::string& key,
                 const std::string& value) {
    sections_[section][key] = Entry{value, false};
}

void Config::check_all_consumed() const {
    for (const auto& [sec, keys] : sections_)
        for (const auto& [key, entry] : keys)
            if (!entry.used)
                throw std::runtime_error("config " + origin_ + ": unknown key '" + key +
                                         "' in [" + sec + "]");
}

RunSetup build_run(Config& cfg) {
    RunSetup run;

    // --- geometry + initial profile ---
    const std::string init_type = cfg.get_string("initial", "type", "flat");
    if (init_type == "file") {
        const std::string file = cfg.get_string("initial", "file", "");
        if (file.empty()) bad_key("initial", "file", "required when type = file");
        run.h0 = io::read_profile_csv(file);
        if (cfg.has("geometry", "m") && cfg.get_int("geometry", "m", 0) != run.h0.m())
            bad_key("geometry", "m", "does not match the profile file");
        if (cfg.has("geometry", "n") && cfg.get_int("geometry", "n", 0) != run.h0.n())
            bad_key("geometry", "n", "does not match the profile file");
        if (cfg.has("geometry", "b") &&
            std::abs(cfg.get_double("geometry", "b", 0) - run.h0.b()) >
                1e-12 * run.h0.b())
            bad_key("geometry", "b", "does not match the profile file");
    } else {
        const int m = cfg.get_int("geometry", "m", 1);
        const double b = cfg.get_double("geometry", "b", 2.0 * kPi);
        const int n = cfg.get_int("geometry", "n", 128);
        const double height = cfg.get_double("initial", "height", 1.0);
        if (init_type == "flat") {
            run.h0 = Profile::flat(m, b, n, height);
        } else if (init_type == "modes") {
            const std::string spec = cfg.get_string("initial", "modes", "");
            if (spec.empty()) bad_key("initial", "modes", "required when type = modes");
            auto tuples = parse_tuples(spec, m == 1 ? 3 : 4, "initial", "modes");
            std::vector<double> vals(m == 1 ? static_cast<std::size_t>(n)
                                            : static_cast<std::size_t>(n) * n,
                                     height);
            const double w = 2.0 * kPi / b;
            for (const auto& t : tuples) {
                if (m == 1) {
                    for (int i = 0; i < n; ++i)
                        vals[i] += t[1] * std::cos(w * t[0] * (b * i / n) + t[2]);
                } else {
                    for (int iy = 0; iy < n; ++iy)
                        for (int ix = 0; ix < n; ++ix)
                            vals[static_cast<std::size_t>(iy) * n + ix] +=
                                t[2] * std::cos(w * (t[0] * (b * ix / n) +
                                                     t[1] * (b * iy / n)) +
                                                t[3]);
                }
            }
            run.h0 = Profile(m, b, n, std::move(vals));
        } else {
            bad_key("initial", "type", "expected flat, modes, or file");
        }
    }
    const int m = run.h0.m();
    const int dim = m + 1;

    // --- anisotropy ---
    const std::string family = cfg.get_string("anisotropy", "family", "isotropic");
    if (family == "isotropic") {
        run.model.psi = Anisotropy::isotropic(dim);
    } else if (family == "elliptic") {
        const std::string mat = cfg.get_string("anisotropy", "matrix", "");
        if (mat.empty()) bad_key("anisotropy", "matrix", "required for elliptic");
        std::vector<double> entries;
        try {
            entries = parse_numbers(mat);
        } catch (const std::exception&) {
            bad_key("anisotropy", "matrix", "bad number");
        }
        if (entries.size() != static_cast<std::size_t>(dim) * dim)
            bad_key("anisotropy", "matrix",
                    "needs " + std::to_string(dim * dim) + " row-major entries");
        run.model.psi = Anisotropy::elliptic(dim, entries);
    } else if (family == "cubic") {
        run.model.psi =
            Anisotropy::regularized_cubic(dim, cfg.get_double("anisotropy", "gamma", 0.2));
    } else {
        bad_key("anisotropy", "family", "expected isotropic, elliptic, or cubic");
    }

    // --- flow parameters ---
    run.model.epsilon = cfg.get_double("flow", "epsilon", 0.05);
    run.model.p = cfg.get_double("flow", "p", m == 1 ? 2.0 : 3.0);
    run.flow.epsilon = run.model.epsilon;
    run.flow.p = run.model.p;
    run.flow.tau = cfg.get_double("flow", "tau", run.h0.b() * run.h0.b() / 1024.0);

    const double slope0 = metrics(run.h0).max_slope;
    run.flow.lambda0 = cfg.get_double("flow", "lambda0", 0.0);
    if (run.flow.lambda0 == 0.0) {
        run.flow.lambda0 = 2.0 * (1.0 + slope0);
    } else if (run.flow.lambda0 <= slope0) {
        bad_key("flow", "lambda0", "must exceed the initial maximum slope");
    }

    if (cfg.has("flow", "t_end") && cfg.has("flow", "steps"))
        bad_key("flow", "t_end", "give either t_end or steps, not both");
    if (cfg.has("flow", "t_end")) {
        const double t_end = cfg.get_double("flow", "t_end", 0.0);
        if (t_end <= 0.0) bad_key("flow", "t_end", "must be positive");
        run.steps = std::max(1, static_cast<int>(std::llround(t_end / run.flow.tau)));
    } else {
        run.steps = cfg.get_int("flow", "steps", 100);
        if (run.steps < 1) bad_key("flow", "steps", "must be >= 1");
    }

    // --- substrate: elastic film or explicit potential ---
    const bool elastic_on = cfg.get_bool("elasticity", "enabled", false);
    if (elastic_on) {
        if (m != 1) bad_key("elasticity", "enabled", "elastic substrate needs m = 1");
        ElasticSpec spec;
        spec.lame.mu = cfg.get_double("elasticity", "mu", 1.0);
        spec.lame.lambda = cfg.get_double("elasticity", "lambda", 1.0);
        spec.lame.e0 = cfg.get_double("elasticity", "e0", 0.1);
        spec.ny = cfg.get_int("elasticity", "ny", 16);
        spec.lame.validate();
        if (spec.ny < 1) bad_key("elasticity", "ny", "must be >= 1");
        run.model.elastic = spec;
    }
    const std::string pot = cfg.get_string("potential", "id", "none");
    if (pot != "none") {
        if (elastic_on) bad_key("potential", "id", "cannot combine with elasticity");
        const double coef = cfg.get_double("potential", "coef", 1.0);
        if (pot == "uniform") {
            run.model.potential = [coef](double, double, double) { return coef; };
        } else if (pot == "linear") {
            run.model.potential = [coef](double, double, double y) { return coef * y; };
        } else {
            bad_key("potential", "id", "expected none, uniform, or linear");
        }
    }

    // --- stepper ---
    run.step.gtol = cfg.get_double("stepper", "gtol", 1e-7);
    run.step.max_inner = cfg.get_int("stepper", "max_inner", 500);
    const std::string accel = cfg.get_string("stepper", "accel", "fourier");
    if (accel == "fourier") {
        run.step.fourier_precond = true;
    } else if (accel == "none") {
        run.step.fourier_precond = false;
    } else {
        bad_key("stepper", "accel", "expected fourier or none");
    }
    run.step.elastic_refresh = cfg.get_int("stepper", "elastic_refresh", 1);
    run.step.pinch_rel = cfg.get_double("stepper", "pinch_floor", 1e-6);

    // --- output ---
    run.output_dir = cfg.get_string("output", "directory", ".");
    run.write_trace = cfg.get_bool("output", "trace", true);
    run.write_snapshots = cfg.get_bool("output", "snapshots", true);
    run.snapshot_stride = cfg.get_int("output", "snapshot_stride", 10);
    run.gnuplot = cfg.get_bool("output", "gnuplot", false);
    run.seed = cfg.get_u64("output", "seed", 0);
    if (run.snapshot_stride < 1) bad_key("output", "snapshot_stride", "must be >= 1");

    run.flow.validate();
    cfg.check_all_consumed();
    return run;
}

} // namespace filmflow
