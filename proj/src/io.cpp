#include "filmflow/io.hpp"

#include "filmflow/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace filmflow::io {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    return out;
}

std::vector<double> parse_row(const std::string& line, const std::string& path) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        std::size_t pos = 0;
        double v;
        try {
            v = std::stod(cell, &pos);
        } catch (const std::exception&) {
            throw std::runtime_error(path + ": bad number '" + cell + "'");
        }
        while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos])))
            ++pos;
        if (pos != cell.size())
            throw std::runtime_error(path + ": bad number '" + cell + "'");
        row.push_back(v);
    }
    return row;
}

} // namespace

void write_profile_csv(const Profile& h, const std::string& path) {
    std::ofstream out = open_out(path);
    out << h.m() << ',' << fmt(h.b()) << ',' << h.n() << '\n';
    const auto& v = h.values();
    if (h.m() == 1) {
        for (double x : v) out << fmt(x) << '\n';
    } else {
        const int n = h.n();
        for (int iy = 0; iy < n; ++iy) {
            for (int ix = 0; ix < n; ++ix) {
                if (ix) out << ',';
                out << fmt(v[static_cast<std::size_t>(iy) * n + ix]);
            }
            out << '\n';
        }
    }
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

Profile read_profile_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    std::vector<double> head = parse_row(line, path);
    if (head.size() != 3)
        throw std::runtime_error(path + ": header must be 'm,b,n'");
    const int m = static_cast<int>(head[0]);
    const double b = head[1];
    const int n = static_cast<int>(head[2]);
    if (m != head[0] || n != head[2])
        throw std::runtime_error(path + ": m and n must be integers");

    std::vector<double> vals;
    vals.reserve(m == 1 ? static_cast<std::size_t>(n)
                        : static_cast<std::size_t>(n) * n);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row = parse_row(line, path);
        vals.insert(vals.end(), row.begin(), row.end());
    }
    return Profile(m, b, n, std::move(vals));
}

void write_trace_csv(const EvolutionTrace& trace, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "step,t,E_total,E_elastic,E_surface,E_curv,penalty,volume,"
           "max_slope,min_h,hminus1_velocity,eq51_diagnostic\n";

    auto row = [&](int step, double t, const EnergyBreakdown& e, double penalty,
                   const Profile& h, double max_slope, double min_h, double vel,
                   double eq51) {
        out << step << ',' << fmt(t) << ',' << fmt(e.total) << ',' << fmt(e.elastic)
            << ',' << fmt(e.surface) << ',' << fmt(e.curvature) << ',' << fmt(penalty)
            << ',' << fmt(volume(h)) << ',' << fmt(max_slope) << ',' << fmt(min_h)
            << ',' << fmt(vel) << ',' << fmt(eq51) << '\n';
    };

    {
        const Profile& h0 = trace.profiles.front();
        const auto& v = h0.values();
        double mn = v[0], mx_slope = 0.0;
        for (double x : v) mn = std::min(mn, x);
        SurfaceMetrics g = metrics(h0);
        mx_slope = g.max_slope;
        row(0, 0.0, trace.initial_breakdown, 0.0, h0, mx_slope, mn, 0.0, 0.0);
    }
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        const StepResult& s = trace.steps[i];
        row(static_cast<int>(i) + 1, trace.times[i + 1], s.energy, s.penalty, s.h,
            s.max_slope, s.min_height, s.hminus1_velocity, s.eq51);
    }
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

void write_snapshots_csv(const EvolutionTrace& trace, const std::string& path,
                         int stride) {
    if (stride < 1) throw std::invalid_argument("snapshot stride must be >= 1");
    std::ofstream out = open_out(path);
    out << "step,t,values\n";
    const std::size_t last = trace.profiles.size() - 1;
    for (std::size_t i = 0; i <= last; ++i) {
        if (i % static_cast<std::size_t>(stride) != 0 && i != last) continue;
        out << i << ',' << fmt(trace.times[i]);
        for (double v : trace.profiles[i].values()) out << ',' << fmt(v);
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

void write_gnuplot_script(const EvolutionTrace& trace, const std::string& directory) {
    std::ofstream out = open_out(directory + "/plot.gp");
    out << "set datafile separator ','\n"
           "set key autotitle columnhead\n"
           "set terminal pngcairo size 1000,700\n"
           "set output 'energy.png'\n"
           "set xlabel 't'\n"
           "plot 'trace.csv' using 2:3 with lines title 'total', \\\n"
           "     'trace.csv' using 2:4 with lines title 'elastic', \\\n"
           "     'trace.csv' using 2:5 with lines title 'surface', \\\n"
           "     'trace.csv' using 2:6 with lines title 'curvature'\n"
           "set output 'profile.png'\n";
    if (trace.m == 1) {
        out << "set xlabel 'x'\n"
               "plot 'final_profile.csv' every ::1 using 0:1 with lines title 'h'\n";
    } else {
        out << "set view map\n"
               "splot 'final_profile.csv' every ::1 matrix with image title 'h'\n";
    }
    if (!out) throw std::runtime_error("write failed in '" + directory + "'");
}

} // namespace filmflow::io
