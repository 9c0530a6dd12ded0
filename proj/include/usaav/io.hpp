#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "usaav/dynamics.hpp"
#include "usaav/particle_system.hpp"

namespace usaav {

// Shortest decimal that round-trips the double (17 significant digits).
std::string format_double(double v);

// Trajectory CSV: header `time,energy,production,<metric columns>` with the
// fixed metric column names g_x, g_q, d_cond, delta_e, delta_max, theta_min.
struct TrajectoryColumns {
    bool g_x = false;
    bool g_q = false;
    bool d_cond = false;
    bool delta_e = false;
    bool delta_max = false;
    bool theta_min = false;

    static TrajectoryColumns from_metric_set(const MetricSet& set);
};

void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& rec,
                          const TrajectoryColumns& cols);

struct TrajectoryTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const;  // -1 when absent
};

TrajectoryTable read_csv(const std::filesystem::path& path);

// Final-state CSV: particle,label_kind,label_value,x_0,...,x_{d-1}
void write_final_states_csv(const std::filesystem::path& path, const ParticleSystem& sys);

std::uint64_t fnv1a64(const void* data, std::size_t size);
std::string file_checksum(const std::filesystem::path& path);
std::string string_checksum(const std::string& s);

void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace usaav
