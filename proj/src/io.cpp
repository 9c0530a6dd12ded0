#include "usaav/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace usaav {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

TrajectoryColumns TrajectoryColumns::from_metric_set(const MetricSet& set) {
    TrajectoryColumns c;
    c.g_x = set.g_x;
    c.g_q = set.g_q;
    c.d_cond = set.d_cond;
    c.delta_e = set.delta_e;
    c.delta_max = set.cluster;
    c.theta_min = set.cluster;
    return c;
}

void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& rec,
                          const TrajectoryColumns& cols) {
    std::ostringstream out;
    out << "time,energy,production";
    if (cols.g_x) out << ",g_x";
    if (cols.g_q) out << ",g_q";
    if (cols.d_cond) out << ",d_cond";
    if (cols.delta_e) out << ",delta_e";
    if (cols.delta_max) out << ",delta_max";
    if (cols.theta_min) out << ",theta_min";
    out << "\n";
    auto put = [&](double v) { out << "," << format_double(v); };
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
        out << format_double(rec.times[i]);
        put(rec.energy[i]);
        put(rec.production[i]);
        const MetricRow& m = rec.metrics[i];
        if (cols.g_x) put(m.g_x);
        if (cols.g_q) put(m.g_q.value_or(0.0));
        if (cols.d_cond) put(m.d_cond.value_or(0.0));
        if (cols.delta_e) put(m.delta_e.value_or(0.0));
        if (cols.delta_max) put(m.delta_max.value_or(0.0));
        if (cols.theta_min) put(m.theta_min.value_or(0.0));
        out << "\n";
    }
    write_text_file(path, out.str());
}

int TrajectoryTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

TrajectoryTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path.string());
    TrajectoryTable table;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_csv: empty file " + path.string());
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) table.header.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ls(line);
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != table.header.size())
            throw std::runtime_error("read_csv: ragged row in " + path.string());
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_final_states_csv(const std::filesystem::path& path, const ParticleSystem& sys) {
    std::ostringstream out;
    out << "particle,label_kind,label_value";
    for (int c = 0; c < sys.dim(); ++c) out << ",x_" << c;
    out << "\n";
    for (int i = 0; i < sys.size(); ++i) {
        const AuxLabel& l = sys.label(i);
        out << i << ",";
        if (is_position(l))
            out << "position," << format_double(position_of(l));
        else if (is_prompt(l))
            out << "prompt," << prompt_of(l).index;
        else
            out << "none,0";
        for (int c = 0; c < sys.dim(); ++c) out << "," << format_double(sys.state(i)[c]);
        out << "\n";
    }
    write_text_file(path, out.str());
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string string_checksum(const std::string& s) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(s.data(), s.size())));
    return buf;
}

std::string file_checksum(const std::filesystem::path& path) {
    return string_checksum(read_text_file(path));
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << contents;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace usaav
