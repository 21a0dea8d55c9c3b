#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace sthdg {

/// Plain-text run configuration: one "key = value" per line, '#' comments.
struct RunConfig {
    int mesh_n = 8;            // builtin crisscross subdivisions (ignored with mesh_file)
    std::string mesh_file;     // optional ASCII mesh path
    int ks = 2;
    int kt = 1;
    int N = 8;                 // time slabs
    double T = 0.5;
    double nu = 0.01;
    double alpha = -1.0;       // negative selects the default 8 ks^2
    std::string benchmark = "taylor-green";
    double picard_tol = 1e-10;
    int max_picard = 50;
    bool static_condensation = false;
    std::string out_dir = "out";
    uint64_t seed = 1;
    int levels = 3;

    void validate() const;  // throws ConfigError on violations
};

RunConfig parse_config(std::istream& in);
void emit_config(const RunConfig& cfg, std::ostream& out);

RunConfig load_config(const std::string& path);
void save_config(const RunConfig& cfg, const std::string& path);

} // namespace sthdg
