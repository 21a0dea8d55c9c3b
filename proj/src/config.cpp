#include "sthdg/config.hpp"

#include <fstream>
#include <sstream>

#include "sthdg/errors.hpp"

namespace sthdg {

void RunConfig::validate() const {
    if (mesh_file.empty() && mesh_n < 1) throw ConfigError("config: mesh_n must be >= 1");
    if (ks < 1 || ks > 4) throw ConfigError("config: ks must lie in [1, 4]");
    if (kt < 0 || kt > 3) throw ConfigError("config: kt must lie in [0, 3]");
    if (N < 1) throw ConfigError("config: N must be >= 1");
    if (!(T > 0.0)) throw ConfigError("config: T must be positive");
    if (!(nu > 0.0)) throw ConfigError("config: nu must be positive");
    if (!(picard_tol > 0.0)) throw ConfigError("config: picard_tol must be positive");
    if (max_picard < 1) throw ConfigError("config: max_picard must be >= 1");
    if (levels < 1) throw ConfigError("config: levels must be >= 1");
    if (benchmark != "taylor-green" && benchmark != "stokes-steady" && benchmark != "zero")
        throw ConfigError("config: unknown benchmark '" + benchmark + "'");
}

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace

RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "mesh_n") cfg.mesh_n = std::stoi(val);
            else if (key == "mesh_file") cfg.mesh_file = val;
            else if (key == "ks") cfg.ks = std::stoi(val);
            else if (key == "kt") cfg.kt = std::stoi(val);
            else if (key == "N") cfg.N = std::stoi(val);
            else if (key == "T") cfg.T = std::stod(val);
            else if (key == "nu") cfg.nu = std::stod(val);
            else if (key == "alpha") cfg.alpha = std::stod(val);
            else if (key == "benchmark") cfg.benchmark = val;
            else if (key == "picard_tol") cfg.picard_tol = std::stod(val);
            else if (key == "max_picard") cfg.max_picard = std::stoi(val);
            else if (key == "static_condensation") cfg.static_condensation = (val == "1" || val == "true");
            else if (key == "out_dir") cfg.out_dir = val;
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "levels") cfg.levels = std::stoi(val);
            else throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw ConfigError("config line " + std::to_string(lineno) + ": bad value for '" + key + "'");
        } catch (const std::out_of_range&) {
            throw ConfigError("config line " + std::to_string(lineno) + ": value out of range for '" + key + "'");
        }
    }
    return cfg;
}

void emit_config(const RunConfig& cfg, std::ostream& out) {
    out.precision(17);
    out << "mesh_n = " << cfg.mesh_n << "\n";
    if (!cfg.mesh_file.empty()) out << "mesh_file = " << cfg.mesh_file << "\n";
    out << "ks = " << cfg.ks << "\n";
    out << "kt = " << cfg.kt << "\n";
    out << "N = " << cfg.N << "\n";
    out << "T = " << cfg.T << "\n";
    out << "nu = " << cfg.nu << "\n";
    out << "alpha = " << cfg.alpha << "\n";
    out << "benchmark = " << cfg.benchmark << "\n";
    out << "picard_tol = " << cfg.picard_tol << "\n";
    out << "max_picard = " << cfg.max_picard << "\n";
    out << "static_condensation = " << (cfg.static_condensation ? 1 : 0) << "\n";
    out << "out_dir = " << cfg.out_dir << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "levels = " << cfg.levels << "\n";
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_config: cannot open " + path);
    return parse_config(in);
}

void save_config(const RunConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("save_config: cannot open " + path);
    emit_config(cfg, out);
}

} // namespace sthdg
