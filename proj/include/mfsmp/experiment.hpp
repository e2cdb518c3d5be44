#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfsmp/adjoint.hpp"
#include "mfsmp/model.hpp"

namespace mfsmp {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kLibraryVersion = "0.1.0";

enum class ConfigErrorCode { parse_error, schema_error, unknown_experiment, model_error, io_error };

const char* to_string(ConfigErrorCode code);

class ConfigError : public std::runtime_error {
public:
    ConfigError(ConfigErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}
    ConfigErrorCode code() const { return code_; }

private:
    ConfigErrorCode code_;
};

struct ControlConfig {
    std::string kind = "constant";  // constant | piecewise | optimum
    double value = 0.0;
    std::vector<double> values;
    int iterations = 200;
};

struct ExperimentConfig {
    std::string experiment;
    std::string model_name;
    std::map<std::string, double> params;
    std::optional<std::vector<Atom>> jumps;
    double s = 0.0;
    double T = 1.0;
    int steps = 100;
    int particles = 1000;
    std::vector<std::uint64_t> seeds = {42};
    double t0 = 0.0;
    std::vector<double> eps_ladder;
    double u_spike = 0.0;
    int u_mesh = 41;
    std::optional<double> tolerance;
    std::string output_dir = "mfs_output";
    ControlConfig control;
    AdjointMethod adjoint_method = AdjointMethod::regression;
    bool source_times_x1 = true;
    int k = 1;
    bool refine = false;
    ModelSpec model;

    // Normalized config with every default filled in.
    nlohmann::json echo() const;
};

struct ConfigOverrides {
    std::optional<std::string> output_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> particles;
    std::optional<int> steps;
};

ExperimentConfig parse_config(const nlohmann::json& raw, const ConfigOverrides& overrides = {});
ExperimentConfig parse_config_text(const std::string& text, const ConfigOverrides& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

struct CsvTable {
    std::string name;  // file name without extension
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

struct ReportSection {
    std::string name;
    bool asserted = true;
    bool pass = false;
    std::string error;
    nlohmann::json payload;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<ReportSection> sections;
    std::vector<CsvTable> tables;
    double wall_clock_seconds = 0.0;

    bool pass() const;
    // Deterministic payload (no wall-clock).
    nlohmann::json to_json() const;
};

ExperimentReport run_experiment(const ExperimentConfig& config);

struct ManifestEntry {
    std::string name;
    std::string sha256;
    std::uintmax_t bytes = 0;
};

// Writes report.json, one CSV per table, manifest.json and timing.json.
std::vector<ManifestEntry> write_report(const ExperimentReport& report, const std::filesystem::path& output_dir);

std::string sha256_hex(const std::string& data);
std::string format_number(double v);

}  // namespace mfsmp
