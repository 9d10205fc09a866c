#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dream/harness.hpp"

namespace dream {

inline constexpr const char* kArtifactVersion = "1.0.0";

// Floats print with 17 significant digits so CSV values round-trip exactly.
std::string fmt_double(double v);

// Writes via a temp file in the same directory plus rename.
void atomic_write_file(const std::string& path, const std::string& content);

std::uint64_t fnv1a64(const std::string& s);

// Flat key=value view of a config; ordering is fixed so the hash and the
// manifest echo are stable.
std::vector<std::pair<std::string, std::string>> config_to_kv(const ExperimentConfig& c);
ExperimentConfig config_from_kv(const std::vector<std::pair<std::string, std::string>>& kv);
std::string config_hash(const ExperimentConfig& c);

// key=value lines, '#' comments. Unknown keys are an error naming the key.
std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path);

struct ValueCsvRow {
    std::string run_id;
    std::string algorithm;
    long t = 0;
    ValueReport report;
};

std::string values_csv_header();
std::string value_csv_line(const ValueCsvRow& row);
void write_values_csv(const std::string& path, const std::vector<ValueCsvRow>& rows);

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows,
                       bool with_p_column);

void write_trace_csv(const std::string& path, const TrajectoryResult& result);

struct LoadedTrace {
    std::vector<InteractionRecord> records;
    double sigma2_res0 = 1.0;
    double sigma2_res1 = 1.0;
    bool has_propensity = false;
    bool has_final_mu = false;
};

LoadedTrace load_trace_csv(const std::string& path);

struct RunManifest {
    std::string artifact_version = kArtifactVersion;
    std::uint64_t base_seed = 0;
    std::string started_utc;
    std::string finished_utc;
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<std::string> outputs;
};

void write_manifest(const std::string& path, const RunManifest& m);

std::string utc_timestamp();

} // namespace dream
