// Experiment runner and I/O: JSON experiment descriptions, seeded grid
// execution (optionally parallel), deterministic CSV tables with a JSON
// provenance sidecar, SVG previews, and feature-matrix ingestion.
#pragma once

#include "projhead/numerics.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace projhead {

inline constexpr const char* kSoftwareVersion = "0.1.0";

enum class ExperimentKind { PhaseHeatmap, EtaSweep, CgmtTable, InhomoCurve, LowdimLogistic, ProjectorDiagnostics };

std::string to_string(ExperimentKind k);           // snake_case tag, also the output file stem
ExperimentKind experiment_kind_from(std::string_view name);  // accepts tag or CLI spelling

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::PhaseHeatmap;
    // Every parameter is a list; single values act as fixed settings.
    std::map<std::string, std::vector<double>> grid;
    std::vector<std::uint64_t> seeds{0};
    std::string output_dir = "out";
    // Free-form string settings (feature file path, label column, ...).
    std::map<std::string, std::string> options;

    // Deterministic text used for hashing (independent of output_dir).
    std::string canonical() const;
    std::string hash() const;
};

// Default grid for a kind, matching the synthetic experiments it reproduces.
ExperimentSpec default_spec(ExperimentKind kind);

// Parses JSON text, validating parameter names against the kind's schema
// and filling unspecified parameters from default_spec. Throws ParseError.
ExperimentSpec parse_experiment_spec(std::string_view json_text, std::optional<ExperimentKind> expected = std::nullopt);
ExperimentSpec load_experiment_spec(const std::string& path, std::optional<ExperimentKind> expected = std::nullopt);

using Cell = std::variant<double, std::int64_t, std::string>;

struct Provenance {
    std::string spec_hash;
    std::string seeds;
    std::string version = kSoftwareVersion;
    std::string timestamp;  // excluded from determinism comparisons
};

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    Provenance provenance;
    int flagged_cells = 0;

    std::size_t column_index(const std::string& name) const;
    std::vector<double> numbers(const std::string& column) const;
    std::vector<std::string> texts(const std::string& column) const;
    void write_csv(std::ostream& os) const;
    std::string to_csv() const;
};

struct RunOptions {
    int jobs = 1;
};

ResultTable run_phase_heatmap(const ExperimentSpec& spec, const RunOptions& opt = {});
ResultTable run_eta_sweep(const ExperimentSpec& spec, const RunOptions& opt = {});
ResultTable run_cgmt_table(const ExperimentSpec& spec, const RunOptions& opt = {});
ResultTable run_inhomo_curve(const ExperimentSpec& spec, const RunOptions& opt = {});
ResultTable run_lowdim_logistic(const ExperimentSpec& spec, const RunOptions& opt = {});
ResultTable run_projector_diagnostics(const ExperimentSpec& spec, const RunOptions& opt = {});
ResultTable run_experiment(const ExperimentSpec& spec, const RunOptions& opt = {});

// Writes <dir>/<kind>.csv and <dir>/<kind>.meta.json (and <kind>.svg when
// requested). Returns the CSV path.
std::string write_outputs(const ResultTable& table, const ExperimentSpec& spec, const std::string& dir, bool plot);

// Labeled feature matrix read from CSV.
struct FeatureTable {
    Mat features;   // n x p
    Vec labels;     // +-1
    std::vector<std::string> feature_names;
    std::string negative_label;  // raw value mapped to -1
    std::string positive_label;  // raw value mapped to +1
};

// Reads a CSV with a header row. Exactly two distinct label values are
// required; numeric labels map the smaller to -1, text labels map the
// lexicographically smaller to -1.
FeatureTable ingest_features(const std::string& path, const std::string& label_column);
void write_features_csv(const std::string& path, const Mat& features, const Vec& labels,
                        const std::string& label_column = "label");

}  // namespace projhead
