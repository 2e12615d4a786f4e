#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "naap/dataset.hpp"
#include "naap/featsel.hpp"
#include "naap/metrics.hpp"
#include "naap/regressors.hpp"

namespace naap::harness {

struct RunConfig {
    std::filesystem::path dataset_path;  // recorded in the manifest
    data::SplitKind split_kind = data::SplitKind::uniform;
    std::vector<int> levels = {0, 3, 6, 9};
    /// Explicit regressors; empty selects the command's default grid.
    std::vector<regress::RegressorSpec> specs;
    bool featsel_on = false;
    featsel::SearchConfig search;
    std::filesystem::path out_dir;
    std::uint64_t seed = 0;
    int jobs = 1;
    bool standardize = true;
    std::string format = "all";  // md, csv, json, all
    bool force_trees = false;    // allow tree families on extrapolation splits
    bool scatter = false;        // emit per-cell scatter files
};

struct ReportRow {
    std::string algorithm;
    int level = 0;
    bool featsel = false;
    bool placeholder = false;  // out-of-scope table rows, rendered as n/a
    metrics::EvalResult result;
    std::string mask;  // selected subset when featsel is on
    int n_features = 0;
    // Populated when RunConfig::scatter is set.
    std::vector<double> test_gt;
    std::vector<double> predictions;
};

struct RunReport {
    std::string command;
    std::string title;
    data::SplitKind kind = data::SplitKind::uniform;
    std::vector<int> levels;
    std::uint64_t seed = 0;
    metrics::CostVariant cost_variant = metrics::CostVariant::sqrt_rounded;
    std::vector<ReportRow> rows;
    std::vector<featsel::SearchTrace> traces;
    data::Split split;
    std::vector<std::string> feature_names;  // at the highest level run
};

/// Uniform-split evaluation of every (spec, level) cell; with featsel on,
/// each cell searches feature subsets and reports the best one.
RunReport run_baseline(const data::Dataset& dataset, const RunConfig& config);

/// Paired featsel-off/featsel-on rows for the selected-algorithm grid.
RunReport run_ablation(const data::Dataset& dataset, const RunConfig& config);

/// Left/right/dual split evaluation; defaults to the linear variants since
/// tree families cannot predict outside their training target range (pass
/// force_trees to run them anyway).
RunReport run_extrapolation(const data::Dataset& dataset, const RunConfig& config);

/// One hill-climbing search cell, used by the `featsel` subcommand.
featsel::SearchTrace run_featsel_cell(const data::Dataset& dataset, const RunConfig& config,
                                      const regress::RegressorSpec& spec, int level);

/// The published 40-bin split of the given kind (strict mode).
data::Split make_paper_split(const data::Dataset& dataset, data::SplitKind kind);

/// Writes report.{md,csv,json} (per config.format), split.json, featsel
/// traces, importance.csv, optional scatter files, and a manifest with
/// SHA-256 artifact hashes. Returns the written paths (manifest last).
std::vector<std::filesystem::path> write_report(const RunReport& report, const RunConfig& config);

/// (gt, prediction) pairs as CSV with "# key=value" metadata lines, plus an
/// optional minimal SVG scatter with the y=x reference line.
void emit_scatter(std::span<const double> gt, std::span<const double> pred,
                  const std::filesystem::path& csv_path,
                  const std::vector<std::pair<std::string, std::string>>& metadata,
                  bool write_svg);

/// Per-feature selection rates pooled two ways: per (algorithm, level) and
/// per algorithm across levels; both are labeled in the CSV.
void emit_importance(std::span<const featsel::SearchTrace> traces,
                     const std::vector<std::string>& feature_names,
                     const std::filesystem::path& csv_path);

struct ExtendStats {
    int rows = 0;
    int params_mismatches = 0;
    int macs_mismatches = 0;
};

/// Reads a schemes JSONL file plus an original 6-feature CSV and writes the
/// extended CSV with num_skip_connections / num_lost_rf_layers appended to
/// the scheme block. CSV params/MACs are kept; derived values only feed a
/// warning-level cross-check.
ExtendStats extend_csv(const std::filesystem::path& schemes_path,
                       const std::filesystem::path& csv_path,
                       const std::filesystem::path& out_path);

std::string sha256_file(const std::filesystem::path& path);

/// Acceleration label for a level, e.g. 3 -> "96.7".
std::string acceleration_label(int level);

}  // namespace naap::harness
