#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace naap::data {

inline constexpr int kMaxEpochs = 9;
inline constexpr int kBinCount = 40;

struct EpochMetrics {
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
};

/// Immutable tabular dataset. The NAAP-440e layout has the 8 canonical scheme
/// columns as `base` and 9 epoch triples; synthetic datasets may carry any
/// number of base columns and zero or more epoch triples.
struct Dataset {
    std::vector<std::string> ids;
    Eigen::MatrixXd base;  // N x B
    std::vector<std::string> base_names;
    Eigen::MatrixXd epochs;  // N x 3E, per epoch: train_loss, train_acc, test_acc
    int epoch_count = 0;
    Eigen::VectorXd gt;  // final accuracy, in [0, 1]
    std::vector<int> informative;  // synthetic ground truth; empty otherwise

    Eigen::Index size() const { return gt.size(); }
    /// True when the base columns are exactly the 8 canonical scheme features.
    bool naap_layout() const;
};

/// Row view assembled on demand.
struct ArchRecord {
    std::string id;
    std::vector<double> base;
    std::vector<EpochMetrics> epochs;
    double gt_accuracy = 0.0;
};

ArchRecord record_at(const Dataset& dataset, Eigen::Index row);

enum class SplitKind { uniform, left, right, dual };
SplitKind split_kind_from_string(std::string_view name);
std::string to_string(SplitKind kind);

struct Split {
    std::vector<int> train_idx;
    std::vector<int> test_idx;
    SplitKind kind = SplitKind::uniform;
};

enum class SchemaMode { naap440e, generic };

/// Loads a CSV with a required header row. naap440e mode requires the full
/// extended schema (id, 8 scheme columns, 9 epoch triples, gt_accuracy);
/// generic mode accepts any numeric base columns plus optional epoch triples.
/// Column names are matched case-insensitively through a small alias table.
Dataset load_csv(const std::filesystem::path& path, SchemaMode mode = SchemaMode::naap440e);

void save_csv(const Dataset& dataset, const std::filesystem::path& path);

struct FeatureMatrix {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<std::string> names;
};

/// Base features plus the first `level` epoch triples, in canonical order.
FeatureMatrix feature_matrix(const Dataset& dataset, int level);

/// Canonical column names for the NAAP layout at an acceleration level.
std::vector<std::string> naap_feature_names(int level);

/// Sorts records ascending by (gt_accuracy, row index) and partitions them
/// into n_bins consecutive equal bins, lowest accuracies first. The record
/// count must be divisible by n_bins.
std::vector<std::vector<int>> bin_by_accuracy(const Dataset& dataset, int n_bins = kBinCount);

/// Per bin, the median-position sample goes to the test set, the rest to the
/// training set. Bins must have odd size.
Split uniform_split(const std::vector<std::vector<int>>& bins);

/// Extrapolation splits reuse the uniform per-bin assignment:
///   left:  train from the upper half of bins, test from the lower half;
///   right: the mirror image;
///   dual:  train from the central half, test from both outer quarters.
/// strict mode requires exactly 40 bins (the published configuration).
Split extrapolation_split(const std::vector<std::vector<int>>& bins, SplitKind kind,
                          bool strict = true);

enum class TargetFn { linear, quadratic, sigmoid };
TargetFn target_fn_from_string(std::string_view name);
std::string to_string(TargetFn fn);

struct SyntheticSpec {
    int n_samples = 0;
    int n_informative = 0;
    int n_distractor = 0;
    TargetFn target_fn = TargetFn::linear;
    double noise_sd = 0.0;
    std::uint64_t seed = 0;
    /// When > 0, epoch triples correlated with the target are generated so the
    /// dataset can drive the full harness. 0 keeps the dataset base-only.
    int n_epochs = 0;
    /// Name base columns with the canonical scheme headers (requires exactly
    /// 8 base columns) so the CSV loads under the naap440e schema.
    bool naap_names = false;
};

/// Deterministic synthetic dataset: informative columns drive the target
/// through target_fn, distractor columns are independent noise, targets are
/// clamped to [0, 1], and `informative` records the driving columns.
Dataset generate_synthetic(const SyntheticSpec& spec);

std::string split_to_json(const Split& split);
Split split_from_json(std::string_view text);

/// Row/column gathers used when assembling train/test matrices.
Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, const std::vector<int>& rows);
Eigen::VectorXd take_rows(const Eigen::VectorXd& v, const std::vector<int>& rows);

}  // namespace naap::data
