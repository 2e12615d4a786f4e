#include "naap/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "naap/error.hpp"
#include "naap/rng.hpp"
#include "naap/scheme.hpp"

namespace naap::data {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string dtos(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string trim(std::string s) {
    const auto is_space = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && is_space(s.front())) s.erase(s.begin());
    while (!s.empty() && is_space(s.back())) s.pop_back();
    return s;
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

// Alias table for header matching. Canonical names always match themselves.
const std::map<std::string, std::string>& alias_table() {
    static const std::map<std::string, std::string> table = {
        {"name", "id"},
        {"architecture", "id"},
        {"arch", "id"},
        {"model", "id"},
        {"params", "num_params"},
        {"parameters", "num_params"},
        {"n_params", "num_params"},
        {"macs", "num_macs"},
        {"n_macs", "num_macs"},
        {"skip_connections", "num_skip_connections"},
        {"num_skips", "num_skip_connections"},
        {"lost_rf_layers", "num_lost_rf_layers"},
        {"num_lost_rf", "num_lost_rf_layers"},
        {"accuracy", "gt_accuracy"},
        {"final_accuracy", "gt_accuracy"},
        {"gt_acc", "gt_accuracy"},
        {"max_test_accuracy", "gt_accuracy"},
    };
    return table;
}

std::string canonical_name(std::string header) {
    header = lower(trim(std::move(header)));
    if (auto it = alias_table().find(header); it != alias_table().end()) return it->second;
    return header;
}

// Parses "epoch<k>_<field>" into (k, field index 0..2); returns false otherwise.
bool parse_epoch_column(const std::string& name, int& epoch, int& field) {
    if (name.rfind("epoch", 0) != 0) return false;
    std::size_t pos = 5;
    std::size_t digits_end = pos;
    while (digits_end < name.size() && std::isdigit(static_cast<unsigned char>(name[digits_end])))
        ++digits_end;
    if (digits_end == pos || digits_end >= name.size() || name[digits_end] != '_') return false;
    epoch = std::stoi(name.substr(pos, digits_end - pos));
    const std::string rest = name.substr(digits_end + 1);
    if (rest == "train_loss") field = 0;
    else if (rest == "train_acc" || rest == "train_accuracy") field = 1;
    else if (rest == "test_acc" || rest == "test_accuracy") field = 2;
    else return false;
    return true;
}

double parse_cell(const std::string& cell, int lineno, const std::string& column) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{} || res.ptr != end)
        throw ParseError("line " + std::to_string(lineno) + ", column '" + column +
                         "': not a number: '" + cell + "'");
    return value;
}

void check_range(double v, double lo, double hi, int lineno, const std::string& column) {
    if (std::isnan(v) || v < lo || v > hi)
        throw ValidationError("line " + std::to_string(lineno) + ", column '" + column +
                              "': value " + dtos(v) + " outside [" + dtos(lo) + ", " + dtos(hi) + "]");
}

const char* epoch_field_suffix(int field) {
    switch (field) {
        case 0: return "train_loss";
        case 1: return "train_acc";
        default: return "test_acc";
    }
}

std::string epoch_column_name(int epoch, int field) {
    return "epoch" + std::to_string(epoch) + "_" + epoch_field_suffix(field);
}

}  // namespace

bool Dataset::naap_layout() const {
    if (base_names.size() != scheme::kSchemeFeatureNames.size()) return false;
    for (std::size_t i = 0; i < base_names.size(); ++i)
        if (base_names[i] != scheme::kSchemeFeatureNames[i]) return false;
    return true;
}

ArchRecord record_at(const Dataset& dataset, Eigen::Index row) {
    if (row < 0 || row >= dataset.size()) throw std::out_of_range("record_at: row out of range");
    ArchRecord r;
    r.id = dataset.ids[static_cast<std::size_t>(row)];
    r.base.resize(static_cast<std::size_t>(dataset.base.cols()));
    for (Eigen::Index c = 0; c < dataset.base.cols(); ++c)
        r.base[static_cast<std::size_t>(c)] = dataset.base(row, c);
    r.epochs.resize(static_cast<std::size_t>(dataset.epoch_count));
    for (int e = 0; e < dataset.epoch_count; ++e) {
        r.epochs[static_cast<std::size_t>(e)] = {dataset.epochs(row, 3 * e),
                                                 dataset.epochs(row, 3 * e + 1),
                                                 dataset.epochs(row, 3 * e + 2)};
    }
    r.gt_accuracy = dataset.gt(row);
    return r;
}

SplitKind split_kind_from_string(std::string_view name) {
    if (name == "uniform") return SplitKind::uniform;
    if (name == "left") return SplitKind::left;
    if (name == "right") return SplitKind::right;
    if (name == "dual") return SplitKind::dual;
    throw std::invalid_argument("unknown split kind: " + std::string(name));
}

std::string to_string(SplitKind kind) {
    switch (kind) {
        case SplitKind::uniform: return "uniform";
        case SplitKind::left: return "left";
        case SplitKind::right: return "right";
        case SplitKind::dual: return "dual";
    }
    return "?";
}

TargetFn target_fn_from_string(std::string_view name) {
    if (name == "linear") return TargetFn::linear;
    if (name == "quadratic") return TargetFn::quadratic;
    if (name == "sigmoid") return TargetFn::sigmoid;
    throw std::invalid_argument("unknown target function: " + std::string(name));
}

std::string to_string(TargetFn fn) {
    switch (fn) {
        case TargetFn::linear: return "linear";
        case TargetFn::quadratic: return "quadratic";
        case TargetFn::sigmoid: return "sigmoid";
    }
    return "?";
}

Dataset load_csv(const std::filesystem::path& path, SchemaMode mode) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file: " + path.string());

    std::string header_line;
    if (!std::getline(in, header_line))
        throw ParseError(path.string() + ": empty file, header row required");

    const std::vector<std::string> raw_header = split_fields(header_line);
    std::vector<std::string> header(raw_header.size());
    for (std::size_t i = 0; i < raw_header.size(); ++i) header[i] = canonical_name(raw_header[i]);

    int id_col = -1, gt_col = -1;
    std::map<std::pair<int, int>, int> epoch_cols;  // (epoch, field) -> column
    std::vector<std::pair<std::string, int>> base_cols;  // (name, column), header order
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& name = header[c];
        if (name == "id") {
            if (id_col >= 0) throw ParseError(path.string() + ": duplicate id column");
            id_col = static_cast<int>(c);
        } else if (name == "gt_accuracy") {
            if (gt_col >= 0) throw ParseError(path.string() + ": duplicate gt_accuracy column");
            gt_col = static_cast<int>(c);
        } else if (int epoch = 0, field = 0; parse_epoch_column(name, epoch, field)) {
            if (!epoch_cols.emplace(std::make_pair(epoch, field), static_cast<int>(c)).second)
                throw ParseError(path.string() + ": duplicate column '" + name + "'");
        } else {
            base_cols.emplace_back(name, static_cast<int>(c));
        }
    }
    if (gt_col < 0) throw ParseError(path.string() + ": missing column 'gt_accuracy'");

    int epoch_count = 0;
    for (const auto& [key, col] : epoch_cols) epoch_count = std::max(epoch_count, key.first);
    for (int e = 1; e <= epoch_count; ++e)
        for (int f = 0; f < 3; ++f)
            if (!epoch_cols.contains({e, f}))
                throw ParseError(path.string() + ": missing column '" + epoch_column_name(e, f) +
                                 "' (epoch triples must be complete)");

    if (mode == SchemaMode::naap440e) {
        if (id_col < 0) throw ParseError(path.string() + ": missing column 'id'");
        std::vector<std::string> have;
        have.reserve(base_cols.size());
        for (const auto& [name, col] : base_cols) have.push_back(name);
        const bool missing_new =
            std::find(have.begin(), have.end(), "num_skip_connections") == have.end() ||
            std::find(have.begin(), have.end(), "num_lost_rf_layers") == have.end();
        for (const char* name : scheme::kSchemeFeatureNames) {
            if (std::find(have.begin(), have.end(), name) == have.end()) {
                if (missing_new)
                    throw ValidationError(path.string() + ": missing column '" + name +
                                          "'; this looks like an original 6-feature table, run "
                                          "`naap extend` to derive the two new scheme columns");
                throw ParseError(path.string() + ": missing column '" + std::string(name) + "'");
            }
        }
        if (have.size() != scheme::kSchemeFeatureNames.size())
            for (const std::string& name : have)
                if (std::find(scheme::kSchemeFeatureNames.begin(), scheme::kSchemeFeatureNames.end(),
                              name) == scheme::kSchemeFeatureNames.end())
                    throw ParseError(path.string() + ": unexpected column '" + name + "'");
        if (epoch_count < kMaxEpochs)
            throw ParseError(path.string() + ": expected " + std::to_string(kMaxEpochs) +
                             " epoch triples, found " + std::to_string(epoch_count));
        // Canonical internal order regardless of header order.
        std::vector<std::pair<std::string, int>> ordered;
        for (const char* name : scheme::kSchemeFeatureNames)
            for (const auto& bc : base_cols)
                if (bc.first == name) ordered.push_back(bc);
        base_cols = std::move(ordered);
    }

    std::vector<std::vector<std::string>> rows;
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::vector<std::string> fields = split_fields(line);
        if (fields.size() != header.size())
            throw ParseError("line " + std::to_string(lineno) + ": expected " +
                             std::to_string(header.size()) + " fields, found " +
                             std::to_string(fields.size()));
        rows.push_back(std::move(fields));
    }

    const auto n = static_cast<Eigen::Index>(rows.size());
    Dataset ds;
    ds.ids.resize(rows.size());
    ds.base.resize(n, static_cast<Eigen::Index>(base_cols.size()));
    ds.base_names.reserve(base_cols.size());
    for (const auto& [name, col] : base_cols) ds.base_names.push_back(name);
    ds.epochs.resize(n, 3 * epoch_count);
    ds.epoch_count = epoch_count;
    ds.gt.resize(n);

    for (Eigen::Index i = 0; i < n; ++i) {
        const std::vector<std::string>& fields = rows[static_cast<std::size_t>(i)];
        const int msg_line = static_cast<int>(i) + 2;  // header is line 1

        ds.ids[static_cast<std::size_t>(i)] =
            id_col >= 0 ? fields[static_cast<std::size_t>(id_col)] : std::to_string(i);

        for (std::size_t b = 0; b < base_cols.size(); ++b) {
            const auto& [name, col] = base_cols[b];
            ds.base(i, static_cast<Eigen::Index>(b)) =
                parse_cell(fields[static_cast<std::size_t>(col)], msg_line, name);
        }
        for (int e = 1; e <= epoch_count; ++e) {
            for (int f = 0; f < 3; ++f) {
                const int col = epoch_cols.at({e, f});
                const std::string name = epoch_column_name(e, f);
                const double v = parse_cell(fields[static_cast<std::size_t>(col)], msg_line, name);
                if (f == 0)
                    check_range(v, 0.0, std::numeric_limits<double>::infinity(), msg_line, name);
                else
                    check_range(v, 0.0, 1.0, msg_line, name);
                ds.epochs(i, 3 * (e - 1) + f) = v;
            }
        }
        const double gt = parse_cell(fields[static_cast<std::size_t>(gt_col)], msg_line, "gt_accuracy");
        check_range(gt, 0.0, 1.0, msg_line, "gt_accuracy");
        ds.gt(i) = gt;
    }
    return ds;
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset file: " + path.string());

    out << "id";
    for (const std::string& name : dataset.base_names) out << ',' << name;
    for (int e = 1; e <= dataset.epoch_count; ++e)
        for (int f = 0; f < 3; ++f) out << ',' << epoch_column_name(e, f);
    out << ",gt_accuracy\n";

    for (Eigen::Index i = 0; i < dataset.size(); ++i) {
        out << dataset.ids[static_cast<std::size_t>(i)];
        for (Eigen::Index c = 0; c < dataset.base.cols(); ++c) out << ',' << dtos(dataset.base(i, c));
        for (Eigen::Index c = 0; c < dataset.epochs.cols(); ++c)
            out << ',' << dtos(dataset.epochs(i, c));
        out << ',' << dtos(dataset.gt(i)) << '\n';
    }
    if (!out) throw IoError("failed while writing: " + path.string());
}

std::vector<std::string> naap_feature_names(int level) {
    std::vector<std::string> names(scheme::kSchemeFeatureNames.begin(),
                                   scheme::kSchemeFeatureNames.end());
    for (int e = 1; e <= level; ++e)
        for (int f = 0; f < 3; ++f) names.push_back(epoch_column_name(e, f));
    return names;
}

FeatureMatrix feature_matrix(const Dataset& dataset, int level) {
    if (level < 0) throw std::invalid_argument("level must be nonnegative");
    if (level > dataset.epoch_count)
        throw ValidationError("records have " + std::to_string(dataset.epoch_count) +
                              " epochs, level " + std::to_string(level) + " requested");
    const Eigen::Index n = dataset.size();
    const Eigen::Index b = dataset.base.cols();
    FeatureMatrix fm;
    fm.X.resize(n, b + 3 * level);
    fm.X.leftCols(b) = dataset.base;
    if (level > 0) fm.X.rightCols(3 * level) = dataset.epochs.leftCols(3 * level);
    fm.y = dataset.gt;
    fm.names = dataset.base_names;
    for (int e = 1; e <= level; ++e)
        for (int f = 0; f < 3; ++f) fm.names.push_back(epoch_column_name(e, f));
    return fm;
}

std::vector<std::vector<int>> bin_by_accuracy(const Dataset& dataset, int n_bins) {
    if (n_bins < 1) throw std::invalid_argument("n_bins must be >= 1");
    const auto n = static_cast<int>(dataset.size());
    if (n == 0 || n % n_bins != 0)
        throw ValidationError("record count " + std::to_string(n) + " is not divisible into " +
                              std::to_string(n_bins) + " equal bins");
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (dataset.gt(a) != dataset.gt(b)) return dataset.gt(a) < dataset.gt(b);
        return a < b;
    });
    const int bin_size = n / n_bins;
    std::vector<std::vector<int>> bins(static_cast<std::size_t>(n_bins));
    for (int b = 0; b < n_bins; ++b)
        bins[static_cast<std::size_t>(b)].assign(idx.begin() + b * bin_size,
                                                 idx.begin() + (b + 1) * bin_size);
    return bins;
}

namespace {

void append_bin_train(const std::vector<int>& bin, std::vector<int>& out) {
    const std::size_t median = (bin.size() - 1) / 2;
    for (std::size_t i = 0; i < bin.size(); ++i)
        if (i != median) out.push_back(bin[i]);
}

void check_odd_bins(const std::vector<std::vector<int>>& bins) {
    if (bins.empty()) throw std::invalid_argument("no bins");
    for (std::size_t b = 0; b < bins.size(); ++b)
        if (bins[b].empty() || bins[b].size() % 2 == 0)
            throw ValidationError("bin " + std::to_string(b + 1) + " has even size " +
                                  std::to_string(bins[b].size()) +
                                  "; the center sample is undefined");
}

}  // namespace

Split uniform_split(const std::vector<std::vector<int>>& bins) {
    check_odd_bins(bins);
    Split split;
    split.kind = SplitKind::uniform;
    for (const std::vector<int>& bin : bins) {
        append_bin_train(bin, split.train_idx);
        split.test_idx.push_back(bin[(bin.size() - 1) / 2]);
    }
    return split;
}

Split extrapolation_split(const std::vector<std::vector<int>>& bins, SplitKind kind,
                          bool strict) {
    if (kind == SplitKind::uniform)
        throw std::invalid_argument("extrapolation_split handles left/right/dual only");
    check_odd_bins(bins);
    const auto n_bins = static_cast<int>(bins.size());
    if (strict && n_bins != kBinCount)
        throw ValidationError("expected " + std::to_string(kBinCount) + " bins, found " +
                              std::to_string(n_bins) + " (strict mode)");

    int train_lo = 0, train_hi = 0;  // half-open bin ranges
    if (kind == SplitKind::left) {
        if (n_bins % 2 != 0) throw ValidationError("left split requires an even bin count");
        train_lo = n_bins / 2;
        train_hi = n_bins;
    } else if (kind == SplitKind::right) {
        if (n_bins % 2 != 0) throw ValidationError("right split requires an even bin count");
        train_lo = 0;
        train_hi = n_bins / 2;
    } else {
        if (n_bins % 4 != 0) throw ValidationError("dual split requires a bin count divisible by 4");
        train_lo = n_bins / 4;
        train_hi = 3 * n_bins / 4;
    }

    Split split;
    split.kind = kind;
    for (int b = 0; b < n_bins; ++b) {
        const std::vector<int>& bin = bins[static_cast<std::size_t>(b)];
        if (b >= train_lo && b < train_hi)
            append_bin_train(bin, split.train_idx);
        else
            split.test_idx.push_back(bin[(bin.size() - 1) / 2]);
    }
    return split;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    if (spec.n_informative < 0 || spec.n_distractor < 0)
        throw std::invalid_argument("column counts must be nonnegative");
    const int n_cols = spec.n_informative + spec.n_distractor;
    if (n_cols < 1) throw std::invalid_argument("need at least one feature column");
    if (spec.n_epochs < 0 || spec.n_epochs > kMaxEpochs)
        throw std::invalid_argument("n_epochs must lie in [0, 9]");
    if (spec.naap_names && n_cols != 8)
        throw std::invalid_argument("canonical scheme names require exactly 8 base columns");

    Rng rng(spec.seed);
    std::vector<double> weights(static_cast<std::size_t>(spec.n_informative));
    double weight_sum = 0.0;
    for (double& w : weights) {
        w = 0.5 + rng.uniform();
        weight_sum += w;
    }

    const auto n = static_cast<Eigen::Index>(spec.n_samples);
    Dataset ds;
    ds.base.resize(n, n_cols);
    ds.epochs.resize(n, 3 * spec.n_epochs);
    ds.epoch_count = spec.n_epochs;
    ds.gt.resize(n);
    ds.ids.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < spec.n_informative; ++j) ds.informative.push_back(j);

    for (Eigen::Index i = 0; i < n; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "s%05lld", static_cast<long long>(i));
        ds.ids[static_cast<std::size_t>(i)] = id;

        for (int j = 0; j < n_cols; ++j) ds.base(i, j) = rng.uniform();

        double raw = 0.0;
        for (int j = 0; j < spec.n_informative; ++j)
            raw += weights[static_cast<std::size_t>(j)] * ds.base(i, j);
        if (spec.n_informative > 0) raw /= weight_sum;

        double shaped = raw;
        if (spec.target_fn == TargetFn::quadratic) shaped = raw * raw;
        else if (spec.target_fn == TargetFn::sigmoid) shaped = 1.0 / (1.0 + std::exp(-6.0 * (raw - 0.5)));

        const double y = std::clamp(0.1 + 0.8 * shaped + spec.noise_sd * rng.normal(), 0.0, 1.0);
        ds.gt(i) = y;

        for (int e = 1; e <= spec.n_epochs; ++e) {
            const double progress = 1.0 - std::exp(-static_cast<double>(e) / 2.5);
            const double loss =
                std::max(0.0, 1.5 - 1.2 * y * progress + spec.noise_sd * rng.normal());
            const double train_acc =
                std::clamp(1.05 * y * progress + spec.noise_sd * rng.normal(), 0.0, 1.0);
            const double test_acc =
                std::clamp(y * progress + spec.noise_sd * rng.normal(), 0.0, 1.0);
            ds.epochs(i, 3 * (e - 1) + 0) = loss;
            ds.epochs(i, 3 * (e - 1) + 1) = train_acc;
            ds.epochs(i, 3 * (e - 1) + 2) = test_acc;
        }
    }

    if (spec.naap_names) {
        ds.base_names.assign(scheme::kSchemeFeatureNames.begin(), scheme::kSchemeFeatureNames.end());
    } else {
        for (int j = 0; j < n_cols; ++j) ds.base_names.push_back("x" + std::to_string(j));
    }
    return ds;
}

std::string split_to_json(const Split& split) {
    ordered_json doc;
    doc["kind"] = to_string(split.kind);
    doc["train"] = split.train_idx;
    doc["test"] = split.test_idx;
    return doc.dump();
}

Split split_from_json(std::string_view text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("split document: ") + e.what());
    }
    if (!doc.contains("kind") || !doc.contains("train") || !doc.contains("test"))
        throw ParseError("split document: fields kind/train/test are required");
    Split split;
    split.kind = split_kind_from_string(doc["kind"].get<std::string>());
    split.train_idx = doc["train"].get<std::vector<int>>();
    split.test_idx = doc["test"].get<std::vector<int>>();
    return split;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, const std::vector<int>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
    return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& v, const std::vector<int>& rows) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(rows[i]);
    return out;
}

}  // namespace naap::data
