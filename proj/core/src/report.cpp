#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "naap/error.hpp"
#include "naap/harness.hpp"

namespace naap::harness {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string dtos(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::string slug(const std::string& label) {
    std::string out;
    for (char c : label) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u) || c == '.') out += static_cast<char>(std::tolower(u));
        else if (!out.empty() && out.back() != '-') out += '-';
    }
    while (!out.empty() && out.back() == '-') out.pop_back();
    return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write: " + path.string());
    return out;
}

std::string level_header(int level) {
    return acceleration_label(level) + "% acceleration (" + std::to_string(level) + " epochs)";
}

void write_markdown(const RunReport& report, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << "# " << report.title << "\n\n";
    out << "Split: " << data::to_string(report.kind) << " ("
        << report.split.train_idx.size() << " train / " << report.split.test_idx.size()
        << " test). Seed: " << report.seed
        << ". Cost: " << metrics::to_string(report.cost_variant) << ".\n";
    out << "Cells report MAE / Monotonicity Score / #Monotonicity Violations.\n\n";

    // Row groups keyed by (algorithm, featsel), first-appearance order.
    std::vector<std::pair<std::string, bool>> groups;
    std::map<std::pair<std::string, bool>, std::map<int, const ReportRow*>> cells;
    bool any_pair = false;
    for (const ReportRow& row : report.rows) {
        const std::pair<std::string, bool> key{row.algorithm, row.featsel};
        if (!cells.contains(key)) groups.push_back(key);
        cells[key][row.level] = &row;
    }
    std::set<std::string> with_both;
    for (const auto& [algo, fs] : groups)
        if (fs && cells.contains({algo, false})) with_both.insert(algo);
    any_pair = !with_both.empty();

    out << "| Algorithm |";
    for (int level : report.levels) out << ' ' << level_header(level) << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < report.levels.size(); ++i) out << "---|";
    out << "\n";
    for (const auto& key : groups) {
        const auto& [algo, fs] = key;
        std::string name = algo;
        if (any_pair && with_both.contains(algo))
            name += fs ? " — selected subset" : " — all features";
        out << "| " << name << " |";
        for (int level : report.levels) {
            const auto it = cells[key].find(level);
            if (it == cells[key].end()) {
                out << " |";
            } else if (it->second->placeholder) {
                out << " n/a (out of scope) |";
            } else {
                out << ' ' << metrics::format_row(it->second->result) << " |";
            }
        }
        out << "\n";
    }
}

void write_csv(const RunReport& report, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << "algorithm,level,featsel,n_features,mae,monotonicity,violations,n_test,cost,mask\n";
    for (const ReportRow& row : report.rows) {
        if (row.placeholder) continue;
        out << row.algorithm << ',' << row.level << ',' << (row.featsel ? 1 : 0) << ','
            << row.n_features << ',' << dtos(row.result.mae) << ',' << dtos(row.result.monotonicity)
            << ',' << row.result.violations << ',' << row.result.n_test << ','
            << dtos(row.result.cost) << ',' << row.mask << '\n';
    }
}

ordered_json row_to_json(const ReportRow& row) {
    ordered_json j;
    j["algorithm"] = row.algorithm;
    j["level"] = row.level;
    j["featsel"] = row.featsel;
    if (row.placeholder) {
        j["placeholder"] = "n/a (out of scope)";
        return j;
    }
    j["n_features"] = row.n_features;
    j["mae"] = row.result.mae;
    j["violations"] = row.result.violations;
    j["n_test"] = row.result.n_test;
    j["monotonicity"] = row.result.monotonicity;
    j["cost"] = row.result.cost;
    j["cell"] = metrics::format_row(row.result);
    if (!row.mask.empty()) j["mask"] = row.mask;
    return j;
}

void write_json(const RunReport& report, const std::filesystem::path& path) {
    ordered_json doc;
    doc["command"] = report.command;
    doc["title"] = report.title;
    doc["split"] = data::to_string(report.kind);
    doc["seed"] = report.seed;
    doc["cost_variant"] = metrics::to_string(report.cost_variant);
    doc["levels"] = report.levels;
    doc["rows"] = ordered_json::array();
    for (const ReportRow& row : report.rows) doc["rows"].push_back(row_to_json(row));
    std::ofstream out = open_out(path);
    out << doc.dump(2) << '\n';
}

}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot hash: " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("failed to initialize SHA-256");
    }
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        const std::streamsize got = in.gcount();
        if (got > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(got));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    hex.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        char pair[3];
        std::snprintf(pair, sizeof(pair), "%02x", digest[i]);
        hex += pair;
    }
    return hex;
}

void emit_scatter(std::span<const double> gt, std::span<const double> pred,
                  const std::filesystem::path& csv_path,
                  const std::vector<std::pair<std::string, std::string>>& metadata,
                  bool write_svg) {
    if (gt.size() != pred.size())
        throw std::invalid_argument("scatter: gt/prediction length mismatch");
    {
        std::ofstream out = open_out(csv_path);
        out << "# n=" << gt.size() << '\n';
        for (const auto& [key, value] : metadata) out << "# " << key << '=' << value << '\n';
        out << "gt_accuracy,predicted_accuracy\n";
        for (std::size_t i = 0; i < gt.size(); ++i)
            out << dtos(gt[i]) << ',' << dtos(pred[i]) << '\n';
    }
    if (!write_svg) return;

    double lo = gt.empty() ? 0.0 : gt[0];
    double hi = lo;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        lo = std::min({lo, gt[i], pred[i]});
        hi = std::max({hi, gt[i], pred[i]});
    }
    if (hi <= lo) hi = lo + 1.0;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    const double size = 480.0, margin = 32.0;
    const auto sx = [&](double v) { return margin + (v - lo) / (hi - lo) * (size - 2 * margin); };
    const auto sy = [&](double v) { return size - margin - (v - lo) / (hi - lo) * (size - 2 * margin); };
    const auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        return std::string(buf);
    };

    std::filesystem::path svg_path = csv_path;
    svg_path.replace_extension(".svg");
    std::ofstream out = open_out(svg_path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"480\" "
           "viewBox=\"0 0 480 480\">\n";
    out << "<rect x=\"" << num(margin) << "\" y=\"" << num(margin) << "\" width=\""
        << num(size - 2 * margin) << "\" height=\"" << num(size - 2 * margin)
        << "\" fill=\"none\" stroke=\"#999\"/>\n";
    out << "<line x1=\"" << num(sx(lo)) << "\" y1=\"" << num(sy(lo)) << "\" x2=\"" << num(sx(hi))
        << "\" y2=\"" << num(sy(hi)) << "\" stroke=\"#c44\" stroke-dasharray=\"4 3\"/>\n";
    for (std::size_t i = 0; i < gt.size(); ++i)
        out << "<circle cx=\"" << num(sx(gt[i])) << "\" cy=\"" << num(sy(pred[i]))
            << "\" r=\"3\" fill=\"#36a\" fill-opacity=\"0.7\"/>\n";
    out << "</svg>\n";
}

void emit_importance(std::span<const featsel::SearchTrace> traces,
                     const std::vector<std::string>& feature_names,
                     const std::filesystem::path& csv_path) {
    if (traces.empty()) throw ValidationError("no feature-selection traces to pool");

    const auto name_of = [&](int f) {
        return f < static_cast<int>(feature_names.size()) ? feature_names[static_cast<std::size_t>(f)]
                                                          : "f" + std::to_string(f);
    };

    std::vector<std::string> algorithms;
    for (const featsel::SearchTrace& t : traces)
        if (std::find(algorithms.begin(), algorithms.end(), t.algorithm) == algorithms.end())
            algorithms.push_back(t.algorithm);

    std::ofstream out = open_out(csv_path);
    out << "algorithm,pooling,level,feature,rate\n";
    for (const std::string& algo : algorithms) {
        std::vector<featsel::SearchTrace> mine;
        std::set<int> levels;
        for (const featsel::SearchTrace& t : traces)
            if (t.algorithm == algo) {
                mine.push_back(t);
                levels.insert(t.level);
            }
        for (int level : levels) {
            std::vector<featsel::SearchTrace> of_level;
            for (const featsel::SearchTrace& t : mine)
                if (t.level == level) of_level.push_back(t);
            const std::vector<double> rates = featsel::feature_importance(of_level);
            for (std::size_t f = 0; f < rates.size(); ++f)
                out << algo << ",per_level," << level << ',' << name_of(static_cast<int>(f)) << ','
                    << dtos(rates[f]) << '\n';
        }
        if (levels.size() > 1) {
            const std::vector<double> rates = featsel::feature_importance(mine);
            for (std::size_t f = 0; f < rates.size(); ++f)
                out << algo << ",across_levels,," << name_of(static_cast<int>(f)) << ','
                    << dtos(rates[f]) << '\n';
        }
    }
}

std::vector<std::filesystem::path> write_report(const RunReport& report, const RunConfig& config) {
    namespace fs = std::filesystem;
    if (config.out_dir.empty()) throw std::invalid_argument("output directory is required");
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) throw IoError("cannot create output directory: " + config.out_dir.string());

    const bool all = config.format == "all";
    std::vector<fs::path> written;

    if (all || config.format == "md") {
        write_markdown(report, config.out_dir / "report.md");
        written.push_back(config.out_dir / "report.md");
    }
    if (all || config.format == "csv") {
        write_csv(report, config.out_dir / "report.csv");
        written.push_back(config.out_dir / "report.csv");
    }
    if (all || config.format == "json") {
        write_json(report, config.out_dir / "report.json");
        written.push_back(config.out_dir / "report.json");
    }

    {
        std::ofstream out = open_out(config.out_dir / "split.json");
        out << data::split_to_json(report.split) << '\n';
        written.push_back(config.out_dir / "split.json");
    }

    if (!report.traces.empty()) {
        fs::create_directories(config.out_dir / "traces", ec);
        for (const featsel::SearchTrace& trace : report.traces) {
            const fs::path path = config.out_dir / "traces" /
                                  (slug(trace.algorithm) + "-L" + std::to_string(trace.level) +
                                   ".json");
            std::ofstream out = open_out(path);
            out << trace.to_json() << '\n';
            written.push_back(path);
        }
        emit_importance(report.traces, report.feature_names, config.out_dir / "importance.csv");
        written.push_back(config.out_dir / "importance.csv");
    }

    if (config.scatter) {
        fs::create_directories(config.out_dir / "scatter", ec);
        for (const ReportRow& row : report.rows) {
            if (row.placeholder || row.predictions.empty()) continue;
            const fs::path path =
                config.out_dir / "scatter" /
                (slug(row.algorithm) + "-L" + std::to_string(row.level) +
                 (row.featsel ? "-sel" : "") + ".csv");
            emit_scatter(row.test_gt, row.predictions, path,
                         {{"algorithm", row.algorithm},
                          {"level", std::to_string(row.level)},
                          {"split", data::to_string(report.kind)},
                          {"featsel", row.featsel ? "on" : "off"}},
                         /*write_svg=*/true);
            written.push_back(path);
            fs::path svg = path;
            svg.replace_extension(".svg");
            written.push_back(svg);
        }
    }

    ordered_json manifest;
    manifest["command"] = report.command;
    manifest["title"] = report.title;
    manifest["dataset"] = config.dataset_path.string();
    manifest["split"] = data::to_string(report.kind);
    manifest["seed"] = report.seed;
    manifest["cost_variant"] = metrics::to_string(report.cost_variant);
    manifest["levels"] = report.levels;
    manifest["featsel"] = config.featsel_on;
    manifest["search"] = {{"p", config.search.p},
                          {"b", config.search.b},
                          {"dedup", config.search.dedup}};
    manifest["standardize"] = config.standardize;
    manifest["artifacts"] = ordered_json::array();
    std::vector<fs::path> sorted = written;
    std::sort(sorted.begin(), sorted.end());
    for (const fs::path& path : sorted) {
        ordered_json artifact;
        artifact["path"] = fs::relative(path, config.out_dir).generic_string();
        artifact["bytes"] = static_cast<std::uint64_t>(fs::file_size(path));
        artifact["sha256"] = sha256_file(path);
        manifest["artifacts"].push_back(artifact);
    }
    const fs::path manifest_path = config.out_dir / "manifest.json";
    {
        std::ofstream out = open_out(manifest_path);
        out << manifest.dump(2) << '\n';
    }
    written.push_back(manifest_path);
    return written;
}

}  // namespace naap::harness
