#include "naap/featsel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <queue>
#include <set>

#include <nlohmann/json.hpp>

#include "naap/rng.hpp"

namespace naap::featsel {

using ordered_json = nlohmann::ordered_json;

FeatureMask::FeatureMask(int n_features, std::uint64_t bits)
    : n_features_(n_features), bits_(bits) {
    if (n_features < 1 || n_features > 63)
        throw std::invalid_argument("feature count must lie in [1, 63]");
    if (bits == 0) throw std::invalid_argument("feature mask must not be empty");
    if (n_features < 64 && (bits >> n_features) != 0)
        throw std::invalid_argument("mask has bits beyond the feature count");
}

FeatureMask FeatureMask::full(int n_features) {
    if (n_features < 1 || n_features > 63)
        throw std::invalid_argument("feature count must lie in [1, 63]");
    return FeatureMask(n_features, (1ULL << n_features) - 1ULL);
}

FeatureMask FeatureMask::from_string(std::string_view text) {
    if (text.empty() || text.size() > 63)
        throw std::invalid_argument("mask string must hold 1..63 bits");
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '1') bits |= 1ULL << i;
        else if (text[i] != '0')
            throw std::invalid_argument("mask string must contain only 0/1");
    }
    return FeatureMask(static_cast<int>(text.size()), bits);
}

int FeatureMask::count() const { return std::popcount(bits_); }

FeatureMask FeatureMask::with_flipped(int feature) const {
    if (feature < 0 || feature >= n_features_)
        throw std::invalid_argument("feature index out of range");
    return FeatureMask(n_features_, bits_ ^ (1ULL << feature));
}

std::string FeatureMask::to_string() const {
    std::string s(static_cast<std::size_t>(n_features_), '0');
    for (int i = 0; i < n_features_; ++i)
        if (test(i)) s[static_cast<std::size_t>(i)] = '1';
    return s;
}

std::vector<FeatureMask> neighbors(const FeatureMask& mask) {
    std::vector<FeatureMask> out;
    out.reserve(static_cast<std::size_t>(mask.size()));
    for (int i = 0; i < mask.size(); ++i) {
        const std::uint64_t flipped = mask.bits() ^ (1ULL << i);
        if (flipped == 0) continue;
        out.emplace_back(mask.size(), flipped);
    }
    return out;
}

int SearchTrace::descent_steps() const {
    int count = 0;
    for (const StepLog& s : steps)
        if (s.step > 0) ++count;
    return count;
}

namespace {

ordered_json eval_to_json(std::uint64_t mask_bits, int n_features, const metrics::EvalResult& r) {
    ordered_json j;
    j["mask"] = FeatureMask(n_features, mask_bits).to_string();
    j["mae"] = r.mae;
    j["violations"] = r.violations;
    j["n_test"] = r.n_test;
    j["monotonicity"] = r.monotonicity;
    j["cost"] = r.cost;
    return j;
}

metrics::EvalResult eval_from_json(const nlohmann::json& j) {
    metrics::EvalResult r;
    r.mae = j.at("mae").get<double>();
    r.violations = j.at("violations").get<std::int64_t>();
    r.n_test = j.at("n_test").get<int>();
    r.monotonicity = j.at("monotonicity").get<double>();
    r.cost = j.at("cost").get<double>();
    return r;
}

}  // namespace

std::string SearchTrace::to_json() const {
    ordered_json doc;
    doc["algorithm"] = algorithm;
    doc["level"] = level;
    doc["n_features"] = n_features;
    doc["cost_variant"] = metrics::to_string(cost_variant);
    doc["seed"] = seed;
    doc["n_eval_calls"] = n_eval_calls;
    doc["best"] = eval_to_json(best_mask, n_features, best);
    doc["evaluations"] = ordered_json::array();
    for (const auto& [bits, result] : evaluations)
        doc["evaluations"].push_back(eval_to_json(bits, n_features, result));
    doc["steps"] = ordered_json::array();
    for (const StepLog& s : steps) {
        ordered_json js;
        js["step"] = s.step;
        js["evaluated"] = ordered_json::array();
        for (std::uint64_t bits : s.evaluated)
            js["evaluated"].push_back(FeatureMask(n_features, bits).to_string());
        js["pruned"] = s.pruned;
        doc["steps"].push_back(js);
    }
    return doc.dump(2);
}

SearchTrace SearchTrace::from_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("search trace: ") + e.what());
    }
    SearchTrace trace;
    trace.algorithm = doc.value("algorithm", std::string{});
    trace.level = doc.value("level", -1);
    trace.n_features = doc.at("n_features").get<int>();
    trace.cost_variant = metrics::cost_variant_from_string(
        doc.value("cost_variant", std::string{"sqrt_rounded"}));
    trace.seed = doc.value("seed", std::uint64_t{0});
    trace.n_eval_calls = doc.value("n_eval_calls", std::size_t{0});
    trace.best_mask = FeatureMask::from_string(doc.at("best").at("mask").get<std::string>()).bits();
    trace.best = eval_from_json(doc.at("best"));
    for (const auto& je : doc.at("evaluations")) {
        const std::uint64_t bits = FeatureMask::from_string(je.at("mask").get<std::string>()).bits();
        trace.evaluations[bits] = eval_from_json(je);
    }
    if (doc.contains("steps")) {
        for (const auto& js : doc["steps"]) {
            StepLog s;
            s.step = js.at("step").get<int>();
            for (const auto& jm : js.at("evaluated"))
                s.evaluated.push_back(FeatureMask::from_string(jm.get<std::string>()).bits());
            s.pruned = js.value("pruned", std::size_t{0});
            trace.steps.push_back(std::move(s));
        }
    }
    return trace;
}

namespace {

struct QueueEntry {
    double priority = 0.0;
    std::uint64_t tiebreak = 0;  // monotone insertion counter: equal priorities are FIFO
    std::uint64_t mask = 0;
};

struct EntryGreater {
    bool operator()(const QueueEntry& a, const QueueEntry& b) const {
        if (a.priority != b.priority) return a.priority > b.priority;
        return a.tiebreak > b.tiebreak;
    }
};

}  // namespace

SearchTrace hill_climb(const Evaluator& evaluator, int n_features, const SearchConfig& config) {
    if (n_features < 1 || n_features > 63)
        throw std::invalid_argument("feature count must lie in [1, 63]");
    if (config.p <= 0.0) throw std::invalid_argument("p must be positive");
    if (config.b < 1) throw std::invalid_argument("branching factor must be >= 1");

    const int max_steps = static_cast<int>(std::floor(config.p * n_features));
    const std::size_t step_cap = static_cast<std::size_t>(config.b) *
                                 static_cast<std::size_t>(n_features);
    Rng rng(config.seed);

    SearchTrace trace;
    trace.n_features = n_features;
    trace.seed = config.seed;
    trace.cost_variant = config.cost_variant;

    std::priority_queue<QueueEntry, std::vector<QueueEntry>, EntryGreater> queue;
    std::uint64_t insertion_counter = 0;
    queue.push({-std::numeric_limits<double>::infinity(), insertion_counter++,
                FeatureMask::full(n_features).bits()});

    bool have_best = false;
    int steps_taken = 0;
    std::size_t round = 0;

    while (!queue.empty()) {
        const bool root_round = round == 0;
        if (!root_round && steps_taken >= max_steps) break;

        // Dequeue every entry sharing the current minimum priority, FIFO.
        const double group_priority = queue.top().priority;
        std::vector<QueueEntry> group;
        while (!queue.empty() && queue.top().priority == group_priority) {
            group.push_back(queue.top());
            queue.pop();
        }

        std::vector<QueueEntry> survivors;
        survivors.reserve(group.size());
        if (config.dedup) {
            std::set<std::uint64_t> seen_this_round;
            for (const QueueEntry& e : group) {
                if (trace.evaluations.contains(e.mask)) continue;
                if (!seen_this_round.insert(e.mask).second) continue;
                survivors.push_back(e);
            }
        } else {
            survivors = std::move(group);
        }

        StepLog log;
        log.step = root_round ? 0 : steps_taken + 1;

        if (survivors.size() > step_cap) {
            // Keep a uniform sample of step_cap entries; the rest go back to
            // the queue with their original priority and tiebreak.
            const std::vector<std::size_t> chosen = rng.sample(survivors.size(), step_cap);
            std::vector<bool> keep(survivors.size(), false);
            for (std::size_t i : chosen) keep[i] = true;
            std::vector<QueueEntry> kept;
            kept.reserve(step_cap);
            for (std::size_t i = 0; i < survivors.size(); ++i) {
                if (keep[i]) kept.push_back(survivors[i]);
                else queue.push(survivors[i]);
            }
            log.pruned = survivors.size() - kept.size();
            survivors = std::move(kept);
        }

        // Canonical evaluation order: ascending mask value. Evaluations are
        // independent, so a parallel evaluator merged in this order gives the
        // identical trace.
        std::sort(survivors.begin(), survivors.end(),
                  [](const QueueEntry& a, const QueueEntry& b) { return a.mask < b.mask; });

        for (const QueueEntry& entry : survivors) {
            const FeatureMask mask(n_features, entry.mask);
            metrics::EvalResult result;
            try {
                result = evaluator(mask);
            } catch (const std::exception& e) {
                trace.steps.push_back(std::move(log));
                throw SearchAborted(std::string("evaluator failed on mask ") + mask.to_string() +
                                        ": " + e.what(),
                                    std::move(trace));
            }
            ++trace.n_eval_calls;
            trace.evaluations[entry.mask] = result;
            log.evaluated.push_back(entry.mask);
            if (!have_best || result.cost < trace.best.cost) {
                have_best = true;
                trace.best = result;
                trace.best_mask = entry.mask;
            }
            for (const FeatureMask& nb : neighbors(mask))
                queue.push({result.cost, insertion_counter++, nb.bits()});
        }

        trace.steps.push_back(std::move(log));
        if (!root_round) ++steps_taken;
        ++round;
    }

    // Budget invariants, checked on every run.
    const std::size_t eval_budget = 1 + static_cast<std::size_t>(max_steps) * step_cap;
    if (trace.n_eval_calls > eval_budget)
        throw Error("internal: evaluation budget exceeded (" +
                    std::to_string(trace.n_eval_calls) + " > " + std::to_string(eval_budget) + ")");
    if (trace.descent_steps() > max_steps)
        throw Error("internal: descent-step budget exceeded");
    return trace;
}

ExhaustiveResult exhaustive_search(const Evaluator& evaluator, int n_features) {
    if (n_features < 1 || n_features > 16)
        throw std::invalid_argument("exhaustive search supports up to 16 features");
    const std::uint64_t n_masks = 1ULL << n_features;

    ExhaustiveResult result{FeatureMask::full(n_features), {}, {}};
    result.table.resize(n_masks);
    bool have_best = false;
    for (std::uint64_t bits = 1; bits < n_masks; ++bits) {
        const FeatureMask mask(n_features, bits);
        const metrics::EvalResult r = evaluator(mask);
        result.table[bits] = r;
        const bool better =
            !have_best || r.cost < result.best_result.cost ||
            (r.cost == result.best_result.cost &&
             (mask.count() < result.best.count() ||
              (mask.count() == result.best.count() && bits < result.best.bits())));
        if (better) {
            have_best = true;
            result.best = mask;
            result.best_result = r;
        }
    }
    return result;
}

std::vector<double> feature_importance(std::span<const SearchTrace> traces,
                                       double top_fraction) {
    if (traces.empty()) throw std::invalid_argument("feature_importance: no traces");
    if (top_fraction <= 0.0 || top_fraction > 1.0)
        throw std::invalid_argument("top_fraction must lie in (0, 1]");

    int n_features = 0;
    std::vector<std::pair<double, std::uint64_t>> pool;  // (cost, mask)
    for (const SearchTrace& trace : traces) {
        n_features = std::max(n_features, trace.n_features);
        for (const auto& [bits, result] : trace.evaluations) pool.emplace_back(result.cost, bits);
    }
    if (pool.empty()) throw ValidationError("feature_importance: traces hold no evaluations");

    const auto keep = static_cast<std::size_t>(
        std::ceil(top_fraction * static_cast<double>(pool.size())));
    std::sort(pool.begin(), pool.end());
    pool.resize(std::max<std::size_t>(keep, 1));

    std::vector<double> rates(static_cast<std::size_t>(n_features), 0.0);
    for (const auto& [cost, bits] : pool)
        for (int f = 0; f < n_features; ++f)
            if ((bits >> f) & 1ULL) rates[static_cast<std::size_t>(f)] += 1.0;
    for (double& r : rates) r /= static_cast<double>(pool.size());
    return rates;
}

}  // namespace naap::featsel
