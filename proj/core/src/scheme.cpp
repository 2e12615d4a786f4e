#include "naap/scheme.hpp"

#include <nlohmann/json.hpp>

#include "naap/error.hpp"

namespace naap::scheme {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void ArchitectureScheme::validate() const {
    if (layers.empty())
        throw ValidationError("scheme '" + name + "': layer list must be nonempty");
    if (input_height < 1 || input_width < 1 || input_channels < 1)
        throw ValidationError("scheme '" + name + "': input resolution/channels must be >= 1");
    int prev_out = input_channels;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& layer = layers[i];
        const std::string where = "scheme '" + name + "', layer " + std::to_string(i + 1);
        if (layer.kernel_size != 1 && layer.kernel_size != 3)
            throw ValidationError(where + ": kernel_size must be 1 or 3, got " +
                                  std::to_string(layer.kernel_size));
        if (layer.stride != 1 && layer.stride != 2)
            throw ValidationError(where + ": stride must be 1 or 2, got " +
                                  std::to_string(layer.stride));
        if (layer.in_width < 1 || layer.out_width < 1)
            throw ValidationError(where + ": widths must be >= 1");
        if (layer.in_width != prev_out)
            throw ValidationError(where + ": in_width=" + std::to_string(layer.in_width) +
                                  " does not chain from previous out_width=" +
                                  std::to_string(prev_out));
        prev_out = layer.out_width;
    }
}

std::array<double, 8> SchemeFeatures::as_vector() const {
    return {static_cast<double>(depth),
            static_cast<double>(num_stages),
            static_cast<double>(first_width),
            static_cast<double>(last_width),
            static_cast<double>(num_params),
            static_cast<double>(num_macs),
            static_cast<double>(num_skip_connections),
            static_cast<double>(num_lost_rf_layers)};
}

int stages_by_downsampling(const ArchitectureScheme& scheme) {
    int downsamples = 0;
    for (const LayerSpec& layer : scheme.layers)
        if (layer.stride == 2) ++downsamples;
    return 1 + downsamples;
}

namespace {

int require_int(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key))
        throw ParseError(where + ": missing field '" + key + "'");
    if (!j[key].is_number_integer())
        throw ParseError(where + ": field '" + key + "' must be an integer");
    return j[key].get<int>();
}

}  // namespace

ArchitectureScheme parse_scheme(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("scheme document: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("scheme document: expected a JSON object");
    if (!doc.contains("name") || !doc["name"].is_string())
        throw ParseError("scheme document: missing string field 'name'");

    ArchitectureScheme scheme;
    scheme.name = doc["name"].get<std::string>();

    if (doc.contains("input")) {
        const json& input = doc["input"];
        if (!input.is_array() || input.size() != 3)
            throw ParseError("scheme '" + scheme.name + "': 'input' must be [H, W, C]");
        scheme.input_height = input[0].get<int>();
        scheme.input_width = input[1].get<int>();
        scheme.input_channels = input[2].get<int>();
    }

    if (!doc.contains("layers") || !doc["layers"].is_array())
        throw ParseError("scheme '" + scheme.name + "': missing array field 'layers'");
    const json& layers = doc["layers"];
    if (layers.empty())
        throw ValidationError("scheme '" + scheme.name + "': layer list must be nonempty");

    int prev_out = scheme.input_channels;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string where = "scheme '" + scheme.name + "', layer " + std::to_string(i + 1);
        const json& jl = layers[i];
        if (!jl.is_object()) throw ParseError(where + ": expected an object");
        LayerSpec layer;
        layer.index = static_cast<int>(i + 1);
        layer.out_width = require_int(jl, "out_width", where);
        layer.kernel_size = require_int(jl, "kernel", where);
        layer.stride = require_int(jl, "stride", where);
        layer.requests_skip = jl.value("skip", false);
        layer.in_width = prev_out;
        if (jl.contains("in_width")) {
            const int stated = jl["in_width"].get<int>();
            if (stated != prev_out)
                throw ValidationError(where + ": in_width=" + std::to_string(stated) +
                                      " does not chain from previous out_width=" +
                                      std::to_string(prev_out));
        }
        prev_out = layer.out_width;
        scheme.layers.push_back(layer);
    }

    scheme.validate();
    return scheme;
}

std::string serialize_scheme(const ArchitectureScheme& scheme) {
    ordered_json doc;
    doc["name"] = scheme.name;
    doc["input"] = {scheme.input_height, scheme.input_width, scheme.input_channels};
    doc["layers"] = ordered_json::array();
    for (const LayerSpec& layer : scheme.layers) {
        ordered_json jl;
        jl["out_width"] = layer.out_width;
        jl["kernel"] = layer.kernel_size;
        jl["stride"] = layer.stride;
        jl["skip"] = layer.requests_skip;
        doc["layers"].push_back(jl);
    }
    return doc.dump();
}

std::vector<ArchitectureScheme> parse_scheme_lines(std::istream& in) {
    std::vector<ArchitectureScheme> schemes;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        try {
            schemes.push_back(parse_scheme(line));
        } catch (const Error& e) {
            throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return schemes;
}

int count_skip_connections(const ArchitectureScheme& scheme) {
    int count = 0;
    for (const LayerSpec& layer : scheme.layers)
        if (layer.requests_skip && layer.in_width == layer.out_width && layer.stride == 1)
            ++count;
    return count;
}

int count_lost_rf_layers(const ArchitectureScheme& scheme) {
    int count = 0;
    for (const LayerSpec& layer : scheme.layers)
        if (layer.kernel_size == 1 && layer.stride == 2) ++count;
    return count;
}

ParamsMacs count_params_macs(const ArchitectureScheme& scheme) {
    ParamsMacs totals;
    std::int64_t h = scheme.input_height;
    std::int64_t w = scheme.input_width;
    for (const LayerSpec& layer : scheme.layers) {
        const std::int64_t k2 = static_cast<std::int64_t>(layer.kernel_size) * layer.kernel_size;
        const std::int64_t kernel_params = k2 * layer.in_width * layer.out_width;
        totals.params += kernel_params + layer.out_width;
        h = (h + layer.stride - 1) / layer.stride;
        w = (w + layer.stride - 1) / layer.stride;
        totals.macs += kernel_params * h * w;
    }
    return totals;
}

SchemeFeatures scheme_feature_vector(const ArchitectureScheme& scheme,
                                     const StageRule& stage_rule) {
    const ParamsMacs pm = count_params_macs(scheme);
    SchemeFeatures f;
    f.depth = static_cast<std::int64_t>(scheme.layers.size());
    f.num_stages = stage_rule(scheme);
    f.first_width = scheme.layers.front().out_width;
    f.last_width = scheme.layers.back().out_width;
    f.num_params = pm.params;
    f.num_macs = pm.macs;
    f.num_skip_connections = count_skip_connections(scheme);
    f.num_lost_rf_layers = count_lost_rf_layers(scheme);
    return f;
}

}  // namespace naap::scheme
