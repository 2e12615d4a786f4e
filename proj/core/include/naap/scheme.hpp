#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace naap::scheme {

/// One convolutional layer of a candidate architecture.
struct LayerSpec {
    int index = 0;  // 1-based position in the scheme
    int in_width = 0;
    int out_width = 0;
    int kernel_size = 3;  // 1 or 3
    int stride = 1;       // 1 or 2
    bool requests_skip = false;

    bool operator==(const LayerSpec&) const = default;
};

struct ArchitectureScheme {
    std::string name;
    std::vector<LayerSpec> layers;
    int input_height = 32;
    int input_width = 32;
    int input_channels = 3;

    bool operator==(const ArchitectureScheme&) const = default;

    /// Throws ValidationError when a layer field is out of domain or
    /// consecutive layers do not chain (in_width != previous out_width).
    void validate() const;
};

/// The 8 tabular scheme features, in canonical column order.
struct SchemeFeatures {
    std::int64_t depth = 0;
    std::int64_t num_stages = 0;
    std::int64_t first_width = 0;
    std::int64_t last_width = 0;
    std::int64_t num_params = 0;
    std::int64_t num_macs = 0;
    std::int64_t num_skip_connections = 0;
    std::int64_t num_lost_rf_layers = 0;

    std::array<double, 8> as_vector() const;
};

inline constexpr std::array<const char*, 8> kSchemeFeatureNames = {
    "depth",      "num_stages", "first_width",          "last_width",
    "num_params", "num_macs",   "num_skip_connections", "num_lost_rf_layers"};

/// Counting rule for num_stages; the dataset never defines it, so it is a
/// pluggable policy.
using StageRule = std::function<int(const ArchitectureScheme&)>;

/// Default rule: a new stage begins at every spatial downsampling, so
/// num_stages = 1 + number of stride-2 layers.
int stages_by_downsampling(const ArchitectureScheme& scheme);

/// Parses one JSON scheme document:
///   {"name": str, "input": [H, W, C], "layers":
///     [{"out_width": int, "kernel": int, "stride": int, "skip": bool}, ...]}
/// "input" defaults to [32, 32, 3]; a layer's in_width is derived from the
/// previous layer (or the input channels) and, when stated explicitly, must
/// chain or a ValidationError names the offending layer index.
ArchitectureScheme parse_scheme(std::string_view json_text);

/// Canonical JSON for a scheme; parse_scheme(serialize_scheme(s)) == s.
std::string serialize_scheme(const ArchitectureScheme& scheme);

/// Parses a JSON-lines stream of scheme documents; errors are prefixed with
/// the 1-based line number.
std::vector<ArchitectureScheme> parse_scheme_lines(std::istream& in);

/// Effective skip connections: requested AND shapes match
/// (in_width == out_width, stride == 1).
int count_skip_connections(const ArchitectureScheme& scheme);

/// Layers with a 1x1 kernel and stride 2, which discard half of the spatial
/// information each.
int count_lost_rf_layers(const ArchitectureScheme& scheme);

struct ParamsMacs {
    std::int64_t params = 0;
    std::int64_t macs = 0;
};

/// Per layer: params = k^2 * c_in * c_out + c_out (bias included);
/// MACs = k^2 * c_in * c_out * H_out * W_out with H_out = ceil(H_in / stride).
/// Spatial size is propagated from the scheme's input resolution.
ParamsMacs count_params_macs(const ArchitectureScheme& scheme);

/// Assembles all 8 scheme features.
SchemeFeatures scheme_feature_vector(const ArchitectureScheme& scheme,
                                     const StageRule& stage_rule = stages_by_downsampling);

}  // namespace naap::scheme
