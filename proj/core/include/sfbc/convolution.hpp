#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sfbc/basis.hpp"
#include "sfbc/types.hpp"

namespace sfbc {

/// Directed neighbor graph. Edge e carries information from source j to target i,
/// with displacement q_ij = (x_i - x_j) / h stored edge-major.
struct ParticleGraph {
    std::size_t node_count = 0;
    int dim = 1;
    std::vector<std::uint32_t> targets;
    std::vector<std::uint32_t> sources;
    std::vector<double> displacement;
    std::vector<double> distance;

    std::size_t edge_count() const noexcept { return targets.size(); }
    void validate(double slack = 1e-9) const;
};

enum class Activation { Identity, ReLU };

struct ConvConfig {
    std::vector<BasisSpec> basis;  // one per axis
    WindowKind window = WindowKind::None;
    MappingKind mapping = MappingKind::Identity;
    SymmetryMode symmetry = SymmetryMode::Standard;
    bool use_bias = true;
    bool use_self = true;  // self-interaction term f_i * Omega
    std::size_t batch_size = 4096;
    unsigned threads = 1;

    int dim() const noexcept { return static_cast<int>(basis.size()); }
    std::size_t term_count() const;
};

/// weights laid out [term][in][out] with terms flattened first-axis slowest.
struct ConvLayerParams {
    std::size_t terms = 0;
    std::size_t in_features = 0;
    std::size_t out_features = 0;
    std::vector<double> weights;
    std::vector<double> self_weights;  // [in][out]
    std::vector<double> bias;          // [out]

    static ConvLayerParams zeros(std::size_t terms, std::size_t in, std::size_t out);
    std::size_t parameter_count() const noexcept { return weights.size() + self_weights.size() + bias.size(); }
};

struct ConvLayerGrads {
    std::vector<double> weights;
    std::vector<double> self_weights;
    std::vector<double> bias;
    Matrix features;  // empty when not requested
};

Matrix conv_forward(const ParticleGraph& graph, const Matrix& features, const ConvLayerParams& params,
                    const ConvConfig& config);

ConvLayerGrads conv_backward(const ParticleGraph& graph, const Matrix& features, const ConvLayerParams& params,
                             const ConvConfig& config, const Matrix& upstream, bool need_feature_grad = true);

struct LayerSpec {
    ConvLayerParams params;
    ConvConfig config;
    bool activation = false;
    Activation kind = Activation::ReLU;
};

/// Intermediate values retained for backpropagation through a stack.
struct StackTape {
    std::vector<Matrix> inputs;       // input to each layer
    std::vector<Matrix> pre_activation;
    Matrix output;
};

Matrix apply_layer_stack(const ParticleGraph& graph, const Matrix& input, const std::vector<LayerSpec>& layers);
StackTape forward_stack(const ParticleGraph& graph, const Matrix& input, const std::vector<LayerSpec>& layers);

struct StackGrads {
    std::vector<ConvLayerGrads> layers;
    Matrix input;  // empty unless requested
};

StackGrads backward_stack(const ParticleGraph& graph, const StackTape& tape, const std::vector<LayerSpec>& layers,
                          const Matrix& upstream, bool need_input_grad = false);

}  // namespace sfbc
