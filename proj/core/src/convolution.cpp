#include "sfbc/convolution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

#include "sfbc/error.hpp"

namespace sfbc {

void ParticleGraph::validate(double slack) const {
    const std::size_t e = targets.size();
    if (sources.size() != e || distance.size() != e || displacement.size() != e * static_cast<std::size_t>(dim)) {
        throw ConfigError("particle graph arrays have inconsistent lengths");
    }
    if (dim < 1 || dim > 3) throw ConfigError("particle graph dimension must be 1, 2 or 3");
    for (std::size_t k = 0; k < e; ++k) {
        if (targets[k] >= node_count || sources[k] >= node_count) throw ConfigError("edge index out of range");
        if (targets[k] == sources[k]) throw ConfigError("self edge at index " + std::to_string(k));
        double norm2 = 0.0;
        for (int a = 0; a < dim; ++a) norm2 += displacement[k * dim + a] * displacement[k * dim + a];
        const double norm = std::sqrt(norm2);
        if (distance[k] > 1.0 + slack) throw ConfigError("edge distance exceeds support radius");
        if (std::abs(norm - distance[k]) > slack * std::max(1.0, norm)) {
            throw ConfigError("edge distance inconsistent with displacement");
        }
    }
}

std::size_t ConvConfig::term_count() const {
    std::size_t total = 1;
    for (const auto& spec : basis) total *= static_cast<std::size_t>(spec.n);
    return total;
}

ConvLayerParams ConvLayerParams::zeros(std::size_t terms, std::size_t in, std::size_t out) {
    ConvLayerParams p;
    p.terms = terms;
    p.in_features = in;
    p.out_features = out;
    p.weights.assign(terms * in * out, 0.0);
    p.self_weights.assign(in * out, 0.0);
    p.bias.assign(out, 0.0);
    return p;
}

namespace {

using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using ConstMatMap = Eigen::Map<const Matrix>;

void check_shapes(const ParticleGraph& graph, const Matrix& features, const ConvLayerParams& params,
                  const ConvConfig& config) {
    if (config.basis.empty()) throw ConfigError("convolution config has no basis axes");
    if (graph.dim != config.dim()) {
        throw ConfigError("graph dimension " + std::to_string(graph.dim) + " does not match basis axis count " +
                          std::to_string(config.dim()));
    }
    if (static_cast<std::size_t>(features.rows()) != graph.node_count) {
        throw ConfigError("feature rows " + std::to_string(features.rows()) + " != node count " +
                          std::to_string(graph.node_count));
    }
    if (static_cast<std::size_t>(features.cols()) != params.in_features) {
        throw ConfigError("feature columns " + std::to_string(features.cols()) + " != layer input width " +
                          std::to_string(params.in_features));
    }
    if (params.terms != config.term_count()) throw ConfigError("layer term count does not match basis");
    if (params.weights.size() != params.terms * params.in_features * params.out_features ||
        params.self_weights.size() != params.in_features * params.out_features ||
        params.bias.size() != params.out_features) {
        throw ConfigError("layer parameter tensor sizes are inconsistent");
    }
    if (config.batch_size == 0) throw ConfigError("batch size must be positive");
    if (graph.targets.size() != graph.sources.size() || graph.distance.size() != graph.targets.size() ||
        graph.displacement.size() != graph.targets.size() * static_cast<std::size_t>(graph.dim)) {
        throw ConfigError("particle graph arrays have inconsistent lengths");
    }
}

/// Edges grouped per target node in a fixed (stable) order.
struct EdgeLayout {
    std::vector<std::size_t> order;    // empty when graph edges are already sorted by target
    std::vector<std::size_t> offsets;  // node_count + 1

    std::size_t edge(std::size_t p) const { return order.empty() ? p : order[p]; }
};

EdgeLayout make_layout(const ParticleGraph& graph) {
    EdgeLayout layout;
    const std::size_t e = graph.edge_count();
    if (!std::is_sorted(graph.targets.begin(), graph.targets.end())) {
        layout.order.resize(e);
        std::iota(layout.order.begin(), layout.order.end(), std::size_t{0});
        std::stable_sort(layout.order.begin(), layout.order.end(),
                         [&](std::size_t a, std::size_t b) { return graph.targets[a] < graph.targets[b]; });
    }
    layout.offsets.assign(graph.node_count + 1, 0);
    for (std::size_t k = 0; k < e; ++k) ++layout.offsets[graph.targets[k] + 1];
    for (std::size_t i = 0; i < graph.node_count; ++i) layout.offsets[i + 1] += layout.offsets[i];
    return layout;
}

/// Computes basis tensors and window weights for consecutive chunks of laid-out edges.
class EdgeBatcher {
public:
    EdgeBatcher(const ParticleGraph& graph, const EdgeLayout& layout, const ConvConfig& config,
                const BasisTensor& tensor)
        : graph_(graph), layout_(layout), config_(config), tensor_(tensor), terms_(tensor.size()),
          values_(config.batch_size * terms_), window_(config.batch_size), scratch_(tensor.scratch_size()) {}

    /// Ensures edge position p is inside the current chunk; chunks never extend past limit.
    void fetch(std::size_t p, std::size_t limit) {
        if (p >= begin_ && p < end_) return;
        begin_ = p;
        end_ = std::min(p + config_.batch_size, limit);
        const int d = graph_.dim;
        double mapped[3];
        for (std::size_t k = begin_; k < end_; ++k) {
            const std::size_t e = layout_.edge(k);
            const std::span<const double> q(graph_.displacement.data() + e * d, static_cast<std::size_t>(d));
            map_coords(config_.mapping, q, std::span<double>(mapped, static_cast<std::size_t>(d)));
            const std::size_t slot = k - begin_;
            tensor_.evaluate(std::span<const double>(mapped, static_cast<std::size_t>(d)),
                             std::span<double>(values_.data() + slot * terms_, terms_), scratch_);
            window_[slot] = eval_window(config_.window, graph_.distance[e]);
        }
    }

    const double* basis(std::size_t p) const { return values_.data() + (p - begin_) * terms_; }
    double window(std::size_t p) const { return window_[p - begin_]; }

private:
    const ParticleGraph& graph_;
    const EdgeLayout& layout_;
    const ConvConfig& config_;
    const BasisTensor& tensor_;
    std::size_t terms_;
    std::vector<double> values_;
    std::vector<double> window_;
    std::vector<double> scratch_;
    std::size_t begin_ = 0;
    std::size_t end_ = 0;
};

/// Contiguous node ranges with roughly equal edge counts.
std::vector<std::size_t> partition_nodes(const EdgeLayout& layout, std::size_t nodes, unsigned threads) {
    const unsigned parts = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(nodes, 1))));
    std::vector<std::size_t> bounds{0};
    const std::size_t total = layout.offsets.back();
    for (unsigned t = 1; t < parts; ++t) {
        const std::size_t goal = total * t / parts;
        auto it = std::lower_bound(layout.offsets.begin(), layout.offsets.end(), goal);
        std::size_t node = static_cast<std::size_t>(it - layout.offsets.begin());
        node = std::clamp(node, bounds.back(), nodes);
        bounds.push_back(node);
    }
    bounds.push_back(nodes);
    return bounds;
}

template <typename Fn>
void run_partitioned(const std::vector<std::size_t>& bounds, Fn&& fn) {
    const std::size_t parts = bounds.size() - 1;
    if (parts == 1) {
        fn(std::size_t{0}, bounds[0], bounds[1]);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(parts);
    for (std::size_t t = 0; t < parts; ++t) workers.emplace_back([&, t] { fn(t, bounds[t], bounds[t + 1]); });
    for (auto& w : workers) w.join();
}

/// Accumulates A_i[k, c] = sum_e B_k w f_jc over the edges of node i.
inline void accumulate_node(const ParticleGraph& graph, const EdgeLayout& layout, EdgeBatcher& batcher,
                            const Matrix& features, std::size_t node, std::size_t limit, std::size_t terms,
                            double* acc) {
    const std::size_t in = static_cast<std::size_t>(features.cols());
    std::fill(acc, acc + terms * in, 0.0);
    for (std::size_t p = layout.offsets[node]; p < layout.offsets[node + 1]; ++p) {
        batcher.fetch(p, limit);
        const double* b = batcher.basis(p);
        const double w = batcher.window(p);
        if (w == 0.0) continue;
        const double* f = features.data() + graph.sources[layout.edge(p)] * in;
        if (in == 1) {
            const double wf = w * f[0];
            for (std::size_t k = 0; k < terms; ++k) acc[k] += b[k] * wf;
        } else {
            for (std::size_t k = 0; k < terms; ++k) {
                const double bw = b[k] * w;
                double* row = acc + k * in;
                for (std::size_t c = 0; c < in; ++c) row[c] += bw * f[c];
            }
        }
    }
}

}  // namespace

Matrix conv_forward(const ParticleGraph& graph, const Matrix& features, const ConvLayerParams& params,
                    const ConvConfig& config) {
    check_shapes(graph, features, params, config);
    const BasisTensor tensor(config.basis, config.symmetry);
    const EdgeLayout layout = make_layout(graph);
    const std::size_t terms = tensor.size();
    const std::size_t in = params.in_features;
    const std::size_t out = params.out_features;
    const std::size_t big_k = terms * in;

    Matrix result = Matrix::Zero(static_cast<Eigen::Index>(graph.node_count), static_cast<Eigen::Index>(out));
    const ConstMatMap weights(params.weights.data(), static_cast<Eigen::Index>(big_k), static_cast<Eigen::Index>(out));
    const auto bounds = partition_nodes(layout, graph.node_count, config.threads);

    run_partitioned(bounds, [&](std::size_t, std::size_t first, std::size_t last) {
        EdgeBatcher batcher(graph, layout, config, tensor);
        RowVec acc(static_cast<Eigen::Index>(big_k));
        const std::size_t limit = layout.offsets[last];
        for (std::size_t i = first; i < last; ++i) {
            if (layout.offsets[i] == layout.offsets[i + 1]) continue;
            accumulate_node(graph, layout, batcher, features, i, limit, terms, acc.data());
            result.row(static_cast<Eigen::Index>(i)).noalias() = acc * weights;
        }
    });

    if (config.use_self) {
        const ConstMatMap self(params.self_weights.data(), static_cast<Eigen::Index>(in),
                               static_cast<Eigen::Index>(out));
        result.noalias() += features * self;
    }
    if (config.use_bias) {
        const Eigen::Map<const RowVec> bias(params.bias.data(), static_cast<Eigen::Index>(out));
        result.rowwise() += bias;
    }
    return result;
}

ConvLayerGrads conv_backward(const ParticleGraph& graph, const Matrix& features, const ConvLayerParams& params,
                             const ConvConfig& config, const Matrix& upstream, bool need_feature_grad) {
    check_shapes(graph, features, params, config);
    if (static_cast<std::size_t>(upstream.rows()) != graph.node_count ||
        static_cast<std::size_t>(upstream.cols()) != params.out_features) {
        throw ConfigError("upstream gradient shape does not match layer output");
    }
    const BasisTensor tensor(config.basis, config.symmetry);
    const EdgeLayout layout = make_layout(graph);
    const std::size_t terms = tensor.size();
    const std::size_t in = params.in_features;
    const std::size_t out = params.out_features;
    const std::size_t big_k = terms * in;
    const auto n_nodes = static_cast<Eigen::Index>(graph.node_count);

    const ConstMatMap weights(params.weights.data(), static_cast<Eigen::Index>(big_k), static_cast<Eigen::Index>(out));
    const auto bounds = partition_nodes(layout, graph.node_count, config.threads);
    const std::size_t parts = bounds.size() - 1;

    std::vector<Matrix> grad_w(parts, Matrix::Zero(static_cast<Eigen::Index>(big_k), static_cast<Eigen::Index>(out)));
    std::vector<Matrix> grad_f(need_feature_grad ? parts : 0,
                               Matrix::Zero(n_nodes, static_cast<Eigen::Index>(in)));

    run_partitioned(bounds, [&](std::size_t t, std::size_t first, std::size_t last) {
        EdgeBatcher batcher(graph, layout, config, tensor);
        RowVec acc(static_cast<Eigen::Index>(big_k));
        RowVec proj(static_cast<Eigen::Index>(big_k));
        std::vector<double> tmp(in);
        const std::size_t limit = layout.offsets[last];
        Matrix& gw = grad_w[t];
        for (std::size_t i = first; i < last; ++i) {
            if (layout.offsets[i] == layout.offsets[i + 1]) continue;
            const auto g = upstream.row(static_cast<Eigen::Index>(i));
            accumulate_node(graph, layout, batcher, features, i, limit, terms, acc.data());
            gw.noalias() += acc.transpose() * g;
            if (!need_feature_grad) continue;
            proj.noalias() = g * weights.transpose();
            Matrix& gf = grad_f[t];
            for (std::size_t p = layout.offsets[i]; p < layout.offsets[i + 1]; ++p) {
                batcher.fetch(p, limit);
                const double* b = batcher.basis(p);
                const double w = batcher.window(p);
                if (w == 0.0) continue;
                std::fill(tmp.begin(), tmp.end(), 0.0);
                for (std::size_t k = 0; k < terms; ++k) {
                    const double bk = b[k];
                    const double* row = proj.data() + k * in;
                    for (std::size_t c = 0; c < in; ++c) tmp[c] += bk * row[c];
                }
                double* dst = gf.data() + graph.sources[layout.edge(p)] * in;
                for (std::size_t c = 0; c < in; ++c) dst[c] += w * tmp[c];
            }
        }
    });

    ConvLayerGrads grads;
    for (std::size_t t = 1; t < parts; ++t) grad_w[0] += grad_w[t];
    grads.weights.assign(grad_w[0].data(), grad_w[0].data() + big_k * out);

    const ConstMatMap self(params.self_weights.data(), static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out));
    grads.self_weights.assign(in * out, 0.0);
    if (config.use_self) {
        const Matrix grad_self = features.transpose() * upstream;
        std::copy(grad_self.data(), grad_self.data() + in * out, grads.self_weights.begin());
    }
    grads.bias.assign(out, 0.0);
    if (config.use_bias) {
        const RowVec colsum = upstream.colwise().sum();
        std::copy(colsum.data(), colsum.data() + out, grads.bias.begin());
    }
    if (need_feature_grad) {
        for (std::size_t t = 1; t < parts; ++t) grad_f[0] += grad_f[t];
        grads.features = std::move(grad_f[0]);
        if (config.use_self) grads.features.noalias() += upstream * self.transpose();
    }
    return grads;
}

namespace {

Matrix activate(const Matrix& x, Activation kind) {
    if (kind == Activation::Identity) return x;
    return x.cwiseMax(0.0);
}

void check_chain(const std::vector<LayerSpec>& layers, const Matrix& input) {
    if (layers.empty()) throw ConfigError("layer stack is empty");
    std::size_t width = static_cast<std::size_t>(input.cols());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (layers[l].params.in_features != width) {
            throw ConfigError("layer " + std::to_string(l) + " expects " +
                              std::to_string(layers[l].params.in_features) + " inputs but receives " +
                              std::to_string(width));
        }
        width = layers[l].params.out_features;
    }
}

}  // namespace

StackTape forward_stack(const ParticleGraph& graph, const Matrix& input, const std::vector<LayerSpec>& layers) {
    check_chain(layers, input);
    StackTape tape;
    Matrix x = input;
    for (const auto& layer : layers) {
        tape.inputs.push_back(x);
        Matrix pre = conv_forward(graph, x, layer.params, layer.config);
        x = layer.activation ? activate(pre, layer.kind) : pre;
        tape.pre_activation.push_back(std::move(pre));
    }
    tape.output = std::move(x);
    return tape;
}

Matrix apply_layer_stack(const ParticleGraph& graph, const Matrix& input, const std::vector<LayerSpec>& layers) {
    check_chain(layers, input);
    Matrix x = input;
    for (const auto& layer : layers) {
        Matrix pre = conv_forward(graph, x, layer.params, layer.config);
        x = layer.activation ? activate(pre, layer.kind) : std::move(pre);
    }
    return x;
}

StackGrads backward_stack(const ParticleGraph& graph, const StackTape& tape, const std::vector<LayerSpec>& layers,
                          const Matrix& upstream, bool need_input_grad) {
    StackGrads result;
    result.layers.resize(layers.size());
    Matrix g = upstream;
    for (std::size_t l = layers.size(); l-- > 0;) {
        const auto& layer = layers[l];
        if (layer.activation && layer.kind == Activation::ReLU) {
            g = g.cwiseProduct((tape.pre_activation[l].array() > 0.0).cast<double>().matrix());
        }
        const bool need = l > 0 || need_input_grad;
        result.layers[l] = conv_backward(graph, tape.inputs[l], layer.params, layer.config, g, need);
        if (need) g = std::move(result.layers[l].features);
    }
    if (need_input_grad) result.input = std::move(g);
    return result;
}

}  // namespace sfbc
