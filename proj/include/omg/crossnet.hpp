#pragma once

/// @file crossnet.hpp
/// @brief The material -> cross-section network f(m): a small MLP with two
/// ReLU hidden layers and a sigmoid output, with hand-written forward and
/// reverse passes. No autodiff framework anywhere: the reverse pass is the
/// thing under test, certified against central finite differences.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "omg/errors.hpp"
#include "omg/geometry.hpp"
#include "omg/math.hpp"

namespace omg {

/// Weights are row-major [out x in]; layer L maps sizes[L] -> sizes[L+1].
/// Hidden activations ReLU, output activation logistic sigmoid, so the
/// forward output is strictly inside (0,1).
struct CrossSectionNetwork {
    std::vector<int> layer_sizes;               // {D_in, hidden, hidden, 1}
    std::vector<std::vector<double>> weights;   // one flat array per layer
    std::vector<std::vector<double>> biases;

    int input_dim() const { return layer_sizes.empty() ? 0 : layer_sizes.front(); }
    int layer_count() const { return static_cast<int>(weights.size()); }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& w : weights) n += w.size();
        for (const auto& b : biases) n += b.size();
        return n;
    }
};

/// Per-layer pre- and post-activations of one forward evaluation; exactly
/// what the reverse pass needs.
struct ForwardCache {
    std::vector<double> input;
    std::vector<std::vector<double>> pre;   // z_l
    std::vector<std::vector<double>> post;  // h_l = act(z_l); back() holds sigma
};

/// Parameter-shaped gradient block for one network.
struct NetworkGradients {
    std::vector<std::vector<double>> dweights;
    std::vector<std::vector<double>> dbiases;

    void add(const NetworkGradients& o) {
        for (std::size_t l = 0; l < dweights.size(); ++l) {
            for (std::size_t i = 0; i < dweights[l].size(); ++i) dweights[l][i] += o.dweights[l][i];
            for (std::size_t i = 0; i < dbiases[l].size(); ++i) dbiases[l][i] += o.dbiases[l][i];
        }
    }
};

inline NetworkGradients zero_gradients(const CrossSectionNetwork& net) {
    NetworkGradients g;
    g.dweights.reserve(net.weights.size());
    g.dbiases.reserve(net.biases.size());
    for (const auto& w : net.weights) g.dweights.emplace_back(w.size(), 0.0);
    for (const auto& b : net.biases) g.dbiases.emplace_back(b.size(), 0.0);
    return g;
}

/// Deterministic initialization: weights uniform in +-sqrt(1/fan_in),
/// biases zero. Same seed, same bits.
inline CrossSectionNetwork init_network(std::uint64_t seed, int input_dim, int hidden_dim = 128) {
    if (input_dim < 1) throw invalid_input("init_network: input_dim must be >= 1");
    if (hidden_dim < 1) throw invalid_input("init_network: hidden_dim must be >= 1");
    CrossSectionNetwork net;
    net.layer_sizes = {input_dim, hidden_dim, hidden_dim, 1};
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
        const int fan_in = net.layer_sizes[l];
        const int fan_out = net.layer_sizes[l + 1];
        const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        std::vector<double> w(static_cast<std::size_t>(fan_in) * static_cast<std::size_t>(fan_out));
        for (double& v : w) v = dist(rng);
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(static_cast<std::size_t>(fan_out), 0.0);
    }
    return net;
}

/// Feature vector fed to f: post-activation (clamped) material values.
inline std::vector<double> material_features(const Material& m) {
    return {m.albedo.r, m.albedo.g, m.albedo.b, m.roughness, m.metallic};
}

struct ForwardResult {
    double sigma = 0.0;
    ForwardCache cache;
};

/// sigma = sigmoid(W2 relu(W1 relu(W0 m + b0) + b1) + b2).
inline ForwardResult forward(const CrossSectionNetwork& net, std::span<const double> input) {
    if (static_cast<int>(input.size()) != net.input_dim())
        throw invalid_input("crossnet forward: input dimension mismatch");
    ForwardResult out;
    out.cache.input.assign(input.begin(), input.end());
    const std::vector<double>* h = &out.cache.input;
    const int layers = net.layer_count();
    out.cache.pre.resize(static_cast<std::size_t>(layers));
    out.cache.post.resize(static_cast<std::size_t>(layers));
    for (int l = 0; l < layers; ++l) {
        const int nin = net.layer_sizes[static_cast<std::size_t>(l)];
        const int nout = net.layer_sizes[static_cast<std::size_t>(l) + 1];
        const double* w = net.weights[static_cast<std::size_t>(l)].data();
        std::vector<double>& z = out.cache.pre[static_cast<std::size_t>(l)];
        z.assign(net.biases[static_cast<std::size_t>(l)].begin(), net.biases[static_cast<std::size_t>(l)].end());
        for (int o = 0; o < nout; ++o) {
            const double* row = w + static_cast<std::size_t>(o) * static_cast<std::size_t>(nin);
            double acc = 0.0;
            for (int i = 0; i < nin; ++i) acc += row[i] * (*h)[static_cast<std::size_t>(i)];
            z[static_cast<std::size_t>(o)] += acc;
        }
        std::vector<double>& a = out.cache.post[static_cast<std::size_t>(l)];
        a.resize(static_cast<std::size_t>(nout));
        if (l + 1 == layers) {
            for (int o = 0; o < nout; ++o) a[static_cast<std::size_t>(o)] = sigmoid(z[static_cast<std::size_t>(o)]);
        } else {
            for (int o = 0; o < nout; ++o) a[static_cast<std::size_t>(o)] = std::max(0.0, z[static_cast<std::size_t>(o)]);
        }
        h = &a;
    }
    out.sigma = out.cache.post.back().front();
    return out;
}

struct BackwardResult {
    std::vector<double> dinput;
    NetworkGradients dparams;
};

/// Exact reverse-mode gradients of sigma w.r.t. input and all parameters,
/// scaled by dsigma. The cache must come from a forward call against the
/// same network.
inline BackwardResult backward(const CrossSectionNetwork& net, const ForwardCache& cache, double dsigma) {
    const int layers = net.layer_count();
    if (static_cast<int>(cache.pre.size()) != layers || static_cast<int>(cache.post.size()) != layers ||
        static_cast<int>(cache.input.size()) != net.input_dim())
        throw invalid_state("crossnet backward: cache does not match network");
    for (int l = 0; l < layers; ++l)
        if (static_cast<int>(cache.pre[static_cast<std::size_t>(l)].size()) != net.layer_sizes[static_cast<std::size_t>(l) + 1])
            throw invalid_state("crossnet backward: cache does not match network");

    BackwardResult out;
    out.dparams = zero_gradients(net);

    // d sigma / d z_last through the sigmoid
    const double s = cache.post.back().front();
    std::vector<double> dz{dsigma * sigmoid_derivative_from_output(s)};

    for (int l = layers - 1; l >= 0; --l) {
        const int nin = net.layer_sizes[static_cast<std::size_t>(l)];
        const int nout = net.layer_sizes[static_cast<std::size_t>(l) + 1];
        const std::vector<double>& hin = l == 0 ? cache.input : cache.post[static_cast<std::size_t>(l) - 1];
        const double* w = net.weights[static_cast<std::size_t>(l)].data();
        double* dw = out.dparams.dweights[static_cast<std::size_t>(l)].data();
        double* db = out.dparams.dbiases[static_cast<std::size_t>(l)].data();

        std::vector<double> dh(static_cast<std::size_t>(nin), 0.0);
        for (int o = 0; o < nout; ++o) {
            const double g = dz[static_cast<std::size_t>(o)];
            db[o] += g;
            const double* row = w + static_cast<std::size_t>(o) * static_cast<std::size_t>(nin);
            double* drow = dw + static_cast<std::size_t>(o) * static_cast<std::size_t>(nin);
            for (int i = 0; i < nin; ++i) {
                drow[i] += g * hin[static_cast<std::size_t>(i)];
                dh[static_cast<std::size_t>(i)] += g * row[i];
            }
        }
        if (l == 0) {
            out.dinput = std::move(dh);
        } else {
            // ReLU gate of the layer below (subgradient 0 at z == 0)
            const std::vector<double>& zprev = cache.pre[static_cast<std::size_t>(l) - 1];
            dz.resize(static_cast<std::size_t>(nin));
            for (int i = 0; i < nin; ++i)
                dz[static_cast<std::size_t>(i)] =
                    zprev[static_cast<std::size_t>(i)] > 0.0 ? dh[static_cast<std::size_t>(i)] : 0.0;
        }
    }
    return out;
}

} // namespace omg
