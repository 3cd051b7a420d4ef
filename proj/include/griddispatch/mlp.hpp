#pragma once

#include "griddispatch/rng.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace griddispatch::learn {

enum class Activation { Relu, Tanh, Identity };

// Minimal dense feed-forward network. Parameters are plain vectors so the
// optimizer and checkpoints can treat every net as one flat array
// (layer-major, weights before biases).
struct Mlp {
    struct Layer {
        int in = 0;
        int out = 0;
        Activation act = Activation::Identity;
        std::vector<double> w; // out x in, row-major
        std::vector<double> b;
    };
    std::vector<Layer> layers;

    // sizes = {input, hidden..., output}; hidden layers get `hidden`
    // activation, the output layer `output`. Uniform fan-in init.
    static Mlp make(const std::vector<int>& sizes, Activation hidden, Activation output,
                    Rng& rng);

    int input_dim() const { return layers.front().in; }
    int output_dim() const { return layers.back().out; }
    std::size_t param_count() const;
    std::vector<int> sizes() const;

    std::vector<double> flat_params() const;
    void set_flat_params(const std::vector<double>& flat);
};

// forward/backward scratch; reuse across calls to avoid allocation churn
struct Workspace {
    std::vector<std::vector<double>> pre;  // preactivations per layer
    std::vector<std::vector<double>> post; // post[0] = input, post[l+1] = activation
};

const std::vector<double>& forward(const Mlp& net, const std::vector<double>& input,
                                   Workspace& ws);

// Accumulates dL/dparams into `grad` (flat layout) given upstream dL/dy;
// when input_grad is non-null it receives dL/dx.
void backward(const Mlp& net, const Workspace& ws, const std::vector<double>& upstream,
              std::vector<double>& grad, std::vector<double>* input_grad = nullptr);

struct Adam {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::vector<double> m, v;
    long t = 0;

    void step(std::vector<double>& params, const std::vector<double>& grad);
};

// Gradient of the batch-mean squared error  (1/n) sum_i ||f(x_i) - y_i||^2.
// The batch is split into kGradBlocks fixed blocks; block partials are
// folded in block order, so the result is identical for any worker count.
// The serial variant is the in-order reference the tests compare against.
inline constexpr std::size_t kGradBlocks = 16;
std::vector<double> mse_batch_gradient(const Mlp& net,
                                       const std::vector<std::vector<double>>& inputs,
                                       const std::vector<std::vector<double>>& targets,
                                       double* loss_out = nullptr);
std::vector<double> mse_batch_gradient_serial(const Mlp& net,
                                              const std::vector<std::vector<double>>& inputs,
                                              const std::vector<std::vector<double>>& targets,
                                              double* loss_out = nullptr);

} // namespace griddispatch::learn
