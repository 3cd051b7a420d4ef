#include "griddispatch/mlp.hpp"

#include "griddispatch/parallel.hpp"

#include <cmath>
#include <stdexcept>

namespace griddispatch::learn {

Mlp Mlp::make(const std::vector<int>& sizes, Activation hidden, Activation output, Rng& rng) {
    if (sizes.size() < 2) throw std::runtime_error("mlp: need at least input and output sizes");
    Mlp net;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        Layer layer;
        layer.in = sizes[l];
        layer.out = sizes[l + 1];
        layer.act = (l + 2 == sizes.size()) ? output : hidden;
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
        layer.w.resize(static_cast<std::size_t>(layer.in) * static_cast<std::size_t>(layer.out));
        layer.b.assign(static_cast<std::size_t>(layer.out), 0.0);
        for (auto& w : layer.w) w = rng.uniform(-bound, bound);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
}

std::vector<int> Mlp::sizes() const {
    std::vector<int> s{layers.front().in};
    for (const auto& l : layers) s.push_back(l.out);
    return s;
}

std::vector<double> Mlp::flat_params() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    for (const auto& l : layers) {
        flat.insert(flat.end(), l.w.begin(), l.w.end());
        flat.insert(flat.end(), l.b.begin(), l.b.end());
    }
    return flat;
}

void Mlp::set_flat_params(const std::vector<double>& flat) {
    if (flat.size() != param_count()) throw std::runtime_error("mlp: flat parameter size mismatch");
    std::size_t k = 0;
    for (auto& l : layers) {
        for (auto& w : l.w) w = flat[k++];
        for (auto& b : l.b) b = flat[k++];
    }
}

namespace {

inline double activate(Activation a, double z) {
    switch (a) {
        case Activation::Relu: return z > 0.0 ? z : 0.0;
        case Activation::Tanh: return std::tanh(z);
        case Activation::Identity: return z;
    }
    return z;
}

inline double activate_grad(Activation a, double z, double y) {
    switch (a) {
        case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: return 1.0 - y * y;
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

} // namespace

const std::vector<double>& forward(const Mlp& net, const std::vector<double>& input,
                                   Workspace& ws) {
    if (static_cast<int>(input.size()) != net.input_dim())
        throw std::runtime_error("mlp: input dimension mismatch");
    const std::size_t L = net.layers.size();
    ws.pre.resize(L);
    ws.post.resize(L + 1);
    ws.post[0] = input;
    for (std::size_t l = 0; l < L; ++l) {
        const auto& layer = net.layers[l];
        auto& z = ws.pre[l];
        auto& y = ws.post[l + 1];
        z.assign(static_cast<std::size_t>(layer.out), 0.0);
        y.resize(static_cast<std::size_t>(layer.out));
        const auto& x = ws.post[l];
        for (int o = 0; o < layer.out; ++o) {
            double acc = layer.b[static_cast<std::size_t>(o)];
            const double* wrow = layer.w.data() + static_cast<std::size_t>(o) * static_cast<std::size_t>(layer.in);
            for (int i = 0; i < layer.in; ++i) acc += wrow[i] * x[static_cast<std::size_t>(i)];
            z[static_cast<std::size_t>(o)] = acc;
            y[static_cast<std::size_t>(o)] = activate(layer.act, acc);
        }
    }
    return ws.post[L];
}

void backward(const Mlp& net, const Workspace& ws, const std::vector<double>& upstream,
              std::vector<double>& grad, std::vector<double>* input_grad) {
    if (grad.size() != net.param_count())
        throw std::runtime_error("mlp: gradient buffer size mismatch");
    if (static_cast<int>(upstream.size()) != net.output_dim())
        throw std::runtime_error("mlp: upstream dimension mismatch");

    // flat offsets per layer
    std::vector<std::size_t> offset(net.layers.size());
    std::size_t k = 0;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        offset[l] = k;
        k += net.layers[l].w.size() + net.layers[l].b.size();
    }

    std::vector<double> g = upstream;
    for (std::size_t li = net.layers.size(); li-- > 0;) {
        const auto& layer = net.layers[li];
        const auto& x = ws.post[li];
        const auto& z = ws.pre[li];
        const auto& y = ws.post[li + 1];
        std::vector<double> dz(static_cast<std::size_t>(layer.out));
        for (int o = 0; o < layer.out; ++o)
            dz[static_cast<std::size_t>(o)] =
                g[static_cast<std::size_t>(o)] *
                activate_grad(layer.act, z[static_cast<std::size_t>(o)], y[static_cast<std::size_t>(o)]);
        double* wg = grad.data() + offset[li];
        double* bg = wg + layer.w.size();
        for (int o = 0; o < layer.out; ++o) {
            const double d = dz[static_cast<std::size_t>(o)];
            if (d != 0.0) {
                double* row = wg + static_cast<std::size_t>(o) * static_cast<std::size_t>(layer.in);
                for (int i = 0; i < layer.in; ++i) row[i] += d * x[static_cast<std::size_t>(i)];
            }
            bg[o] += d;
        }
        if (li > 0 || input_grad != nullptr) {
            std::vector<double> gx(static_cast<std::size_t>(layer.in), 0.0);
            for (int o = 0; o < layer.out; ++o) {
                const double d = dz[static_cast<std::size_t>(o)];
                if (d == 0.0) continue;
                const double* wrow =
                    layer.w.data() + static_cast<std::size_t>(o) * static_cast<std::size_t>(layer.in);
                for (int i = 0; i < layer.in; ++i) gx[static_cast<std::size_t>(i)] += d * wrow[i];
            }
            if (li == 0) {
                *input_grad = std::move(gx);
                return;
            }
            g = std::move(gx);
        }
    }
}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad) {
    if (params.size() != grad.size()) throw std::runtime_error("adam: size mismatch");
    if (m.size() != params.size()) {
        m.assign(params.size(), 0.0);
        v.assign(params.size(), 0.0);
        t = 0;
    }
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
        params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

namespace {

std::vector<double> mse_grad_range(const Mlp& net,
                                   const std::vector<std::vector<double>>& inputs,
                                   const std::vector<std::vector<double>>& targets,
                                   std::size_t begin, std::size_t end, double& loss) {
    std::vector<double> grad(net.param_count(), 0.0);
    Workspace ws;
    std::vector<double> upstream(static_cast<std::size_t>(net.output_dim()));
    for (std::size_t s = begin; s < end; ++s) {
        const auto& y = forward(net, inputs[s], ws);
        for (std::size_t o = 0; o < y.size(); ++o) {
            const double diff = y[o] - targets[s][o];
            loss += diff * diff;
            upstream[o] = 2.0 * diff;
        }
        backward(net, ws, upstream, grad);
    }
    return grad;
}

} // namespace

std::vector<double> mse_batch_gradient(const Mlp& net,
                                       const std::vector<std::vector<double>>& inputs,
                                       const std::vector<std::vector<double>>& targets,
                                       double* loss_out) {
    const std::size_t n = inputs.size();
    if (targets.size() != n) throw std::runtime_error("mlp: inputs/targets size mismatch");
    if (n == 0) throw std::runtime_error("mlp: empty batch");
    const std::size_t blocks = std::min(kGradBlocks, n);
    std::vector<std::vector<double>> partial(blocks);
    std::vector<double> partial_loss(blocks, 0.0);
    parallel_for(blocks, [&](std::size_t b) {
        const std::size_t begin = n * b / blocks;
        const std::size_t end = n * (b + 1) / blocks;
        partial[b] = mse_grad_range(net, inputs, targets, begin, end, partial_loss[b]);
    });
    std::vector<double> grad = std::move(partial[0]);
    double loss = partial_loss[0];
    for (std::size_t b = 1; b < blocks; ++b) {
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += partial[b][i];
        loss += partial_loss[b];
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& g : grad) g *= inv;
    if (loss_out) *loss_out = loss * inv;
    return grad;
}

std::vector<double> mse_batch_gradient_serial(const Mlp& net,
                                              const std::vector<std::vector<double>>& inputs,
                                              const std::vector<std::vector<double>>& targets,
                                              double* loss_out) {
    const std::size_t n = inputs.size();
    if (targets.size() != n) throw std::runtime_error("mlp: inputs/targets size mismatch");
    if (n == 0) throw std::runtime_error("mlp: empty batch");
    const std::size_t blocks = std::min(kGradBlocks, n);
    std::vector<double> grad(net.param_count(), 0.0);
    double loss = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t begin = n * b / blocks;
        const std::size_t end = n * (b + 1) / blocks;
        double block_loss = 0.0;
        auto part = mse_grad_range(net, inputs, targets, begin, end, block_loss);
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += part[i];
        loss += block_loss;
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& g : grad) g *= inv;
    if (loss_out) *loss_out = loss * inv;
    return grad;
}

} // namespace griddispatch::learn
