#include "neural_net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "rng.hpp"

namespace pnl {

namespace {

double apply_activation(Activation a, double x) {
    switch (a) {
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case Activation::tanh_act: return std::tanh(x);
        case Activation::relu: return x > 0.0 ? x : 0.0;
    }
    return x;
}

// derivative expressed through the activation value
double activation_deriv(Activation a, double value) {
    switch (a) {
        case Activation::sigmoid: return value * (1.0 - value);
        case Activation::tanh_act: return 1.0 - value * value;
        case Activation::relu: return value > 0.0 ? 1.0 : 0.0;
    }
    return 1.0;
}

void check_dataset(const Network& net, const std::vector<double>& inputs,
                   const std::vector<double>& targets, std::size_t n_samples,
                   const std::vector<double>& weights) {
    if (n_samples == 0) {
        throw std::invalid_argument("empty batch");
    }
    if (inputs.size() != n_samples * net.input_size()) {
        throw std::invalid_argument("inputs size does not match n_samples * input width");
    }
    if (targets.size() != n_samples * net.output_size()) {
        throw std::invalid_argument("targets size does not match n_samples * output width");
    }
    if (!weights.empty() && weights.size() != targets.size()) {
        throw std::invalid_argument("weights must be empty or match targets shape");
    }
}

} // namespace

const char* to_string(Activation a) {
    switch (a) {
        case Activation::sigmoid: return "sigmoid";
        case Activation::tanh_act: return "tanh";
        case Activation::relu: return "relu";
    }
    throw std::invalid_argument("to_string: unknown activation");
}

Activation activation_from_string(const std::string& s) {
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "tanh") return Activation::tanh_act;
    if (s == "relu") return Activation::relu;
    throw std::invalid_argument("unknown activation: " + s);
}

std::size_t Network::max_width() const {
    return *std::max_element(layer_sizes.begin(), layer_sizes.end());
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
}

Network Network::make(const std::vector<std::size_t>& sizes, Activation activation) {
    if (sizes.size() < 2) {
        throw std::invalid_argument("Network::make: need at least input and output layer");
    }
    for (std::size_t s : sizes) {
        if (s == 0) throw std::invalid_argument("Network::make: zero-width layer");
    }
    Network net;
    net.layer_sizes = sizes;
    net.activation = activation;
    net.weights.resize(sizes.size() - 1);
    net.biases.resize(sizes.size() - 1);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        net.weights[l].assign(sizes[l + 1] * sizes[l], 0.0);
        net.biases[l].assign(sizes[l + 1], 0.0);
    }
    return net;
}

void Network::init_random(std::uint64_t seed, double init_scale) {
    NormalStream stream(seed, 0x6e657469); // "neti"
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const double scale = init_scale / std::sqrt(static_cast<double>(layer_sizes[l]));
        for (double& w : weights[l]) w = scale * stream.next();
        for (double& b : biases[l]) b = 0.0;
    }
}

NetworkEval::NetworkEval(std::size_t max_width)
    : buf_a_(std::max<std::size_t>(max_width, 1)), buf_b_(std::max<std::size_t>(max_width, 1)) {}

void NetworkEval::forward(const Network& net, const double* input, double* out) {
    const std::size_t n_layers = net.n_layers();
    const double* src = input;
    double* cur = buf_a_.data();
    double* nxt = buf_b_.data();
    for (std::size_t l = 0; l < n_layers; ++l) {
        const std::size_t in_w = net.layer_sizes[l];
        const std::size_t out_w = net.layer_sizes[l + 1];
        const double* w = net.weights[l].data();
        const double* b = net.biases[l].data();
        const bool last = (l + 1 == n_layers);
        double* dst = last ? out : cur;
        for (std::size_t o = 0; o < out_w; ++o) {
            const double* row = w + o * in_w;
            double acc = b[o];
            for (std::size_t i = 0; i < in_w; ++i) acc += row[i] * src[i];
            dst[o] = last ? acc : apply_activation(net.activation, acc);
        }
        src = dst;
        std::swap(cur, nxt);
    }
}

std::vector<double> Network::forward(const std::vector<double>& input) const {
    if (input.size() != input_size()) {
        throw std::invalid_argument("forward: input width mismatch");
    }
    NetworkEval eval(max_width());
    std::vector<double> out(output_size());
    eval.forward(*this, input.data(), out.data());
    return out;
}

Gradient Gradient::zeros_like(const Network& net) {
    Gradient g;
    g.weights.resize(net.weights.size());
    g.biases.resize(net.biases.size());
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        g.weights[l].assign(net.weights[l].size(), 0.0);
        g.biases[l].assign(net.biases[l].size(), 0.0);
    }
    return g;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate > 0");
    if (max_epochs < 1) throw std::invalid_argument("TrainConfig: max_epochs >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size >= 1");
    if (!(tolerance >= 0.0)) throw std::invalid_argument("TrainConfig: tolerance >= 0");
    if (!(init_scale > 0.0)) throw std::invalid_argument("TrainConfig: init_scale > 0");
}

namespace {

// Forward with stored activations, backward pass, gradient accumulation for
// one sample range. Activations buffer holds every layer output per sample.
struct BackpropScratch {
    std::vector<std::vector<double>> acts;  // acts[l]: layer_sizes[l] values
    std::vector<std::vector<double>> delta; // delta[l]: layer_sizes[l+1] values

    explicit BackpropScratch(const Network& net) {
        acts.resize(net.layer_sizes.size());
        for (std::size_t l = 0; l < net.layer_sizes.size(); ++l) {
            acts[l].resize(net.layer_sizes[l]);
        }
        delta.resize(net.n_layers());
        for (std::size_t l = 0; l < net.n_layers(); ++l) {
            delta[l].resize(net.layer_sizes[l + 1]);
        }
    }
};

// Accumulates d(sum-of-squared-errors)/d(params) for samples [b, e) into grad,
// returns the summed squared error. Division by n_samples happens at the caller.
double accumulate_gradient(const Network& net, const double* inputs, const double* targets,
                           const double* weights, std::size_t b, std::size_t e,
                           Gradient& grad, BackpropScratch& scratch) {
    const std::size_t in_w = net.input_size();
    const std::size_t out_w = net.output_size();
    const std::size_t n_layers = net.n_layers();
    double sse = 0.0;
    for (std::size_t s = b; s < e; ++s) {
        const double* x = inputs + s * in_w;
        std::copy(x, x + in_w, scratch.acts[0].begin());
        // forward
        for (std::size_t l = 0; l < n_layers; ++l) {
            const std::size_t li = net.layer_sizes[l];
            const std::size_t lo = net.layer_sizes[l + 1];
            const double* w = net.weights[l].data();
            const double* bias = net.biases[l].data();
            const double* src = scratch.acts[l].data();
            double* dst = scratch.acts[l + 1].data();
            const bool last = (l + 1 == n_layers);
            for (std::size_t o = 0; o < lo; ++o) {
                const double* row = w + o * li;
                double acc = bias[o];
                for (std::size_t i = 0; i < li; ++i) acc += row[i] * src[i];
                dst[o] = last ? acc : apply_activation(net.activation, acc);
            }
        }
        // output delta: d(sse)/d(y_o) = 2 w_o (y_o - t_o)
        const double* t = targets + s * out_w;
        const double* wt = weights ? weights + s * out_w : nullptr;
        double* dout = scratch.delta[n_layers - 1].data();
        const double* y = scratch.acts[n_layers].data();
        for (std::size_t o = 0; o < out_w; ++o) {
            const double err = y[o] - t[o];
            const double wgt = wt ? wt[o] : 1.0;
            sse += wgt * err * err;
            dout[o] = 2.0 * wgt * err;
        }
        // backward
        for (std::size_t l = n_layers; l-- > 0;) {
            const std::size_t li = net.layer_sizes[l];
            const std::size_t lo = net.layer_sizes[l + 1];
            const double* src = scratch.acts[l].data();
            const double* d = scratch.delta[l].data();
            double* gw = grad.weights[l].data();
            double* gb = grad.biases[l].data();
            for (std::size_t o = 0; o < lo; ++o) {
                const double dv = d[o];
                gb[o] += dv;
                double* row = gw + o * li;
                for (std::size_t i = 0; i < li; ++i) row[i] += dv * src[i];
            }
            if (l > 0) {
                // propagate into previous activation, fold in its derivative
                double* dprev = scratch.delta[l - 1].data();
                const double* w = net.weights[l].data();
                for (std::size_t i = 0; i < li; ++i) {
                    double acc = 0.0;
                    for (std::size_t o = 0; o < lo; ++o) acc += w[o * li + i] * d[o];
                    dprev[i] = acc * activation_deriv(net.activation, src[i]);
                }
            }
        }
    }
    return sse;
}

double full_loss(const Network& net, const double* inputs, const double* targets,
                 const double* weights, std::size_t n_samples, NetworkEval& eval,
                 std::vector<double>& ybuf) {
    const std::size_t in_w = net.input_size();
    const std::size_t out_w = net.output_size();
    double sse = 0.0;
    for (std::size_t s = 0; s < n_samples; ++s) {
        eval.forward(net, inputs + s * in_w, ybuf.data());
        const double* t = targets + s * out_w;
        const double* wt = weights ? weights + s * out_w : nullptr;
        for (std::size_t o = 0; o < out_w; ++o) {
            const double err = ybuf[o] - t[o];
            sse += (wt ? wt[o] : 1.0) * err * err;
        }
    }
    return sse / static_cast<double>(n_samples);
}

} // namespace

double mse_loss(const Network& net, const std::vector<double>& inputs,
                const std::vector<double>& targets, std::size_t n_samples,
                const std::vector<double>& weights) {
    check_dataset(net, inputs, targets, n_samples, weights);
    NetworkEval eval(net.max_width());
    std::vector<double> ybuf(net.output_size());
    return full_loss(net, inputs.data(), targets.data(),
                     weights.empty() ? nullptr : weights.data(), n_samples, eval, ybuf);
}

Gradient mse_gradient(const Network& net, const std::vector<double>& inputs,
                      const std::vector<double>& targets, std::size_t n_samples,
                      const std::vector<double>& weights) {
    check_dataset(net, inputs, targets, n_samples, weights);
    Gradient grad = Gradient::zeros_like(net);
    BackpropScratch scratch(net);
    accumulate_gradient(net, inputs.data(), targets.data(),
                        weights.empty() ? nullptr : weights.data(), 0, n_samples, grad, scratch);
    const double inv_n = 1.0 / static_cast<double>(n_samples);
    for (auto& layer : grad.weights) {
        for (double& g : layer) g *= inv_n;
    }
    for (auto& layer : grad.biases) {
        for (double& g : layer) g *= inv_n;
    }
    return grad;
}

TrainResult train(const Network& net, const std::vector<double>& inputs,
                  const std::vector<double>& targets, std::size_t n_samples,
                  const TrainConfig& cfg, const std::vector<double>& weights) {
    cfg.validate();
    check_dataset(net, inputs, targets, n_samples, weights);

    Network current = net;
    const double* in = inputs.data();
    const double* tg = targets.data();
    const double* wt = weights.empty() ? nullptr : weights.data();
    const std::size_t in_w = current.input_size();
    const std::size_t out_w = current.output_size();

    NetworkEval eval(current.max_width());
    std::vector<double> ybuf(out_w);

    TrainResult result;
    result.initial_loss = full_loss(current, in, tg, wt, n_samples, eval, ybuf);

    Network best = current;
    double best_loss = result.initial_loss;

    // Adam state
    Gradient m = Gradient::zeros_like(current);
    Gradient v = Gradient::zeros_like(current);
    Gradient grad = Gradient::zeros_like(current);
    BackpropScratch scratch(current);
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double beta1_t = 1.0, beta2_t = 1.0;

    std::vector<std::size_t> order(n_samples);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 0x74726e)); // "trn"

    std::vector<double> batch_in;
    std::vector<double> batch_tg;
    std::vector<double> batch_wt;

    const std::size_t batch = std::min(cfg.batch_size, n_samples);
    batch_in.resize(batch * in_w);
    batch_tg.resize(batch * out_w);
    if (wt) batch_wt.resize(batch * out_w);

    std::size_t stall = 0;
    std::size_t decays = 0;
    double lr = cfg.learning_rate;
    std::size_t epoch = 0;
    for (epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t start = 0; start < n_samples; start += batch) {
            const std::size_t bsz = std::min(batch, n_samples - start);
            for (std::size_t s = 0; s < bsz; ++s) {
                const std::size_t src = order[start + s];
                std::copy(in + src * in_w, in + (src + 1) * in_w, batch_in.begin() + s * in_w);
                std::copy(tg + src * out_w, tg + (src + 1) * out_w, batch_tg.begin() + s * out_w);
                if (wt) {
                    std::copy(wt + src * out_w, wt + (src + 1) * out_w,
                              batch_wt.begin() + s * out_w);
                }
            }
            for (auto& layer : grad.weights) std::fill(layer.begin(), layer.end(), 0.0);
            for (auto& layer : grad.biases) std::fill(layer.begin(), layer.end(), 0.0);
            accumulate_gradient(current, batch_in.data(), batch_tg.data(),
                                wt ? batch_wt.data() : nullptr, 0, bsz, grad, scratch);
            const double inv_b = 1.0 / static_cast<double>(bsz);
            beta1_t *= beta1;
            beta2_t *= beta2;
            const double corr1 = 1.0 / (1.0 - beta1_t);
            const double corr2 = 1.0 / (1.0 - beta2_t);
            for (std::size_t l = 0; l < current.weights.size(); ++l) {
                for (int part = 0; part < 2; ++part) {
                    auto& p = part == 0 ? current.weights[l] : current.biases[l];
                    auto& gm = part == 0 ? m.weights[l] : m.biases[l];
                    auto& gv = part == 0 ? v.weights[l] : v.biases[l];
                    auto& gg = part == 0 ? grad.weights[l] : grad.biases[l];
                    for (std::size_t i = 0; i < p.size(); ++i) {
                        const double g = gg[i] * inv_b;
                        gm[i] = beta1 * gm[i] + (1.0 - beta1) * g;
                        gv[i] = beta2 * gv[i] + (1.0 - beta2) * g * g;
                        p[i] -= lr * (gm[i] * corr1) / (std::sqrt(gv[i] * corr2) + eps);
                    }
                }
            }
        }
        const double loss = full_loss(current, in, tg, wt, n_samples, eval, ybuf);
        if (!std::isfinite(loss)) {
            throw TrainingError(epoch, loss,
                                "training diverged at epoch " + std::to_string(epoch));
        }
        if (loss < best_loss * (1.0 - cfg.tolerance)) {
            best_loss = loss;
            best = current;
            stall = 0;
        } else {
            if (loss < best_loss) {
                best_loss = loss;
                best = current;
            }
            ++stall;
            if (stall >= cfg.patience) {
                if (decays >= cfg.lr_decay_steps) break;
                // plateau: restart from the best point at half the rate
                ++decays;
                lr *= 0.5;
                current = best;
                stall = 0;
            }
        }
    }

    // exact MSE optimum for the output biases given the rest: shift each
    // output by its (weighted) mean residual, zeroing aggregate fit bias
    {
        const std::size_t k = out_w;
        std::vector<double> resid(k, 0.0);
        std::vector<double> wsum(k, 0.0);
        for (std::size_t s = 0; s < n_samples; ++s) {
            eval.forward(best, in + s * in_w, ybuf.data());
            for (std::size_t o = 0; o < k; ++o) {
                const double w = wt ? wt[s * k + o] : 1.0;
                resid[o] += w * (tg[s * k + o] - ybuf[o]);
                wsum[o] += w;
            }
        }
        for (std::size_t o = 0; o < k; ++o) {
            if (wsum[o] > 0.0) best.biases.back()[o] += resid[o] / wsum[o];
        }
        const double centered = full_loss(best, in, tg, wt, n_samples, eval, ybuf);
        if (centered <= best_loss) {
            best_loss = centered;
        } else {
            // numerically possible only with degenerate weights; undo
            for (std::size_t o = 0; o < k; ++o) {
                if (wsum[o] > 0.0) best.biases.back()[o] -= resid[o] / wsum[o];
            }
        }
    }

    result.net = std::move(best);
    result.final_loss = best_loss;
    result.epochs_run = std::min(epoch, cfg.max_epochs);
    return result;
}

void Network::save_text(std::ostream& os) const {
    os << "ffnn 1\n";
    os << layer_sizes.size() << "\n";
    for (std::size_t i = 0; i < layer_sizes.size(); ++i) {
        os << layer_sizes[i] << (i + 1 < layer_sizes.size() ? ' ' : '\n');
    }
    os << to_string(activation) << "\n";
    char buf[64];
    for (const auto& layer : weights) {
        for (double w : layer) {
            std::snprintf(buf, sizeof(buf), "%.17g\n", w);
            os << buf;
        }
    }
    for (const auto& layer : biases) {
        for (double b : layer) {
            std::snprintf(buf, sizeof(buf), "%.17g\n", b);
            os << buf;
        }
    }
}

Network Network::load_text(std::istream& is) {
    std::string magic;
    int version = 0;
    is >> magic >> version;
    if (magic != "ffnn" || version != 1) {
        throw std::runtime_error("Network::load_text: bad header");
    }
    std::size_t n_sizes = 0;
    is >> n_sizes;
    if (!is || n_sizes < 2 || n_sizes > 64) {
        throw std::runtime_error("Network::load_text: bad layer count");
    }
    std::vector<std::size_t> sizes(n_sizes);
    for (auto& s : sizes) is >> s;
    std::string act;
    is >> act;
    if (!is) throw std::runtime_error("Network::load_text: truncated header");
    Network net = Network::make(sizes, activation_from_string(act));
    for (auto& layer : net.weights) {
        for (double& w : layer) is >> w;
    }
    for (auto& layer : net.biases) {
        for (double& b : layer) is >> b;
    }
    if (!is) throw std::runtime_error("Network::load_text: truncated parameters");
    return net;
}

void Network::save_file(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    save_text(os);
    if (!os) throw std::runtime_error("write failed: " + path);
}

Network Network::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open for read: " + path);
    return load_text(is);
}

} // namespace pnl
