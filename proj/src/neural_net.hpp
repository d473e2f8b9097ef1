#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace pnl {

enum class Activation { sigmoid, tanh_act, relu };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Multi-output feed forward network. Hidden layers use the configured
// activation, the output layer is linear. Default topology for K portfolio
// assets on d underlyings is [d, 10, 10, K].
struct Network {
    std::vector<std::size_t> layer_sizes;
    // weights[l]: layer_sizes[l+1] x layer_sizes[l], row-major; biases[l]: layer_sizes[l+1]
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    Activation activation = Activation::sigmoid;

    std::size_t input_size() const { return layer_sizes.front(); }
    std::size_t output_size() const { return layer_sizes.back(); }
    std::size_t n_layers() const { return weights.size(); }
    std::size_t max_width() const;
    std::size_t parameter_count() const;

    static Network make(const std::vector<std::size_t>& sizes,
                        Activation activation = Activation::sigmoid);

    // Small random weights, std init_scale/sqrt(fan_in), zero biases.
    void init_random(std::uint64_t seed, double init_scale = 1.0);

    std::vector<double> forward(const std::vector<double>& input) const;

    void save_text(std::ostream& os) const;
    static Network load_text(std::istream& is);
    void save_file(const std::string& path) const;
    static Network load_file(const std::string& path);
};

// Reusable forward/backward scratch space. One per thread in hot loops;
// Network itself stays immutable and shareable.
class NetworkEval {
public:
    explicit NetworkEval(std::size_t max_width);
    NetworkEval() : NetworkEval(1) {}

    // out must have net.output_size() entries.
    void forward(const Network& net, const double* input, double* out);

private:
    std::vector<double> buf_a_;
    std::vector<double> buf_b_;
};

// Gradient with the same shape as the network parameters.
struct Gradient {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    static Gradient zeros_like(const Network& net);
};

struct TrainConfig {
    double learning_rate = 1e-2;
    std::size_t max_epochs = 500;
    std::size_t batch_size = 512;
    double tolerance = 1e-6;   // relative loss-improvement floor for early stop
    std::size_t patience = 25; // epochs without improvement before decaying/stopping
    std::size_t lr_decay_steps = 3; // plateau restarts at half the rate before giving up
    double init_scale = 1.0;
    bool normalize_inputs = true;  // honored by callers that build datasets
    bool normalize_targets = true;
    std::uint64_t seed = 1;

    void validate() const;
};

struct TrainResult {
    Network net;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::size_t epochs_run = 0;
};

class TrainingError : public std::runtime_error {
public:
    TrainingError(std::size_t epoch, double loss, const std::string& what)
        : std::runtime_error(what), epoch(epoch), loss(loss) {}
    std::size_t epoch;
    double loss;
};

// Mean over samples of the squared error summed over output components.
// weights, when nonempty, is a per-sample-per-output mask/weight matrix of
// the same shape as targets.
double mse_loss(const Network& net, const std::vector<double>& inputs,
                const std::vector<double>& targets, std::size_t n_samples,
                const std::vector<double>& weights = {});

Gradient mse_gradient(const Network& net, const std::vector<double>& inputs,
                      const std::vector<double>& targets, std::size_t n_samples,
                      const std::vector<double>& weights = {});

// Mini-batch Adam on the MSE objective. Deterministic for a given cfg.seed;
// returns the best parameters seen (full-set loss), so final <= initial.
TrainResult train(const Network& net, const std::vector<double>& inputs,
                  const std::vector<double>& targets, std::size_t n_samples,
                  const TrainConfig& cfg, const std::vector<double>& weights = {});

} // namespace pnl
