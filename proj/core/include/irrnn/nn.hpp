#pragma once

#include "irrnn/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace irrnn {

enum class Activation { relu, sigmoid };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

struct NetConfig {
    int input_dim = 3;
    int hidden_layers = 4;
    int hidden_width = 64;
    int output_dim = 1;
    Activation activation = Activation::relu;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Gradients with the same shapes as the network parameters.
struct NetGradients {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;

    NetGradients& operator+=(const NetGradients& other);
    bool all_finite() const;
};

/// Fully connected network s -> W_L phi(... phi(W_0 s + b_0) ...) + b_L.
///
/// Hidden layers apply the configured activation; the output layer is linear.
/// Inputs and outputs are column-major batches: a batch of B points is a
/// D x B matrix, the matching outputs are output_dim x B.
class NeuralNet {
  public:
    NeuralNet() = default;

    /// Glorot-uniform weights, zero biases. Deterministic in config.seed.
    explicit NeuralNet(const NetConfig& config);

    /// Adopt explicit parameters (shapes are checked against `config`).
    NeuralNet(const NetConfig& config, std::vector<Matrix> weights, std::vector<Vector> biases);

    const NetConfig& config() const noexcept { return config_; }
    const std::vector<Matrix>& weights() const noexcept { return weights_; }
    const std::vector<Vector>& biases() const noexcept { return biases_; }
    std::vector<Matrix>& weights() noexcept { return weights_; }
    std::vector<Vector>& biases() noexcept { return biases_; }

    std::size_t parameter_count() const;

    Vector forward(std::span<const double> input) const;
    Matrix forward_batch(const Matrix& inputs) const;

    /// Gradients of sum_b <upstream[:, b], f(inputs[:, b])>, i.e. the
    /// batch-summed loss whose per-sample output gradient is `upstream`.
    NetGradients backward(const Matrix& inputs, const Matrix& upstream) const;

    /// params -= step * grads
    void apply(const NetGradients& grads, double step);

    NetGradients zero_gradients() const;

    friend bool operator==(const NeuralNet& a, const NeuralNet& b);

  private:
    NetConfig config_;
    std::vector<Matrix> weights_;
    std::vector<Vector> biases_;
};

struct TrainSpec {
    int epochs = 500;
    int batch_size = 32;
    double learning_rate = 0.1;
    double lr_decay = 0.995;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Per-batch objective. Given the voxel indices of a mini-batch and the
/// network outputs at those voxels (output_dim x B), returns the
/// batch-summed loss and writes d loss / d output into `output_grad`.
using BatchLoss =
    std::function<double(std::span<const Index> voxels, const Matrix& outputs, Matrix& output_grad)>;

/// Mini-batch SGD over the columns of `inputs` (D x V).
///
/// Runs spec.epochs passes of ceil(V / batch_size) steps. Voxel order is
/// reshuffled every epoch from spec.seed and the step size is
/// learning_rate * lr_decay^epoch applied to the batch-mean gradient.
/// Throws TrainingDivergedError when the loss or a gradient turns non-finite.
NeuralNet train(NeuralNet net, const TrainSpec& spec, const Matrix& inputs, const BatchLoss& loss);

void save_net(const NeuralNet& net, const std::filesystem::path& dir);
NeuralNet load_net(const std::filesystem::path& dir);

}  // namespace irrnn
