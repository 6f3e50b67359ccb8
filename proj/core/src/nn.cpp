#include "irrnn/nn.hpp"

#include "array_io.hpp"
#include "irrnn/error.hpp"
#include "irrnn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace irrnn {

std::string_view to_string(Activation a) {
    return a == Activation::relu ? "relu" : "sigmoid";
}

Activation parse_activation(std::string_view name) {
    if (name == "relu") {
        return Activation::relu;
    }
    if (name == "sigmoid") {
        return Activation::sigmoid;
    }
    throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

void NetConfig::validate() const {
    if (input_dim < 1 || hidden_layers < 1 || hidden_width < 1 || output_dim < 1) {
        throw InvalidArgument("network config needs input_dim, hidden_layers, hidden_width, output_dim >= 1");
    }
}

void TrainSpec::validate() const {
    if (epochs < 0) {
        throw InvalidArgument("epochs must be >= 0");
    }
    if (batch_size < 1) {
        throw InvalidArgument("batch_size must be >= 1");
    }
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw InvalidArgument("learning_rate must be finite and non-negative");
    }
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) {
        throw InvalidArgument("lr_decay must lie in (0, 1]");
    }
}

NetGradients& NetGradients::operator+=(const NetGradients& other) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        weights[l] += other.weights[l];
        biases[l] += other.biases[l];
    }
    return *this;
}

bool NetGradients::all_finite() const {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (!weights[l].allFinite() || !biases[l].allFinite()) {
            return false;
        }
    }
    return true;
}

namespace {

std::vector<std::pair<int, int>> layer_shapes(const NetConfig& c) {
    std::vector<std::pair<int, int>> shapes;
    shapes.emplace_back(c.hidden_width, c.input_dim);
    for (int l = 1; l < c.hidden_layers; ++l) {
        shapes.emplace_back(c.hidden_width, c.hidden_width);
    }
    shapes.emplace_back(c.output_dim, c.hidden_width);
    return shapes;
}

// Activations of one batch, kept for the backward pass.
struct Workspace {
    std::vector<Matrix> hidden;  // L matrices, K x B, post-activation
};

void activate(Matrix& m, Activation a) {
    if (a == Activation::relu) {
        m = m.cwiseMax(0.0);
    } else {
        m = (1.0 + (-m.array()).exp()).inverse().matrix();
    }
}

Matrix run_forward(const NeuralNet& net, const Matrix& inputs, Workspace& ws) {
    const auto& W = net.weights();
    const auto& b = net.biases();
    const std::size_t hidden = W.size() - 1;
    ws.hidden.resize(hidden);
    const Matrix* prev = &inputs;
    for (std::size_t l = 0; l < hidden; ++l) {
        Matrix& h = ws.hidden[l];
        h.noalias() = W[l] * *prev;
        h.colwise() += b[l];
        activate(h, net.config().activation);
        prev = &h;
    }
    Matrix out = W[hidden] * *prev;
    out.colwise() += b[hidden];
    return out;
}

void run_backward(const NeuralNet& net, const Matrix& inputs, const Matrix& upstream, const Workspace& ws,
                  NetGradients& g) {
    const auto& W = net.weights();
    const std::size_t hidden = W.size() - 1;
    g.weights[hidden].noalias() = upstream * ws.hidden[hidden - 1].transpose();
    g.biases[hidden] = upstream.rowwise().sum();
    Matrix delta = W[hidden].transpose() * upstream;
    for (std::size_t l = hidden; l-- > 0;) {
        const Matrix& h = ws.hidden[l];
        if (net.config().activation == Activation::relu) {
            delta = (h.array() > 0.0).select(delta, 0.0);
        } else {
            delta.array() *= h.array() * (1.0 - h.array());
        }
        const Matrix& below = l == 0 ? inputs : ws.hidden[l - 1];
        g.weights[l].noalias() = delta * below.transpose();
        g.biases[l] = delta.rowwise().sum();
        if (l > 0) {
            delta = W[l].transpose() * delta;
        }
    }
}

}  // namespace

NeuralNet::NeuralNet(const NetConfig& config) : config_(config) {
    config_.validate();
    Rng rng(config_.seed);
    for (auto [rows, cols] : layer_shapes(config_)) {
        const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Matrix w(rows, cols);
        // Fill row-major so the draw order matches the on-disk layout.
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                w(r, c) = dist(rng);
            }
        }
        weights_.push_back(std::move(w));
        biases_.push_back(Vector::Zero(rows));
    }
}

NeuralNet::NeuralNet(const NetConfig& config, std::vector<Matrix> weights, std::vector<Vector> biases)
    : config_(config), weights_(std::move(weights)), biases_(std::move(biases)) {
    config_.validate();
    auto shapes = layer_shapes(config_);
    if (weights_.size() != shapes.size() || biases_.size() != shapes.size()) {
        throw InvalidArgument("expected " + std::to_string(shapes.size()) + " layers");
    }
    for (std::size_t l = 0; l < shapes.size(); ++l) {
        if (weights_[l].rows() != shapes[l].first || weights_[l].cols() != shapes[l].second ||
            biases_[l].size() != shapes[l].first) {
            throw InvalidArgument("layer " + std::to_string(l) + " has the wrong shape");
        }
        if (!weights_[l].allFinite() || !biases_[l].allFinite()) {
            throw InvalidArgument("layer " + std::to_string(l) + " has non-finite parameters");
        }
    }
}

std::size_t NeuralNet::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
    }
    return n;
}

Vector NeuralNet::forward(std::span<const double> input) const {
    if (static_cast<int>(input.size()) != config_.input_dim) {
        throw InvalidArgument("input has length " + std::to_string(input.size()) + ", network expects " +
                              std::to_string(config_.input_dim));
    }
    Matrix in = Eigen::Map<const Vector>(input.data(), static_cast<Index>(input.size()));
    return forward_batch(in).col(0);
}

Matrix NeuralNet::forward_batch(const Matrix& inputs) const {
    if (inputs.rows() != config_.input_dim) {
        throw InvalidArgument("input batch has " + std::to_string(inputs.rows()) + " rows, network expects " +
                              std::to_string(config_.input_dim));
    }
    Workspace ws;
    return run_forward(*this, inputs, ws);
}

NetGradients NeuralNet::zero_gradients() const {
    NetGradients g;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        g.weights.push_back(Matrix::Zero(weights_[l].rows(), weights_[l].cols()));
        g.biases.push_back(Vector::Zero(biases_[l].size()));
    }
    return g;
}

NetGradients NeuralNet::backward(const Matrix& inputs, const Matrix& upstream) const {
    if (inputs.cols() == 0) {
        throw InvalidArgument("backward needs a non-empty batch");
    }
    if (inputs.rows() != config_.input_dim || upstream.rows() != config_.output_dim ||
        upstream.cols() != inputs.cols()) {
        throw InvalidArgument("backward: inputs must be input_dim x B and upstream output_dim x B");
    }
    Workspace ws;
    run_forward(*this, inputs, ws);
    NetGradients g = zero_gradients();
    run_backward(*this, inputs, upstream, ws, g);
    return g;
}

void NeuralNet::apply(const NetGradients& grads, double step) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        weights_[l].noalias() -= step * grads.weights[l];
        biases_[l].noalias() -= step * grads.biases[l];
    }
}

bool operator==(const NeuralNet& a, const NeuralNet& b) {
    if (a.weights_.size() != b.weights_.size()) {
        return false;
    }
    for (std::size_t l = 0; l < a.weights_.size(); ++l) {
        if (a.weights_[l].rows() != b.weights_[l].rows() || a.weights_[l].cols() != b.weights_[l].cols() ||
            a.weights_[l] != b.weights_[l] || a.biases_[l] != b.biases_[l]) {
            return false;
        }
    }
    const auto& ca = a.config_;
    const auto& cb = b.config_;
    return ca.input_dim == cb.input_dim && ca.hidden_layers == cb.hidden_layers &&
           ca.hidden_width == cb.hidden_width && ca.output_dim == cb.output_dim && ca.activation == cb.activation;
}

NeuralNet train(NeuralNet net, const TrainSpec& spec, const Matrix& inputs, const BatchLoss& loss) {
    spec.validate();
    const auto& cfg = net.config();
    if (inputs.rows() != cfg.input_dim || inputs.cols() == 0) {
        throw InvalidArgument("training inputs must be input_dim x V with V >= 1");
    }
    const Index total = inputs.cols();
    const Index batch = std::min<Index>(spec.batch_size, total);

    std::vector<Index> order(static_cast<std::size_t>(total));
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng(spec.seed);

    Workspace ws;
    NetGradients grads = net.zero_gradients();
    Matrix batch_inputs;
    Matrix output_grad;
    std::size_t step = 0;
    double lr = spec.learning_rate;

    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (Index start = 0; start < total; start += batch) {
            const Index count = std::min(batch, total - start);
            std::span<const Index> voxels(order.data() + start, static_cast<std::size_t>(count));
            batch_inputs.resize(inputs.rows(), count);
            for (Index k = 0; k < count; ++k) {
                batch_inputs.col(k) = inputs.col(voxels[static_cast<std::size_t>(k)]);
            }
            Matrix outputs = run_forward(net, batch_inputs, ws);
            output_grad.setZero(outputs.rows(), outputs.cols());
            const double value = loss(voxels, outputs, output_grad);
            if (!std::isfinite(value)) {
                throw TrainingDivergedError(step, "non-finite loss");
            }
            run_backward(net, batch_inputs, output_grad, ws, grads);
            if (!grads.all_finite()) {
                throw TrainingDivergedError(step, "non-finite gradient");
            }
            net.apply(grads, lr / static_cast<double>(count));
            ++step;
        }
        lr *= spec.lr_decay;
    }
    return net;
}

void save_net(const NeuralNet& net, const std::filesystem::path& dir) {
    const auto& c = net.config();
    nlohmann::json m = detail::encoding_fields();
    m["format"] = "irrnn-net";
    m["version"] = 1;
    m["input_dim"] = c.input_dim;
    m["hidden_layers"] = c.hidden_layers;
    m["hidden_width"] = c.hidden_width;
    m["output_dim"] = c.output_dim;
    m["activation"] = std::string(to_string(c.activation));
    m["seed"] = c.seed;
    nlohmann::json shapes = nlohmann::json::array();
    for (const auto& w : net.weights()) {
        shapes.push_back({w.rows(), w.cols()});
    }
    m["layer_shapes"] = shapes;
    m["layout"] = "per layer: W row-major, then b";
    m["parameters"] = "params.f64";
    m["parameter_count"] = net.parameter_count();
    detail::write_manifest(dir, m);

    std::vector<double> flat;
    flat.reserve(net.parameter_count());
    for (std::size_t l = 0; l < net.weights().size(); ++l) {
        const auto& w = net.weights()[l];
        for (Index r = 0; r < w.rows(); ++r) {
            for (Index col = 0; col < w.cols(); ++col) {
                flat.push_back(w(r, col));
            }
        }
        const auto& b = net.biases()[l];
        flat.insert(flat.end(), b.data(), b.data() + b.size());
    }
    detail::write_f64(dir / "params.f64", flat.data(), flat.size());
}

NeuralNet load_net(const std::filesystem::path& dir) {
    auto m = detail::read_manifest(dir);
    if (detail::require_string(m, "format") != "irrnn-net") {
        throw FormatError("format", "not an irrnn network");
    }
    detail::require_encoding(m);
    NetConfig c;
    c.input_dim = static_cast<int>(detail::require_int(m, "input_dim", 1));
    c.hidden_layers = static_cast<int>(detail::require_int(m, "hidden_layers", 1));
    c.hidden_width = static_cast<int>(detail::require_int(m, "hidden_width", 1));
    c.output_dim = static_cast<int>(detail::require_int(m, "output_dim", 1));
    try {
        c.activation = parse_activation(detail::require_string(m, "activation"));
    } catch (const InvalidArgument& e) {
        throw FormatError("activation", e.what());
    }
    if (!m.contains("seed") || !m["seed"].is_number_unsigned()) {
        throw FormatError("seed", "missing or not an unsigned integer");
    }
    c.seed = m["seed"].get<std::uint64_t>();

    auto shapes = layer_shapes(c);
    std::size_t count = 0;
    for (auto [r, col] : shapes) {
        count += static_cast<std::size_t>(r) * static_cast<std::size_t>(col + 1);
    }
    auto flat = detail::read_f64(dir / detail::require_string(m, "parameters"), count, "parameters");
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
    std::size_t pos = 0;
    for (auto [rows, cols] : shapes) {
        Matrix w(rows, cols);
        for (int r = 0; r < rows; ++r) {
            for (int col = 0; col < cols; ++col) {
                w(r, col) = flat[pos++];
            }
        }
        Vector b(rows);
        for (int r = 0; r < rows; ++r) {
            b(r) = flat[pos++];
        }
        weights.push_back(std::move(w));
        biases.push_back(std::move(b));
    }
    return NeuralNet(c, std::move(weights), std::move(biases));
}

}  // namespace irrnn
