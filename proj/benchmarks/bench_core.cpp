// Microbenchmarks for the hot paths of a fit.

#include "irrnn/linmod.hpp"
#include "irrnn/metrics.hpp"
#include "irrnn/nn.hpp"
#include "irrnn/simgen.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace irrnn;

Matrix gaussian(Index rows, Index cols, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> n;
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) {
        m.data()[i] = n(rng);
    }
    return m;
}

NeuralNet make_net(int layers, int width) {
    NetConfig cfg;
    cfg.hidden_layers = layers;
    cfg.hidden_width = width;
    cfg.output_dim = 3;
    cfg.seed = 1;
    return NeuralNet(cfg);
}

void BM_forward_batch(benchmark::State& state) {
    const auto net = make_net(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    const Matrix inputs = gaussian(3, 32, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.forward_batch(inputs));
    }
    state.SetItemsProcessed(state.iterations() * inputs.cols());
}
BENCHMARK(BM_forward_batch)->Args({2, 64})->Args({4, 64})->Args({6, 64})->Args({4, 16});

void BM_backward_batch(benchmark::State& state) {
    const auto net = make_net(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    const Matrix inputs = gaussian(3, 32, 2);
    const Matrix upstream = gaussian(3, 32, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.backward(inputs, upstream));
    }
    state.SetItemsProcessed(state.iterations() * inputs.cols());
}
BENCHMARK(BM_backward_batch)->Args({2, 64})->Args({4, 64})->Args({6, 64})->Args({4, 16});

void BM_train_epoch(benchmark::State& state) {
    const Index V = state.range(0);
    const Matrix inputs = gaussian(3, V, 4);
    const Matrix target = gaussian(1, V, 5);
    TrainSpec spec;
    spec.epochs = 1;
    BatchLoss loss = [&](std::span<const Index> voxels, const Matrix& out, Matrix& grad) {
        double value = 0.0;
        for (Index k = 0; k < out.cols(); ++k) {
            const double d = out(0, k) - target(0, voxels[static_cast<std::size_t>(k)]);
            value += d * d;
            grad(0, k) = 2.0 * d;
        }
        return value;
    };
    NetConfig cfg;
    cfg.seed = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(train(NeuralNet(cfg), spec, inputs, loss));
    }
    state.SetItemsProcessed(state.iterations() * V);
}
BENCHMARK(BM_train_epoch)->Arg(2048)->Arg(8192)->Unit(benchmark::kMillisecond);

Dataset dataset(const std::vector<int>& dims) {
    SimConfig cfg;
    cfg.dims = dims;
    cfg.seed = 3;
    return generate(cfg).data;
}

void BM_mua(benchmark::State& state) {
    const auto ds = dataset({16, 16, static_cast<int>(state.range(0))});
    for (auto _ : state) {
        benchmark::DoNotOptimize(mua(ds));
    }
    state.SetItemsProcessed(state.iterations() * ds.voxels());
}
BENCHMARK(BM_mua)->Arg(8)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_lasso_voxel(benchmark::State& state) {
    const Matrix X = gaussian(20, 3, 6);
    const Vector y = gaussian(20, 1, 7).col(0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(lasso_voxel(X, y, 0.05));
    }
}
BENCHMARK(BM_lasso_voxel);

void BM_select_lambda(benchmark::State& state) {
    const auto ds = dataset({16, 16, 8});
    for (auto _ : state) {
        benchmark::DoNotOptimize(select_lambda(ds));
    }
    state.SetItemsProcessed(state.iterations() * ds.voxels());
}
BENCHMARK(BM_select_lambda)->Unit(benchmark::kMillisecond);

void BM_generate(benchmark::State& state) {
    SimConfig cfg;
    cfg.dims = {32, 32, 8};
    for (auto _ : state) {
        cfg.seed++;
        benchmark::DoNotOptimize(generate(cfg));
    }
}
BENCHMARK(BM_generate)->Unit(benchmark::kMillisecond);

void BM_roc_auc(benchmark::State& state) {
    const Index n = state.range(0);
    const Matrix s = gaussian(1, n, 8);
    std::vector<std::uint8_t> labels(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        labels[static_cast<std::size_t>(i)] = s(0, i) + 0.3 * std::sin(static_cast<double>(i)) > 0.5;
    }
    const std::vector<double> scores(s.data(), s.data() + n);
    for (auto _ : state) {
        benchmark::DoNotOptimize(roc_auc(scores, labels));
    }
}
BENCHMARK(BM_roc_auc)->Arg(8192 * 3);

}  // namespace

BENCHMARK_MAIN();
