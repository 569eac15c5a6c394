#include <random>

#include <benchmark/benchmark.h>

#include "seqmem/laes.hpp"
#include "seqmem/model.hpp"
#include "seqmem/train.hpp"

using namespace seqmem;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> dist;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return m;
}

void bm_laes_fit(benchmark::State& state) {
    const int length = static_cast<int>(state.range(0));
    std::mt19937_64 rng(7);
    std::vector<Matrix> seqs;
    for (int i = 0; i < 8; ++i) seqs.push_back(random_matrix(length, 4, rng));
    for (auto _ : state) {
        LaesParams laes = fit(seqs, 32);
        benchmark::DoNotOptimize(laes.a);
    }
}
BENCHMARK(bm_laes_fit)->Arg(32)->Arg(64)->Arg(128);

void bm_laes_fit_streaming(benchmark::State& state) {
    const int length = static_cast<int>(state.range(0));
    std::mt19937_64 rng(7);
    std::vector<Matrix> seqs;
    for (int i = 0; i < 8; ++i) seqs.push_back(random_matrix(length, 4, rng));
    for (auto _ : state) {
        LaesParams laes = fit(seqs, 32, /*streaming=*/true);
        benchmark::DoNotOptimize(laes.a);
    }
}
BENCHMARK(bm_laes_fit_streaming)->Arg(32)->Arg(64)->Arg(128);

void bm_lmn_forward(benchmark::State& state) {
    std::mt19937_64 rng(7);
    ArchDesc desc;
    desc.kind = ArchKind::Lmn;
    desc.n_x = 8;
    desc.n_h = 32;
    desc.n_m = 64;
    desc.n_y = 8;
    const Model model = random_model(desc, rng);
    const Matrix seq = random_matrix(state.range(0), 8, rng);
    const auto& lmn = std::get<LmnParams>(model);
    for (auto _ : state) {
        ForwardTrace tr = lmn_forward(lmn, seq);
        benchmark::DoNotOptimize(tr.y);
    }
}
BENCHMARK(bm_lmn_forward)->Arg(64)->Arg(256);

void bm_mslmn_forward_block(benchmark::State& state) {
    std::mt19937_64 rng(7);
    ArchDesc desc;
    desc.kind = ArchKind::Mslmn;
    desc.n_x = 8;
    desc.n_h = 16;
    desc.n_m = 16;
    desc.n_y = 8;
    desc.g = 4;
    const Model model = random_model(desc, rng);
    const Matrix seq = random_matrix(state.range(0), 8, rng);
    const auto& p = std::get<MslmnParams>(model);
    for (auto _ : state) {
        ForwardTrace tr = mslmn_forward_block(p, seq);
        benchmark::DoNotOptimize(tr.y);
    }
}
BENCHMARK(bm_mslmn_forward_block)->Arg(64)->Arg(256);

void bm_mslmn_forward_reference(benchmark::State& state) {
    std::mt19937_64 rng(7);
    ArchDesc desc;
    desc.kind = ArchKind::Mslmn;
    desc.n_x = 8;
    desc.n_h = 16;
    desc.n_m = 16;
    desc.n_y = 8;
    desc.g = 4;
    const Model model = random_model(desc, rng);
    const Matrix seq = random_matrix(state.range(0), 8, rng);
    const auto& p = std::get<MslmnParams>(model);
    for (auto _ : state) {
        ForwardTrace tr = mslmn_forward_reference(p, seq);
        benchmark::DoNotOptimize(tr.y);
    }
}
BENCHMARK(bm_mslmn_forward_reference)->Arg(64)->Arg(256);

void bm_bptt_rnn(benchmark::State& state) {
    std::mt19937_64 rng(7);
    ArchDesc desc;
    desc.kind = ArchKind::Rnn;
    desc.n_x = 8;
    desc.n_h = 32;
    desc.n_y = 8;
    const Model model = random_model(desc, rng);
    Sequence seq;
    seq.inputs = random_matrix(state.range(0), 8, rng);
    seq.targets = random_matrix(state.range(0), 8, rng);
    const std::vector<const Sequence*> batch{&seq};
    for (auto _ : state) {
        auto [loss, grads] = bptt_gradients(model, batch, LossKind::Mse);
        benchmark::DoNotOptimize(loss);
        benchmark::DoNotOptimize(grads);
    }
}
BENCHMARK(bm_bptt_rnn)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
