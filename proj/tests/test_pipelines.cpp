#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "seqmem/pipeline.hpp"
#include "test_util.hpp"

using namespace seqmem;
using testutil::random_matrix;

namespace {

std::vector<Sequence> make_corpus(int n, int length, int n_x, int n_y,
                                  std::mt19937_64& rng) {
    std::vector<Sequence> data;
    for (int i = 0; i < n; ++i) data.push_back(testutil::random_sequence(length, n_x, n_y, rng));
    return data;
}

std::vector<const Sequence*> ptrs(const std::vector<Sequence>& data) {
    std::vector<const Sequence*> out;
    for (const auto& s : data) out.push_back(&s);
    return out;
}

UrnnParams random_urnn(int n_x, int n_h, int n_y, int k, std::mt19937_64& rng) {
    ArchDesc desc;
    desc.kind = ArchKind::Urnn;
    desc.n_x = n_x;
    desc.n_h = n_h;
    desc.n_y = n_y;
    desc.k = k;
    Model m = random_model(desc, rng);
    return std::get<UrnnParams>(m);
}

double output_gap(const UrnnParams& urnn, const LmnParams& lmn,
                  const std::vector<const Sequence*>& data) {
    double max_gap = 0.0;
    for (const Sequence* seq : data) {
        const auto tu = urnn_forward(urnn, seq->inputs);
        const auto tl = lmn_forward(lmn, seq->inputs);
        for (std::size_t t = 0; t < tu.y.size(); ++t)
            max_gap = std::max(max_gap, (tu.y[t] - tl.y[t]).cwiseAbs().maxCoeff());
    }
    return max_gap;
}

int trace_rank(const UrnnParams& urnn, const std::vector<const Sequence*>& data) {
    const auto traces = collect_hidden_traces(Model(urnn), data);
    const Matrix xi = build_data_matrix(traces);
    return static_cast<int>(Eigen::FullPivLU<Matrix>(xi).rank());
}

}  // namespace

TEST_CASE("fit_linear_readout: realizable, zero, and pseudoinverse cases") {
    std::mt19937_64 rng(1);
    const Matrix traces = random_matrix(30, 5, rng);
    SUBCASE("exactly linear targets are recovered") {
        const Matrix w = random_matrix(3, 5, rng);
        const Vector b = testutil::random_vector(3, rng);
        const Matrix targets =
            traces * w.transpose() + Vector::Ones(30) * b.transpose();
        const auto [wf, bf] = fit_linear_readout(traces, targets);
        const Matrix residual =
            traces * wf.transpose() + Vector::Ones(30) * bf.transpose() - targets;
        CHECK(residual.cwiseAbs().maxCoeff() <= 1e-8);
    }
    SUBCASE("zero targets give the zero map") {
        const auto [wf, bf] = fit_linear_readout(traces, Matrix::Zero(30, 2));
        CHECK(wf.cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(bf.cwiseAbs().maxCoeff() <= 1e-10);
    }
    SUBCASE("overdetermined fit matches an SVD pseudoinverse oracle") {
        const Matrix targets = random_matrix(30, 2, rng);
        const auto [wf, bf] = fit_linear_readout(traces, targets);
        // Oracle: minimum-norm least squares on the bias-augmented system.
        Matrix design(30, 6);
        design << traces, Vector::Ones(30);
        const Matrix sol = design.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV)
                               .solve(targets);  // 6 x 2
        CHECK((wf - sol.topRows(5).transpose()).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK((bf - sol.row(5).transpose()).cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("init_from_urnn: exact rank reproduces the URNN, undersizing degrades") {
    std::mt19937_64 rng(2);
    const auto corpus = make_corpus(3, 8, 2, 2, rng);
    const auto data = ptrs(corpus);
    const UrnnParams urnn = random_urnn(2, 4, 2, 2, rng);
    const int rank = trace_rank(urnn, data);

    const LmnParams exact = init_from_urnn(urnn, data, rank);
    const double gap_exact = output_gap(urnn, exact, data);
    CHECK(gap_exact <= 1e-6);

    // Shrinking the memory grows the gap monotonically.
    std::vector<int> sizes;
    for (int p : {2, 4, 8})
        if (p < rank) sizes.push_back(p);
    double prev = gap_exact;
    for (auto it = sizes.rbegin(); it != sizes.rend(); ++it) {
        const double gap = output_gap(urnn, init_from_urnn(urnn, data, *it), data);
        CHECK(gap >= prev - 1e-12);
        prev = gap;
    }
}

TEST_CASE("init_from_urnn: k=1 with zero delayed readout embeds the plain RNN") {
    std::mt19937_64 rng(3);
    const auto corpus = make_corpus(2, 6, 2, 1, rng);
    const auto data = ptrs(corpus);
    UrnnParams urnn = random_urnn(2, 3, 1, 1, rng);
    urnn.w_hy[1].setZero();
    const int rank = trace_rank(urnn, data);
    const LmnParams lmn = init_from_urnn(urnn, data, rank);
    CHECK(output_gap(urnn, lmn, data) <= 1e-6);
}

TEST_CASE("add_module: new-module fit sees exactly the subsampled trace") {
    std::mt19937_64 rng(4);
    const auto corpus = make_corpus(2, 8, 2, 1, rng);
    const auto data = ptrs(corpus);
    ArchDesc desc;
    desc.kind = ArchKind::Mslmn;
    desc.n_x = 2;
    desc.n_h = 3;
    desc.n_m = 2;
    desc.n_y = 1;
    desc.g = 1;
    const MslmnParams base = std::get<MslmnParams>(random_model(desc, rng));
    const MslmnParams grown = add_module(base, data);

    REQUIRE(grown.g == 2);
    const int nm = base.module_size;

    // Oracle: subsample hidden traces at t in {2,4,6,8} (period 2^g = 2) and
    // fit the LAES directly; the installed blocks must match.
    const auto traces = collect_hidden_traces(Model(base), data);
    std::vector<Matrix> sub;
    for (const auto& tr : traces) {
        Matrix s(tr.rows() / 2, tr.cols());
        Eigen::Index r = 0;
        for (Eigen::Index t = 2; t <= tr.rows(); t += 2) s.row(r++) = tr.row(t - 1);
        sub.push_back(s);
    }
    const LaesParams laes = fit(sub, nm);
    CHECK((grown.w_hm.bottomRows(nm) - laes.a).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((grown.w_mm.block(nm, nm, nm, nm) - laes.b).cwiseAbs().maxCoeff() <= 1e-12);

    // Pre-existing blocks are bitwise unchanged.
    CHECK((grown.w_xh - base.w_xh).cwiseAbs().maxCoeff() == 0.0);
    CHECK((grown.w_hm.topRows(nm) - base.w_hm).cwiseAbs().maxCoeff() == 0.0);
    CHECK((grown.w_mh.leftCols(nm) - base.w_mh).cwiseAbs().maxCoeff() == 0.0);
    CHECK((grown.w_mm.topLeftCorner(nm, nm) - base.w_mm).cwiseAbs().maxCoeff() == 0.0);
    CHECK((grown.b_h - base.b_h).cwiseAbs().maxCoeff() == 0.0);
    CHECK((grown.b_m.head(nm) - base.b_m).cwiseAbs().maxCoeff() == 0.0);

    // Remaining new connections are zero; structure holds.
    CHECK(grown.w_mh.rightCols(nm).cwiseAbs().maxCoeff() == 0.0);
    CHECK(grown.w_mm.block(0, nm, nm, nm).cwiseAbs().maxCoeff() == 0.0);
    CHECK(grown.structure_ok());
}

TEST_CASE("add_module: h trajectory unchanged before the new module updates") {
    std::mt19937_64 rng(5);
    const auto corpus = make_corpus(1, 6, 2, 1, rng);
    const auto data = ptrs(corpus);
    ArchDesc desc;
    desc.kind = ArchKind::Mslmn;
    desc.n_x = 2;
    desc.n_h = 3;
    desc.n_m = 2;
    desc.n_y = 1;
    desc.g = 1;
    const MslmnParams base = std::get<MslmnParams>(random_model(desc, rng));
    const MslmnParams grown = add_module(base, data);
    // The new module never feeds h (w_mh block zero), so h is identical.
    const auto tb = mslmn_forward_reference(base, corpus[0].inputs);
    const auto tg = mslmn_forward_reference(grown, corpus[0].inputs);
    for (std::size_t t = 0; t < tb.h.size(); ++t)
        CHECK((tb.h[t] - tg.h[t]).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("lmn_train: deterministic, reports finite diagnostics") {
    std::mt19937_64 rng(6);
    auto corpus = make_corpus(4, 8, 2, 1, rng);
    corpus[3].split = Split::Val;
    std::vector<const Sequence*> train_set, val_set;
    for (const auto& s : corpus)
        (s.split == Split::Train ? train_set : val_set).push_back(&s);
    TrainConfig cfg;
    cfg.max_epochs = 5;
    cfg.patience = 5;
    cfg.seed = 9;
    const auto a = lmn_train(train_set, val_set, 2, 1, 4, 6, 2, cfg, OutputAct::Identity);
    const auto b = lmn_train(train_set, val_set, 2, 1, 4, 6, 2, cfg, OutputAct::Identity);
    CHECK(std::isfinite(a.report.laes_reconstruction_error));
    CHECK(std::isfinite(a.report.init_val_loss));
    CHECK(a.report.urnn_val_loss == b.report.urnn_val_loss);
    CHECK((a.model.w_xh - b.model.w_xh).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.finetune_history.size() == b.finetune_history.size());
}

TEST_CASE("mslmn_train: stage count equals g and structure is preserved") {
    std::mt19937_64 rng(7);
    auto corpus = make_corpus(4, 16, 2, 1, rng);
    corpus[3].split = Split::Val;
    std::vector<const Sequence*> train_set, val_set;
    for (const auto& s : corpus)
        (s.split == Split::Train ? train_set : val_set).push_back(&s);
    TrainConfig cfg;
    cfg.max_epochs = 4;
    cfg.patience = 4;
    cfg.seed = 5;
    IncrementalSchedule sched;
    sched.target_modules = 3;
    sched.module_size = 2;
    sched.epochs_per_stage = 2;
    const auto res = mslmn_train(train_set, val_set, 2, 1, 3, sched, cfg,
                                 OutputAct::Identity);
    CHECK(res.stage_histories.size() == 3);
    CHECK(res.model.g == 3);
    CHECK(res.model.structure_ok());

    SUBCASE("g=1 runs a single plain stage") {
        IncrementalSchedule one = sched;
        one.target_modules = 1;
        const auto r1 = mslmn_train(train_set, val_set, 2, 1, 3, one, cfg,
                                    OutputAct::Identity);
        CHECK(r1.stage_histories.size() == 1);
        CHECK(r1.model.g == 1);
    }
}
