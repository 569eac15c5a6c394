#include "seqmem/pipeline.hpp"

#include <Eigen/Cholesky>

namespace seqmem {

std::vector<Matrix> collect_hidden_traces(const Model& model,
                                          const std::vector<const Sequence*>& data) {
    std::vector<Matrix> traces;
    traces.reserve(data.size());
    for (const auto* s : data) {
        const ForwardTrace tr = forward(model, s->inputs);
        Matrix h(static_cast<Eigen::Index>(tr.h.size()),
                 tr.h.empty() ? 0 : tr.h.front().size());
        for (Eigen::Index t = 0; t < h.rows(); ++t) h.row(t) = tr.h[t].transpose();
        traces.push_back(std::move(h));
    }
    return traces;
}

LmnParams init_from_urnn(const UrnnParams& urnn,
                         const std::vector<const Sequence*>& data, int n_m) {
    const int k = urnn.k();
    const auto traces = collect_hidden_traces(urnn, data);
    const LaesParams laes = fit(traces, n_m);
    const DecoderUnroll u_k = make_decoder_unroll(laes, k);
    const DecoderUnroll u_k1 = make_decoder_unroll(laes, k + 1);

    const Eigen::Index nh = urnn.n_h();
    Matrix hh_cat(nh, static_cast<Eigen::Index>(k) * nh);
    for (int i = 0; i < k; ++i)
        hh_cat.middleCols(static_cast<Eigen::Index>(i) * nh, nh) = urnn.w_hh[i];
    const Eigen::Index ny = urnn.w_hy[0].rows();
    Matrix hy_cat(ny, static_cast<Eigen::Index>(k + 1) * nh);
    for (int i = 0; i <= k; ++i)
        hy_cat.middleCols(static_cast<Eigen::Index>(i) * nh, nh) = urnn.w_hy[i];

    LmnParams lmn;
    lmn.w_xh = urnn.w_xh;
    lmn.w_hm = laes.a;
    lmn.w_mm = laes.b;
    lmn.w_mh = hh_cat * u_k.u_k;
    lmn.w_out = hy_cat * u_k1.u_k;
    lmn.b_h = urnn.b_h;
    lmn.b_m = Vector::Zero(n_m);
    lmn.b_y = urnn.b_y;
    lmn.readout = Readout::FromMemory;
    lmn.out_act = urnn.out_act;
    return lmn;
}

LmnTrainResult lmn_train(const std::vector<const Sequence*>& train_set,
                         const std::vector<const Sequence*>& val_set,
                         int n_x, int n_y, int n_h, int n_m, int k,
                         const TrainConfig& config, OutputAct out_act) {
    require(k >= 1, "lmn_train: k must be >= 1");
    std::mt19937_64 rng(config.seed);
    ArchDesc urnn_desc{ArchKind::Urnn, n_x, n_h, 0, n_y, 1, k};
    Model urnn0 = random_model(urnn_desc, rng, out_act);

    // Phase 1: tape-delay model solves the task.
    TrainResult urnn_run = train(std::move(urnn0), train_set, val_set, config);
    const UrnnParams& urnn = std::get<UrnnParams>(urnn_run.model);

    // Phase 2: memory initialization from the hidden traces.
    LmnParams lmn = init_from_urnn(urnn, train_set, n_m);

    LmnTrainResult out;
    out.report.laes_reconstruction_error =
        corpus_reconstruction_error(fit(collect_hidden_traces(urnn, train_set), n_m),
                                    collect_hidden_traces(urnn, train_set));
    out.report.urnn_train_loss = batch_loss(urnn_run.model, train_set, config.loss_kind);
    const auto& val = val_set.empty() ? train_set : val_set;
    out.report.urnn_val_loss = batch_loss(urnn_run.model, val, config.loss_kind);
    Model init_model = lmn;
    out.report.init_train_loss = batch_loss(init_model, train_set, config.loss_kind);
    out.report.init_val_loss = batch_loss(init_model, val, config.loss_kind);
    out.urnn_history = std::move(urnn_run.history);

    // Phase 3: end-to-end finetuning.
    TrainResult ft = train(std::move(init_model), train_set, val_set, config);
    out.model = std::get<LmnParams>(ft.model);
    out.finetune_history = std::move(ft.history);
    return out;
}

std::pair<Matrix, Vector> fit_linear_readout(const Matrix& memory_traces,
                                             const Matrix& targets) {
    require(memory_traces.rows() == targets.rows(),
            "fit_linear_readout: trace/target row mismatch");
    constexpr double kDamping = 1e-8;
    const Eigen::Index d = memory_traces.cols();
    Matrix x(memory_traces.rows(), d + 1);
    x.leftCols(d) = memory_traces;
    x.col(d).setOnes();
    Matrix gram = x.transpose() * x;
    gram.diagonal().array() += kDamping;
    const Matrix sol = gram.ldlt().solve(x.transpose() * targets);  // (d+1) x n_y
    return {sol.topRows(d).transpose(), sol.row(d).transpose()};
}

namespace {

// Per-timestep concatenated memory states and matching targets for the
// readout refit; labeled data contributes one row per sequence (final
// state, one-hot target).
std::pair<Matrix, Matrix> readout_design(const MslmnParams& model,
                                         const std::vector<const Sequence*>& data) {
    const Eigen::Index nm = model.memory_size();
    const Eigen::Index ny = model.w_my.rows();
    std::vector<Vector> rows;
    std::vector<Vector> targs;
    for (const auto* s : data) {
        const ForwardTrace tr = mslmn_forward_block(model, s->inputs);
        if (s->has_label()) {
            if (tr.m.empty()) continue;
            rows.push_back(tr.m.back());
            Vector onehot = Vector::Zero(ny);
            onehot(s->label) = 1.0;
            targs.push_back(std::move(onehot));
        } else {
            for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(tr.m.size()); ++t) {
                rows.push_back(tr.m[t]);
                targs.push_back(s->targets.row(t).transpose());
            }
        }
    }
    Matrix x(static_cast<Eigen::Index>(rows.size()), nm);
    Matrix y(static_cast<Eigen::Index>(targs.size()), ny);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        x.row(i) = rows[i].transpose();
        y.row(i) = targs[i].transpose();
    }
    return {std::move(x), std::move(y)};
}

}  // namespace

MslmnParams add_module(const MslmnParams& model,
                       const std::vector<const Sequence*>& data) {
    const int g = model.g;
    const int nm = model.module_size;
    const Eigen::Index nh = model.n_h();
    const Eigen::Index old_total = model.memory_size();
    const Eigen::Index new_total = old_total + nm;
    const long period = 1L << g;  // clock rate of the new module

    // Hidden traces subsampled at the new module's rate (t is 1-based).
    std::vector<Matrix> sub;
    for (const auto* s : data) {
        const ForwardTrace tr = mslmn_forward_block(model, s->inputs);
        std::vector<Eigen::Index> kept;
        for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(tr.h.size()); ++t)
            if ((t + 1) % period == 0) kept.push_back(t);
        if (kept.empty()) continue;
        Matrix h(static_cast<Eigen::Index>(kept.size()), nh);
        for (Eigen::Index i = 0; i < h.rows(); ++i) h.row(i) = tr.h[kept[i]].transpose();
        sub.push_back(std::move(h));
    }
    require(!sub.empty(), "add_module: no timesteps at the new module's rate");

    // Sparse clocks can leave fewer samples than the module has units; clamp
    // the autoencoder rank to what the data supports and leave the remaining
    // units zero-initialized.
    Eigen::Index xi_rows = 0, xi_max_len = 0;
    for (const auto& h : sub) {
        xi_rows += h.rows();
        xi_max_len = std::max(xi_max_len, h.rows());
    }
    const int p_eff = static_cast<int>(
        std::min<Eigen::Index>(nm, std::min(xi_rows, nh * xi_max_len)));
    Matrix new_a = Matrix::Zero(nm, nh);
    Matrix new_b = Matrix::Zero(nm, nm);
    if (p_eff >= 1) {
        const LaesParams laes = fit(sub, p_eff);
        new_a.topRows(p_eff) = laes.a;
        new_b.topLeftCorner(p_eff, p_eff) = laes.b;
    }

    MslmnParams grown;
    grown.g = g + 1;
    grown.module_size = nm;
    grown.w_xh = model.w_xh;
    grown.b_h = model.b_h;
    grown.out_act = model.out_act;

    grown.w_mh = Matrix::Zero(nh, new_total);
    grown.w_mh.leftCols(old_total) = model.w_mh;  // new module -> h starts at zero

    grown.w_hm = Matrix::Zero(new_total, nh);
    grown.w_hm.topRows(old_total) = model.w_hm;
    grown.w_hm.bottomRows(nm) = new_a;

    grown.w_mm = Matrix::Zero(new_total, new_total);
    grown.w_mm.topLeftCorner(old_total, old_total) = model.w_mm;
    grown.w_mm.bottomRightCorner(nm, nm) = new_b;
    // cross blocks old-module <- new-module stay zero

    grown.b_m = Vector::Zero(new_total);
    grown.b_m.head(old_total) = model.b_m;

    grown.w_my = Matrix::Zero(model.w_my.rows(), new_total);
    grown.w_my.leftCols(old_total) = model.w_my;
    grown.b_y = model.b_y;
    grown.enforce_structure();

    // Refit the readout over the full concatenated memory.
    const auto [x, y] = readout_design(grown, data);
    if (x.rows() > 0) {
        auto [w, b] = fit_linear_readout(x, y);
        grown.w_my = std::move(w);
        grown.b_y = std::move(b);
    }
    return grown;
}

MslmnTrainResult mslmn_train(const std::vector<const Sequence*>& train_set,
                             const std::vector<const Sequence*>& val_set,
                             int n_x, int n_y, int n_h,
                             const IncrementalSchedule& schedule,
                             const TrainConfig& config, OutputAct out_act) {
    require(schedule.target_modules >= 1, "mslmn_train: g must be >= 1");
    std::mt19937_64 rng(config.seed);
    ArchDesc desc{ArchKind::Mslmn, n_x, n_h, schedule.module_size, n_y, 1};
    Model model = random_model(desc, rng, out_act);

    MslmnTrainResult out;
    for (int stage = 1; stage <= schedule.target_modules; ++stage) {
        if (stage > 1) {
            model = add_module(std::get<MslmnParams>(model), train_set);
        }
        TrainConfig stage_cfg = config;
        stage_cfg.seed = config.seed + static_cast<std::uint64_t>(stage);
        const bool final_stage = stage == schedule.target_modules;
        if (!final_stage && schedule.epochs_per_stage > 0) {
            stage_cfg.max_epochs = schedule.epochs_per_stage;
            stage_cfg.patience = schedule.epochs_per_stage;  // fixed budget, no early stop
        }
        TrainResult run = train(std::move(model), train_set, val_set, stage_cfg);
        model = std::move(run.model);
        out.stage_histories.push_back(std::move(run.history));
    }
    out.model = std::get<MslmnParams>(model);
    return out;
}

}  // namespace seqmem
