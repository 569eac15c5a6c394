#include "seqmem/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace seqmem {

void TrainConfig::validate() const {
    require(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0,
            "TrainConfig: beta1 and beta2 must lie in (0, 1)");
    require(epsilon > 0.0, "TrainConfig: epsilon must be > 0");
    require(l2_decay >= 0.0, "TrainConfig: l2_decay must be >= 0");
    require(input_noise_std >= 0.0, "TrainConfig: input_noise_std must be >= 0");
    require(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
}

namespace {

void push(std::vector<TensorView>& out, Matrix& m) {
    out.push_back({m.data(), m.size()});
}
void push(std::vector<TensorView>& out, Vector& v) {
    out.push_back({v.data(), v.size()});
}

}  // namespace

std::vector<TensorView> param_tensors(Model& model) {
    std::vector<TensorView> out;
    std::visit(
        [&](auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, RnnParams>) {
                push(out, p.w_xh); push(out, p.w_hh); push(out, p.w_hy);
                push(out, p.b_h); push(out, p.b_y);
            } else if constexpr (std::is_same_v<T, LmnParams>) {
                push(out, p.w_xh); push(out, p.w_mh); push(out, p.w_hm);
                push(out, p.w_mm); push(out, p.w_out);
                push(out, p.b_h); push(out, p.b_m); push(out, p.b_y);
            } else if constexpr (std::is_same_v<T, UrnnParams>) {
                push(out, p.w_xh);
                for (auto& w : p.w_hh) push(out, w);
                for (auto& w : p.w_hy) push(out, w);
                push(out, p.b_h); push(out, p.b_y);
            } else {
                push(out, p.w_xh); push(out, p.w_mh); push(out, p.w_hm);
                push(out, p.w_mm); push(out, p.w_my);
                push(out, p.b_h); push(out, p.b_m); push(out, p.b_y);
            }
        },
        model);
    return out;
}

Eigen::Index param_scalar_count(const Model& model) {
    Model copy = model;
    Eigen::Index n = 0;
    for (const auto& t : param_tensors(copy)) n += t.size;
    return n;
}

Model zeros_like(const Model& model) {
    Model out = model;
    for (auto& t : param_tensors(out))
        Eigen::Map<Vector>(t.data, t.size).setZero();
    return out;
}

Model structure_mask(const Model& model) {
    Model out = model;
    for (auto& t : param_tensors(out))
        Eigen::Map<Vector>(t.data, t.size).setOnes();
    if (auto* ms = std::get_if<MslmnParams>(&out)) ms->enforce_structure();
    return out;
}

AdamState AdamState::init(const Model& model) {
    AdamState s;
    const Eigen::Index n = param_scalar_count(model);
    s.m = Vector::Zero(n);
    s.v = Vector::Zero(n);
    s.step = 0;
    return s;
}

namespace {

// Loss and d(loss)/d(pre-activation output) per timestep for one sequence,
// already scaled by 1/batch.
struct OutGrads {
    double loss = 0.0;
    std::vector<Vector> dz;
};

Matrix stack_outputs(const ForwardTrace& trace) {
    const Eigen::Index l = static_cast<Eigen::Index>(trace.y.size());
    const Eigen::Index ny = l > 0 ? trace.y.front().size() : 0;
    Matrix out(l, ny);
    for (Eigen::Index t = 0; t < l; ++t) out.row(t) = trace.y[t].transpose();
    return out;
}

OutGrads output_grads(const ForwardTrace& trace, const Sequence& seq, LossKind kind,
                      OutputAct act, double batch_var, int batch_count) {
    const Eigen::Index l = static_cast<Eigen::Index>(trace.y.size());
    OutGrads out;
    out.dz.resize(l);
    const double inv_b = 1.0 / static_cast<double>(batch_count);

    if (kind == LossKind::CrossEntropy) {
        require(seq.has_label(), "bptt: cross_entropy requires labeled sequences");
        require(act == OutputAct::Identity,
                "bptt: cross_entropy expects identity output (softmax in the loss)");
        for (Eigen::Index t = 0; t < l; ++t)
            out.dz[t] = Vector::Zero(trace.y[t].size());
        if (l == 0) return out;
        const Vector& z = trace.y[l - 1];
        out.loss = loss(LossKind::CrossEntropy, z, seq.label) * inv_b;
        const double zmax = z.maxCoeff();
        Vector soft = (z.array() - zmax).exp();
        soft /= soft.sum();
        soft(seq.label) -= 1.0;
        out.dz[l - 1] = soft * inv_b;
        return out;
    }

    require(!seq.has_label(), "bptt: per-step loss on a labeled sequence");
    const Matrix pred = stack_outputs(trace);
    const Matrix& targ = seq.targets;
    require(pred.rows() == targ.rows() && pred.cols() == targ.cols(),
            "bptt: prediction/target shape mismatch");
    const double n = static_cast<double>(std::max<Eigen::Index>(1, pred.size()));

    if (kind == LossKind::Bce) {
        require(act == OutputAct::Sigmoid, "bptt: bce expects sigmoid output");
        out.loss = loss(LossKind::Bce, pred, targ) * inv_b;
        for (Eigen::Index t = 0; t < l; ++t)
            out.dz[t] = (trace.y[t] - targ.row(t).transpose()) * (inv_b / n);
        return out;
    }

    // mse / nmse
    double scale = 1.0;
    if (kind == LossKind::Nmse) {
        require(batch_var > 0.0, "bptt: zero target variance for nmse");
        scale = 1.0 / batch_var;
    }
    out.loss = (pred - targ).squaredNorm() / n * scale * inv_b;
    for (Eigen::Index t = 0; t < l; ++t) {
        Vector dy = (trace.y[t] - targ.row(t).transpose()) * (2.0 * scale * inv_b / n);
        if (act == OutputAct::Sigmoid)
            dy.array() *= trace.y[t].array() * (1.0 - trace.y[t].array());
        out.dz[t] = std::move(dy);
    }
    return out;
}

void backward_rnn(const RnnParams& p, const Matrix& x, const ForwardTrace& tr,
                  const OutGrads& og, RnnParams& g) {
    const Eigen::Index l = x.rows();
    Vector dh_carry = Vector::Zero(p.n_h());
    for (Eigen::Index t = l - 1; t >= 0; --t) {
        const Vector& dzy = og.dz[t];
        g.w_hy += dzy * tr.h[t].transpose();
        g.b_y += dzy;
        Vector dh = p.w_hy.transpose() * dzy + dh_carry;
        Vector dzh = dh.array() * (1.0 - tr.h[t].array().square());
        g.w_xh += dzh * x.row(t);
        if (t > 0) g.w_hh += dzh * tr.h[t - 1].transpose();
        g.b_h += dzh;
        dh_carry = p.w_hh.transpose() * dzh;
    }
}

void backward_lmn(const LmnParams& p, const Matrix& x, const ForwardTrace& tr,
                  const OutGrads& og, LmnParams& g) {
    const Eigen::Index l = x.rows();
    Vector dm = Vector::Zero(p.n_m());
    for (Eigen::Index t = l - 1; t >= 0; --t) {
        const Vector& dzy = og.dz[t];
        Vector dh = Vector::Zero(p.n_h());
        if (p.readout == Readout::FromMemory) {
            g.w_out += dzy * tr.m[t].transpose();
            dm += p.w_out.transpose() * dzy;
        } else {
            g.w_out += dzy * tr.h[t].transpose();
            dh = p.w_out.transpose() * dzy;
        }
        g.b_y += dzy;

        const Vector m_prev = t > 0 ? tr.m[t - 1] : Vector::Zero(p.n_m());
        g.w_hm += dm * tr.h[t].transpose();
        g.w_mm += dm * m_prev.transpose();
        g.b_m += dm;
        dh += p.w_hm.transpose() * dm;
        Vector dm_prev = p.w_mm.transpose() * dm;

        Vector dzh = dh.array() * (1.0 - tr.h[t].array().square());
        g.w_xh += dzh * x.row(t);
        g.w_mh += dzh * m_prev.transpose();
        g.b_h += dzh;
        dm_prev += p.w_mh.transpose() * dzh;
        dm = std::move(dm_prev);
    }
}

void backward_urnn(const UrnnParams& p, const Matrix& x, const ForwardTrace& tr,
                   const OutGrads& og, UrnnParams& g) {
    const Eigen::Index l = x.rows();
    const int k = p.k();
    std::vector<Vector> dh(l, Vector::Zero(p.n_h()));
    for (Eigen::Index t = l - 1; t >= 0; --t) {
        const Vector& dzy = og.dz[t];
        g.b_y += dzy;
        for (int i = 0; i <= k; ++i)
            if (t - i >= 0) {
                g.w_hy[i] += dzy * tr.h[t - i].transpose();
                dh[t - i] += p.w_hy[i].transpose() * dzy;
            }
        Vector dzh = dh[t].array() * (1.0 - tr.h[t].array().square());
        g.w_xh += dzh * x.row(t);
        g.b_h += dzh;
        for (int i = 1; i <= k; ++i)
            if (t - i >= 0) {
                g.w_hh[i - 1] += dzh * tr.h[t - i].transpose();
                dh[t - i] += p.w_hh[i - 1].transpose() * dzh;
            }
    }
}

void backward_mslmn(const MslmnParams& p, const Matrix& x, const ForwardTrace& tr,
                    const OutGrads& og, MslmnParams& g) {
    const Eigen::Index l = x.rows();
    const Eigen::Index n = p.memory_size();
    Vector dm = Vector::Zero(n);
    for (Eigen::Index t = l - 1; t >= 0; --t) {
        const Vector& dzy = og.dz[t];
        g.w_my += dzy * tr.m[t].transpose();
        g.b_y += dzy;
        dm += p.w_my.transpose() * dzy;

        const Vector m_prev = t > 0 ? tr.m[t - 1] : Vector::Zero(n);
        const Eigen::Index rows =
            static_cast<Eigen::Index>(active_modules(t + 1, p.g)) * p.module_size;
        const Vector dma = dm.head(rows);
        g.w_hm.topRows(rows) += dma * tr.h[t].transpose();
        g.w_mm.topRows(rows) += dma * m_prev.transpose();
        g.b_m.head(rows) += dma;
        Vector dh = p.w_hm.topRows(rows).transpose() * dma;
        Vector dm_prev = p.w_mm.topRows(rows).transpose() * dma;
        dm_prev.tail(n - rows) += dm.tail(n - rows);  // held states pass gradient through

        Vector dzh = dh.array() * (1.0 - tr.h[t].array().square());
        g.w_xh += dzh * x.row(t);
        g.w_mh += dzh * m_prev.transpose();
        g.b_h += dzh;
        dm_prev += p.w_mh.transpose() * dzh;
        dm = std::move(dm_prev);
    }
    g.enforce_structure();  // structural zeros get zero gradient
}

OutputAct model_out_act(const Model& model) {
    return std::visit([](const auto& p) { return p.out_act; }, model);
}

}  // namespace

std::pair<double, GradientSet> bptt_gradients(const Model& model,
                                              const std::vector<const Sequence*>& batch,
                                              LossKind kind) {
    require(!batch.empty(), "bptt_gradients: empty batch");
    GradientSet grads = zeros_like(model);
    const OutputAct act = model_out_act(model);
    const double var = kind == LossKind::Nmse ? target_variance(batch) : 0.0;
    const int b = static_cast<int>(batch.size());
    double total = 0.0;
    for (const Sequence* seq : batch) {
        const ForwardTrace tr = forward(model, seq->inputs);
        const OutGrads og = output_grads(tr, *seq, kind, act, var, b);
        total += og.loss;
        std::visit(
            [&](const auto& p) {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, RnnParams>)
                    backward_rnn(p, seq->inputs, tr, og, std::get<RnnParams>(grads));
                else if constexpr (std::is_same_v<T, LmnParams>)
                    backward_lmn(p, seq->inputs, tr, og, std::get<LmnParams>(grads));
                else if constexpr (std::is_same_v<T, UrnnParams>)
                    backward_urnn(p, seq->inputs, tr, og, std::get<UrnnParams>(grads));
                else
                    backward_mslmn(p, seq->inputs, tr, og, std::get<MslmnParams>(grads));
            },
            model);
    }
    if (!std::isfinite(total))
        throw std::runtime_error("bptt_gradients: non-finite loss");
    return {total, std::move(grads)};
}

double batch_loss(const Model& model, const std::vector<const Sequence*>& batch,
                  LossKind kind) {
    require(!batch.empty(), "batch_loss: empty batch");
    const OutputAct act = model_out_act(model);
    const double var = kind == LossKind::Nmse ? target_variance(batch) : 0.0;
    const int b = static_cast<int>(batch.size());
    double total = 0.0;
    for (const Sequence* seq : batch) {
        const ForwardTrace tr = forward(model, seq->inputs);
        total += output_grads(tr, *seq, kind, act, var, b).loss;
    }
    return total;
}

void adam_step(AdamState& state, Model& model, const GradientSet& grads,
               const TrainConfig& config) {
    config.validate();
    state.step += 1;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));

    auto params = param_tensors(model);
    GradientSet gcopy = grads;
    auto gviews = param_tensors(gcopy);
    require(params.size() == gviews.size(), "adam_step: shape-incongruent gradients");

    Eigen::Index off = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        require(params[i].size == gviews[i].size, "adam_step: shape-incongruent gradients");
        Eigen::Map<Vector> theta(params[i].data, params[i].size);
        Eigen::Map<Vector> grad(gviews[i].data, gviews[i].size);
        auto m = state.m.segment(off, params[i].size);
        auto v = state.v.segment(off, params[i].size);
        if (config.l2_decay > 0.0) grad += config.l2_decay * theta;
        m = config.beta1 * m + (1.0 - config.beta1) * grad;
        v = config.beta2 * v + (1.0 - config.beta2) * grad.cwiseAbs2();
        theta.array() -= config.learning_rate * (m.array() / bc1) /
                         ((v.array() / bc2).sqrt() + config.epsilon);
        off += params[i].size;
    }
    if (auto* ms = std::get_if<MslmnParams>(&model)) ms->enforce_structure();
}

TrainResult train(Model model, const std::vector<const Sequence*>& train_set,
                  const std::vector<const Sequence*>& val_set, const TrainConfig& config) {
    config.validate();
    require(!train_set.empty(), "train: empty train set");
    const std::vector<const Sequence*>& val = val_set.empty() ? train_set : val_set;

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    AdamState adam = AdamState::init(model);

    TrainResult result;
    result.model = model;
    result.best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0u);
    std::vector<Sequence> noisy;  // per-batch noisy copies when noise is on

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            std::vector<const Sequence*> batch;
            noisy.clear();
            noisy.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) {
                const Sequence* s = train_set[order[i]];
                if (config.input_noise_std > 0.0 && s->inputs.size() > 0) {
                    Sequence copy = *s;
                    for (Eigen::Index r = 0; r < copy.inputs.rows(); ++r)
                        for (Eigen::Index c = 0; c < copy.inputs.cols(); ++c)
                            copy.inputs(r, c) += config.input_noise_std * noise(rng);
                    noisy.push_back(std::move(copy));
                } else {
                    batch.push_back(s);
                }
            }
            for (const auto& s : noisy) batch.push_back(&s);
            try {
                auto [loss_value, grads] = bptt_gradients(model, batch, config.loss_kind);
                epoch_loss += loss_value;
                ++batches;
                adam_step(adam, model, grads, config);
            } catch (const std::runtime_error&) {
                result.diverged = true;  // keep the last finite snapshot
                return result;
            }
        }
        epoch_loss /= std::max(1, batches);
        const double val_loss = batch_loss(model, val, config.loss_kind);
        result.history.push_back({epoch, epoch_loss, val_loss});
        if (!std::isfinite(val_loss)) {
            result.diverged = true;
            return result;
        }
        if (val_loss < result.best_val) {
            result.best_val = val_loss;
            result.best_epoch = epoch;
            result.model = model;
            since_best = 0;
        } else {
            ++since_best;
            if (since_best > config.patience) break;
        }
    }
    return result;
}

double grad_check(const Model& model, const std::vector<const Sequence*>& batch,
                  LossKind kind, double epsilon) {
    auto [loss_value, grads] = bptt_gradients(model, batch, kind);
    (void)loss_value;
    Model probe = model;
    Model mask = structure_mask(model);
    auto pviews = param_tensors(probe);
    auto gviews = param_tensors(grads);
    auto mviews = param_tensors(mask);

    double max_rel = 0.0;
    for (std::size_t i = 0; i < pviews.size(); ++i) {
        for (Eigen::Index j = 0; j < pviews[i].size; ++j) {
            if (mviews[i].data[j] == 0.0) continue;  // structural zero
            const double saved = pviews[i].data[j];
            pviews[i].data[j] = saved + epsilon;
            const double lp = batch_loss(probe, batch, kind);
            pviews[i].data[j] = saved - epsilon;
            const double lm = batch_loss(probe, batch, kind);
            pviews[i].data[j] = saved;
            const double num = (lp - lm) / (2.0 * epsilon);
            const double ana = gviews[i].data[j];
            const double rel = std::abs(ana - num) /
                               std::max({std::abs(ana), std::abs(num), 1e-8});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

namespace {

Matrix rand_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    const double s = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(1, cols)));
    std::uniform_real_distribution<double> dist(-s, s);
    Matrix m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = dist(rng);
    return m;
}

}  // namespace

Model random_model(const ArchDesc& d, std::mt19937_64& rng, OutputAct out_act) {
    switch (d.kind) {
        case ArchKind::Rnn: {
            RnnParams p;
            p.w_xh = rand_matrix(d.n_h, d.n_x, rng);
            p.w_hh = rand_matrix(d.n_h, d.n_h, rng);
            p.w_hy = rand_matrix(d.n_y, d.n_h, rng);
            p.b_h = Vector::Zero(d.n_h);
            p.b_y = Vector::Zero(d.n_y);
            p.out_act = out_act;
            return p;
        }
        case ArchKind::Lmn: {
            LmnParams p;
            p.w_xh = rand_matrix(d.n_h, d.n_x, rng);
            p.w_mh = rand_matrix(d.n_h, d.n_m, rng);
            p.w_hm = rand_matrix(d.n_m, d.n_h, rng);
            p.w_mm = rand_matrix(d.n_m, d.n_m, rng);
            p.w_out = rand_matrix(d.n_y, d.readout == Readout::FromMemory ? d.n_m : d.n_h, rng);
            p.b_h = Vector::Zero(d.n_h);
            p.b_m = Vector::Zero(d.n_m);
            p.b_y = Vector::Zero(d.n_y);
            p.readout = d.readout;
            p.out_act = out_act;
            return p;
        }
        case ArchKind::Urnn: {
            UrnnParams p;
            p.w_xh = rand_matrix(d.n_h, d.n_x, rng);
            for (int i = 0; i < d.k; ++i) p.w_hh.push_back(rand_matrix(d.n_h, d.n_h, rng));
            for (int i = 0; i <= d.k; ++i) p.w_hy.push_back(rand_matrix(d.n_y, d.n_h, rng));
            p.b_h = Vector::Zero(d.n_h);
            p.b_y = Vector::Zero(d.n_y);
            p.out_act = out_act;
            return p;
        }
        case ArchKind::Mslmn: {
            MslmnParams p;
            p.g = d.g;
            p.module_size = d.n_m;
            const Eigen::Index total = static_cast<Eigen::Index>(d.g) * d.n_m;
            p.w_xh = rand_matrix(d.n_h, d.n_x, rng);
            p.w_mh = rand_matrix(d.n_h, total, rng);
            p.w_hm = rand_matrix(total, d.n_h, rng);
            p.w_mm = rand_matrix(total, total, rng);
            p.w_my = rand_matrix(d.n_y, total, rng);
            p.b_h = Vector::Zero(d.n_h);
            p.b_m = Vector::Zero(total);
            p.b_y = Vector::Zero(d.n_y);
            p.out_act = out_act;
            p.enforce_structure();
            return p;
        }
    }
    throw std::invalid_argument("random_model: unknown architecture");
}

Matrix predict(const Model& model, const Matrix& inputs) {
    const ForwardTrace tr = forward(model, inputs);
    return stack_outputs(tr);
}

double dataset_nmse(const Model& model, const std::vector<const Sequence*>& data) {
    double err = 0.0;
    long n = 0;
    for (const auto* s : data) {
        err += (predict(model, s->inputs) - s->targets).squaredNorm();
        n += s->targets.size();
    }
    const double var = target_variance(data);
    require(var > 0.0, "dataset_nmse: zero target variance");
    return err / static_cast<double>(n) / var;
}

double dataset_frame_accuracy(const Model& model,
                              const std::vector<const Sequence*>& data) {
    double acc = 0.0;
    long frames = 0;
    for (const auto* s : data) {
        const Matrix pred = predict(model, s->inputs);
        acc += frame_accuracy(pred, s->targets) * static_cast<double>(pred.rows());
        frames += pred.rows();
    }
    return frames > 0 ? acc / static_cast<double>(frames) : 1.0;
}

}  // namespace seqmem
