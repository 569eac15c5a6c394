#include "seqmem/model.hpp"

namespace seqmem {

namespace {

Vector apply_output(OutputAct act, Vector z) {
    if (act == OutputAct::Sigmoid)
        z = (1.0 + (-z.array()).exp()).inverse().matrix();
    return z;
}

void check_seq(Eigen::Index n_x, const Matrix& seq, const char* who) {
    if (seq.cols() != n_x)
        throw std::invalid_argument(std::string(who) + ": input element size mismatch");
}

}  // namespace

void MslmnParams::mask_structure(Matrix& w, int g, int module_size) {
    for (int row = 1; row < g; ++row)
        for (int col = 0; col < row; ++col)
            w.block(static_cast<Eigen::Index>(row) * module_size,
                    static_cast<Eigen::Index>(col) * module_size,
                    module_size, module_size).setZero();
}

bool MslmnParams::structure_ok(double tol) const {
    for (int row = 1; row < g; ++row)
        for (int col = 0; col < row; ++col) {
            const double mx = w_mm.block(static_cast<Eigen::Index>(row) * module_size,
                                         static_cast<Eigen::Index>(col) * module_size,
                                         module_size, module_size)
                                  .cwiseAbs().maxCoeff();
            if (mx > tol) return false;
        }
    return true;
}

ForwardTrace rnn_forward(const RnnParams& params, const Matrix& seq) {
    check_seq(params.w_xh.cols(), seq, "rnn_forward");
    ForwardTrace trace;
    Vector h = Vector::Zero(params.n_h());
    for (Eigen::Index t = 0; t < seq.rows(); ++t) {
        h = (params.w_xh * seq.row(t).transpose() + params.w_hh * h + params.b_h)
                .array().tanh();
        trace.h.push_back(h);
        trace.y.push_back(apply_output(params.out_act, params.w_hy * h + params.b_y));
    }
    return trace;
}

ForwardTrace lmn_forward(const LmnParams& params, const Matrix& seq) {
    check_seq(params.w_xh.cols(), seq, "lmn_forward");
    ForwardTrace trace;
    Vector m = Vector::Zero(params.n_m());
    for (Eigen::Index t = 0; t < seq.rows(); ++t) {
        Vector h = (params.w_xh * seq.row(t).transpose() + params.w_mh * m + params.b_h)
                       .array().tanh();
        m = params.w_hm * h + params.w_mm * m + params.b_m;  // linear recurrence
        const Vector& src = params.readout == Readout::FromMemory ? m : h;
        trace.y.push_back(apply_output(params.out_act, params.w_out * src + params.b_y));
        trace.h.push_back(std::move(h));
        trace.m.push_back(m);
    }
    return trace;
}

ForwardTrace urnn_forward(const UrnnParams& params, const Matrix& seq) {
    check_seq(params.w_xh.cols(), seq, "urnn_forward");
    const int k = params.k();
    ForwardTrace trace;
    for (Eigen::Index t = 0; t < seq.rows(); ++t) {
        Vector z = params.w_xh * seq.row(t).transpose() + params.b_h;
        for (int i = 1; i <= k; ++i)
            if (t - i >= 0) z += params.w_hh[i - 1] * trace.h[t - i];
        trace.h.push_back(z.array().tanh().matrix());
        Vector zy = params.b_y;
        for (int i = 0; i <= k; ++i)
            if (t - i >= 0) zy += params.w_hy[i] * trace.h[t - i];
        trace.y.push_back(apply_output(params.out_act, zy));
    }
    return trace;
}

int active_modules(long t, int g) {
    require(t >= 1, "active_modules: t must be >= 1");
    require(g >= 1, "active_modules: g must be >= 1");
    int i = 1;
    long period = 2;
    while (i < g && t % period == 0) {
        ++i;
        period *= 2;
    }
    return i;
}

ForwardTrace mslmn_forward_reference(const MslmnParams& params, const Matrix& seq) {
    check_seq(params.w_xh.cols(), seq, "mslmn_forward_reference");
    const int g = params.g;
    const int nm = params.module_size;
    ForwardTrace trace;
    Vector m = Vector::Zero(params.memory_size());
    for (Eigen::Index t = 0; t < seq.rows(); ++t) {
        Vector z = params.w_xh * seq.row(t).transpose() + params.b_h;
        for (int i = 0; i < g; ++i)
            z += params.w_mh.middleCols(static_cast<Eigen::Index>(i) * nm, nm) *
                 m.segment(static_cast<Eigen::Index>(i) * nm, nm);
        Vector h = z.array().tanh();

        const int imax = active_modules(t + 1, g);
        Vector m_next = m;
        for (int k = 0; k < imax; ++k) {
            Vector mn = params.w_hm.middleRows(static_cast<Eigen::Index>(k) * nm, nm) * h +
                        params.b_m.segment(static_cast<Eigen::Index>(k) * nm, nm);
            // module k reads only itself and slower modules
            for (int i = k; i < g; ++i)
                mn += params.w_mm.block(static_cast<Eigen::Index>(k) * nm,
                                        static_cast<Eigen::Index>(i) * nm, nm, nm) *
                      m.segment(static_cast<Eigen::Index>(i) * nm, nm);
            m_next.segment(static_cast<Eigen::Index>(k) * nm, nm) = mn;
        }
        m = std::move(m_next);

        Vector zy = params.b_y;
        for (int i = 0; i < g; ++i)
            zy += params.w_my.middleCols(static_cast<Eigen::Index>(i) * nm, nm) *
                  m.segment(static_cast<Eigen::Index>(i) * nm, nm);
        trace.h.push_back(std::move(h));
        trace.m.push_back(m);
        trace.y.push_back(apply_output(params.out_act, zy));
    }
    return trace;
}

ForwardTrace mslmn_forward_block(const MslmnParams& params, const Matrix& seq) {
    check_seq(params.w_xh.cols(), seq, "mslmn_forward_block");
    ForwardTrace trace;
    Vector m = Vector::Zero(params.memory_size());
    for (Eigen::Index t = 0; t < seq.rows(); ++t) {
        Vector h = (params.w_xh * seq.row(t).transpose() + params.w_mh * m + params.b_h)
                       .array().tanh();
        const Eigen::Index rows =
            static_cast<Eigen::Index>(active_modules(t + 1, params.g)) * params.module_size;
        Vector m_next = m;
        m_next.head(rows) = params.w_hm.topRows(rows) * h +
                            params.w_mm.topRows(rows) * m + params.b_m.head(rows);
        m = std::move(m_next);
        trace.h.push_back(std::move(h));
        trace.m.push_back(m);
        trace.y.push_back(apply_output(params.out_act, params.w_my * m + params.b_y));
    }
    return trace;
}

ForwardTrace forward(const Model& model, const Matrix& seq) {
    return std::visit(
        [&](const auto& p) -> ForwardTrace {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, RnnParams>) return rnn_forward(p, seq);
            else if constexpr (std::is_same_v<T, LmnParams>) return lmn_forward(p, seq);
            else if constexpr (std::is_same_v<T, UrnnParams>) return urnn_forward(p, seq);
            else return mslmn_forward_block(p, seq);
        },
        model);
}

LmnParams rnn_to_lmn(const RnnParams& rnn) {
    const Eigen::Index nh = rnn.n_h();
    LmnParams lmn;
    lmn.w_xh = rnn.w_xh;
    lmn.w_mh = rnn.w_hh;
    lmn.w_hm = Matrix::Identity(nh, nh);
    lmn.w_mm = Matrix::Zero(nh, nh);
    lmn.w_out = rnn.w_hy;
    lmn.b_h = rnn.b_h;
    lmn.b_m = Vector::Zero(nh);
    lmn.b_y = rnn.b_y;
    lmn.readout = Readout::FromHidden;
    lmn.out_act = rnn.out_act;
    return lmn;
}

long count_params(const ArchDesc& d) {
    const long nx = d.n_x, nh = d.n_h, nm = d.n_m, ny = d.n_y;
    switch (d.kind) {
        case ArchKind::Rnn:
            return nh * nx + nh * nh + ny * nh + nh + ny;
        case ArchKind::Lmn: {
            const long out_in = d.readout == Readout::FromMemory ? nm : nh;
            return nh * nx + nh * nm + nm * nh + nm * nm + ny * out_in + nh + nm + ny;
        }
        case ArchKind::Urnn:
            return nh * nx + d.k * nh * nh + (d.k + 1) * ny * nh + nh + ny;
        case ArchKind::Mslmn: {
            const long total = static_cast<long>(d.g) * nm;
            const long mm_blocks = static_cast<long>(d.g) * (d.g + 1) / 2;
            return nh * nx + nh * total + total * nh + mm_blocks * nm * nm +
                   ny * total + nh + total + ny;
        }
    }
    return 0;
}

long count_params(const Model& model) {
    return std::visit(
        [](const auto& p) -> long {
            using T = std::decay_t<decltype(p)>;
            ArchDesc d;
            if constexpr (std::is_same_v<T, RnnParams>) {
                d = {ArchKind::Rnn, static_cast<int>(p.w_xh.cols()),
                     static_cast<int>(p.n_h()), 0, static_cast<int>(p.w_hy.rows())};
            } else if constexpr (std::is_same_v<T, LmnParams>) {
                d = {ArchKind::Lmn, static_cast<int>(p.w_xh.cols()),
                     static_cast<int>(p.n_h()), static_cast<int>(p.n_m()),
                     static_cast<int>(p.w_out.rows()), 1, 1, p.readout};
            } else if constexpr (std::is_same_v<T, UrnnParams>) {
                d = {ArchKind::Urnn, static_cast<int>(p.w_xh.cols()),
                     static_cast<int>(p.n_h()), 0, static_cast<int>(p.w_hy[0].rows()),
                     1, p.k()};
            } else {
                d = {ArchKind::Mslmn, static_cast<int>(p.w_xh.cols()),
                     static_cast<int>(p.n_h()), p.module_size,
                     static_cast<int>(p.w_my.rows()), p.g};
            }
            return count_params(d);
        },
        model);
}

Eigen::Index output_size(const Model& model) {
    return std::visit(
        [](const auto& p) -> Eigen::Index {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, RnnParams>) return p.w_hy.rows();
            else if constexpr (std::is_same_v<T, LmnParams>) return p.w_out.rows();
            else if constexpr (std::is_same_v<T, UrnnParams>) return p.w_hy[0].rows();
            else return p.w_my.rows();
        },
        model);
}

ArchKind arch_kind(const Model& model) {
    return static_cast<ArchKind>(model.index());
}

}  // namespace seqmem
