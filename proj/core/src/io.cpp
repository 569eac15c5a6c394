#include "seqmem/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace seqmem {

using nlohmann::json;

namespace {

Matrix parse_rows(const json& arr, const std::string& what, long line) {
    if (!arr.is_array())
        throw std::runtime_error("line " + std::to_string(line) + ": \"" + what +
                                 "\" must be an array of arrays");
    const Eigen::Index rows = static_cast<Eigen::Index>(arr.size());
    Eigen::Index cols = -1;
    Matrix m;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const json& row = arr[static_cast<std::size_t>(r)];
        if (!row.is_array())
            throw std::runtime_error("line " + std::to_string(line) + ": \"" + what +
                                     "\" rows must be arrays");
        if (cols < 0) {
            cols = static_cast<Eigen::Index>(row.size());
            m.resize(rows, cols);
        }
        if (static_cast<Eigen::Index>(row.size()) != cols)
            throw std::runtime_error("line " + std::to_string(line) + ": ragged \"" +
                                     what + "\" rows");
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    if (rows == 0) m.resize(0, 0);
    require_finite(m, "line " + std::to_string(line) + " \"" + what + "\"");
    return m;
}

json dump_rows(const Matrix& m) {
    json arr = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        arr.push_back(std::move(row));
    }
    return arr;
}

const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "train";
}

Split split_from(const std::string& s, long line) {
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    throw std::runtime_error("line " + std::to_string(line) + ": unknown split \"" + s + "\"");
}

}  // namespace

SequenceDataset load_sequences(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_sequences: cannot open " + path);
    SequenceDataset ds;
    std::string text;
    long line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.empty()) continue;
        json rec;
        try {
            rec = json::parse(text);
        } catch (const json::parse_error& e) {
            throw std::runtime_error("line " + std::to_string(line) +
                                     ": malformed JSON (" + e.what() + ")");
        }
        if (!rec.contains("x"))
            throw std::runtime_error("line " + std::to_string(line) + ": missing \"x\"");
        const bool has_y = rec.contains("y");
        const bool has_label = rec.contains("label");
        if (has_y == has_label)
            throw std::runtime_error("line " + std::to_string(line) +
                                     ": exactly one of \"y\" or \"label\" required");
        Sequence seq;
        seq.inputs = parse_rows(rec["x"], "x", line);
        if (has_y) {
            seq.targets = parse_rows(rec["y"], "y", line);
            if (seq.targets.rows() != seq.inputs.rows())
                throw std::runtime_error("line " + std::to_string(line) +
                                         ": \"x\"/\"y\" length mismatch");
        } else {
            seq.label = rec["label"].get<int>();
            if (seq.label < 0)
                throw std::runtime_error("line " + std::to_string(line) +
                                         ": label must be >= 0");
        }
        if (rec.contains("split"))
            seq.split = split_from(rec["split"].get<std::string>(), line);
        if (!ds.sequences.empty() && seq.inputs.cols() != ds.input_size())
            throw std::runtime_error("line " + std::to_string(line) +
                                     ": inconsistent input element size");
        ds.sequences.push_back(std::move(seq));
    }
    if (ds.sequences.empty())
        throw std::runtime_error("load_sequences: " + path + " holds no records");
    return ds;
}

void save_sequences(const SequenceDataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_sequences: cannot write " + path);
    for (const auto& seq : dataset.sequences) {
        json rec;
        rec["x"] = dump_rows(seq.inputs);
        if (seq.has_label())
            rec["label"] = seq.label;
        else
            rec["y"] = dump_rows(seq.targets);
        rec["split"] = split_name(seq.split);
        out << rec.dump() << '\n';
    }
}

namespace {

json dump_tensor(const Matrix& m) {
    json t;
    t["shape"] = {m.rows(), m.cols()};
    json data = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)  // row-major layout on disk
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    t["data"] = std::move(data);
    return t;
}

json dump_tensor(const Vector& v) {
    json t;
    t["shape"] = {v.size()};
    json data = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(v(i));
    t["data"] = std::move(data);
    return t;
}

Matrix read_matrix(const json& t, const std::string& name) {
    if (!t.contains("shape") || !t.contains("data") || t["shape"].size() != 2)
        throw std::runtime_error("checkpoint: bad tensor \"" + name + "\"");
    const Eigen::Index rows = t["shape"][0].get<Eigen::Index>();
    const Eigen::Index cols = t["shape"][1].get<Eigen::Index>();
    const auto& data = t["data"];
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw std::runtime_error("checkpoint: tensor \"" + name + "\" size mismatch");
    Matrix m(rows, cols);
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[i++].get<double>();
    require_finite(m, "checkpoint tensor " + name);
    return m;
}

Vector read_vector(const json& t, const std::string& name) {
    if (!t.contains("shape") || !t.contains("data") || t["shape"].size() != 1)
        throw std::runtime_error("checkpoint: bad tensor \"" + name + "\"");
    const Eigen::Index n = t["shape"][0].get<Eigen::Index>();
    const auto& data = t["data"];
    if (static_cast<Eigen::Index>(data.size()) != n)
        throw std::runtime_error("checkpoint: tensor \"" + name + "\" size mismatch");
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = data[static_cast<std::size_t>(i)].get<double>();
    require_finite(v, "checkpoint tensor " + name);
    return v;
}

const char* act_name(OutputAct a) {
    return a == OutputAct::Sigmoid ? "sigmoid" : "identity";
}

OutputAct act_from(const std::string& s) {
    if (s == "identity") return OutputAct::Identity;
    if (s == "sigmoid") return OutputAct::Sigmoid;
    throw std::runtime_error("checkpoint: unknown output activation \"" + s + "\"");
}

void check(bool ok, const char* msg) {
    if (!ok) throw std::runtime_error(std::string("checkpoint: ") + msg);
}

}  // namespace

std::string checkpoint_to_json(const Model& model) {
    json doc;
    json& tensors = doc["tensors"];
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            doc["output_activation"] = act_name(p.out_act);
            if constexpr (std::is_same_v<T, RnnParams>) {
                doc["architecture"] = "rnn";
                tensors["w_xh"] = dump_tensor(p.w_xh);
                tensors["w_hh"] = dump_tensor(p.w_hh);
                tensors["w_hy"] = dump_tensor(p.w_hy);
            } else if constexpr (std::is_same_v<T, LmnParams>) {
                doc["architecture"] = "lmn";
                doc["readout"] = p.readout == Readout::FromMemory ? "memory" : "hidden";
                tensors["w_xh"] = dump_tensor(p.w_xh);
                tensors["w_mh"] = dump_tensor(p.w_mh);
                tensors["w_hm"] = dump_tensor(p.w_hm);
                tensors["w_mm"] = dump_tensor(p.w_mm);
                tensors["w_out"] = dump_tensor(p.w_out);
                tensors["b_m"] = dump_tensor(p.b_m);
            } else if constexpr (std::is_same_v<T, UrnnParams>) {
                doc["architecture"] = "urnn";
                doc["k"] = p.k();
                tensors["w_xh"] = dump_tensor(p.w_xh);
                for (int i = 0; i < p.k(); ++i)
                    tensors["w_hh_" + std::to_string(i + 1)] = dump_tensor(p.w_hh[i]);
                for (int i = 0; i <= p.k(); ++i)
                    tensors["w_hy_" + std::to_string(i)] = dump_tensor(p.w_hy[i]);
            } else {
                doc["architecture"] = "mslmn";
                doc["g"] = p.g;
                doc["module_size"] = p.module_size;
                tensors["w_xh"] = dump_tensor(p.w_xh);
                tensors["w_mh"] = dump_tensor(p.w_mh);
                tensors["w_hm"] = dump_tensor(p.w_hm);
                tensors["w_mm"] = dump_tensor(p.w_mm);
                tensors["w_my"] = dump_tensor(p.w_my);
                tensors["b_m"] = dump_tensor(p.b_m);
            }
            tensors["b_h"] = dump_tensor(p.b_h);
            tensors["b_y"] = dump_tensor(p.b_y);
        },
        model);
    return doc.dump(2);
}

Model checkpoint_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("checkpoint: parse error: ") + e.what());
    }
    check(doc.contains("architecture") && doc.contains("tensors"),
          "missing architecture or tensors");
    const std::string arch = doc["architecture"].get<std::string>();
    const json& t = doc["tensors"];
    const OutputAct act = act_from(doc.value("output_activation", "identity"));

    if (arch == "rnn") {
        RnnParams p;
        p.w_xh = read_matrix(t.at("w_xh"), "w_xh");
        p.w_hh = read_matrix(t.at("w_hh"), "w_hh");
        p.w_hy = read_matrix(t.at("w_hy"), "w_hy");
        p.b_h = read_vector(t.at("b_h"), "b_h");
        p.b_y = read_vector(t.at("b_y"), "b_y");
        p.out_act = act;
        check(p.w_hh.rows() == p.w_hh.cols(), "w_hh must be square");
        check(p.w_xh.rows() == p.w_hh.rows() && p.w_hy.cols() == p.w_hh.rows(),
              "rnn shape mismatch");
        check(p.b_h.size() == p.w_hh.rows() && p.b_y.size() == p.w_hy.rows(),
              "rnn bias shape mismatch");
        return p;
    }
    if (arch == "lmn") {
        LmnParams p;
        p.w_xh = read_matrix(t.at("w_xh"), "w_xh");
        p.w_mh = read_matrix(t.at("w_mh"), "w_mh");
        p.w_hm = read_matrix(t.at("w_hm"), "w_hm");
        p.w_mm = read_matrix(t.at("w_mm"), "w_mm");
        p.w_out = read_matrix(t.at("w_out"), "w_out");
        p.b_h = read_vector(t.at("b_h"), "b_h");
        p.b_m = read_vector(t.at("b_m"), "b_m");
        p.b_y = read_vector(t.at("b_y"), "b_y");
        p.readout = doc.value("readout", "memory") == "hidden" ? Readout::FromHidden
                                                               : Readout::FromMemory;
        p.out_act = act;
        const auto nh = p.w_xh.rows(), nm = p.w_mm.rows();
        check(p.w_mm.cols() == nm && p.w_mh.rows() == nh && p.w_mh.cols() == nm &&
                  p.w_hm.rows() == nm && p.w_hm.cols() == nh,
              "lmn shape mismatch");
        check(p.w_out.cols() == (p.readout == Readout::FromMemory ? nm : nh),
              "lmn readout shape mismatch");
        check(p.b_h.size() == nh && p.b_m.size() == nm && p.b_y.size() == p.w_out.rows(),
              "lmn bias shape mismatch");
        return p;
    }
    if (arch == "urnn") {
        UrnnParams p;
        const int k = doc.at("k").get<int>();
        check(k >= 1, "urnn k must be >= 1");
        p.w_xh = read_matrix(t.at("w_xh"), "w_xh");
        for (int i = 1; i <= k; ++i)
            p.w_hh.push_back(read_matrix(t.at("w_hh_" + std::to_string(i)), "w_hh"));
        for (int i = 0; i <= k; ++i)
            p.w_hy.push_back(read_matrix(t.at("w_hy_" + std::to_string(i)), "w_hy"));
        p.b_h = read_vector(t.at("b_h"), "b_h");
        p.b_y = read_vector(t.at("b_y"), "b_y");
        p.out_act = act;
        const auto nh = p.w_xh.rows();
        for (const auto& w : p.w_hh)
            check(w.rows() == nh && w.cols() == nh, "urnn recurrent shape mismatch");
        for (const auto& w : p.w_hy)
            check(w.cols() == nh && w.rows() == p.w_hy[0].rows(),
                  "urnn output shape mismatch");
        check(p.b_h.size() == nh && p.b_y.size() == p.w_hy[0].rows(),
              "urnn bias shape mismatch");
        return p;
    }
    if (arch == "mslmn") {
        MslmnParams p;
        p.g = doc.at("g").get<int>();
        p.module_size = doc.at("module_size").get<int>();
        check(p.g >= 1 && p.module_size >= 1, "mslmn sizes must be positive");
        p.w_xh = read_matrix(t.at("w_xh"), "w_xh");
        p.w_mh = read_matrix(t.at("w_mh"), "w_mh");
        p.w_hm = read_matrix(t.at("w_hm"), "w_hm");
        p.w_mm = read_matrix(t.at("w_mm"), "w_mm");
        p.w_my = read_matrix(t.at("w_my"), "w_my");
        p.b_h = read_vector(t.at("b_h"), "b_h");
        p.b_m = read_vector(t.at("b_m"), "b_m");
        p.b_y = read_vector(t.at("b_y"), "b_y");
        p.out_act = act;
        const auto nh = p.w_xh.rows();
        const auto total = p.memory_size();
        check(p.w_mm.rows() == total && p.w_mm.cols() == total &&
                  p.w_mh.rows() == nh && p.w_mh.cols() == total &&
                  p.w_hm.rows() == total && p.w_hm.cols() == nh &&
                  p.w_my.cols() == total,
              "mslmn shape mismatch");
        check(p.b_h.size() == nh && p.b_m.size() == total && p.b_y.size() == p.w_my.rows(),
              "mslmn bias shape mismatch");
        check(p.structure_ok(), "mslmn below-diagonal memory blocks must be zero");
        return p;
    }
    throw std::runtime_error("checkpoint: unknown architecture tag \"" + arch + "\"");
}

void save_checkpoint(const Model& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_checkpoint: cannot write " + path);
    out << checkpoint_to_json(model) << '\n';
}

Model load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return checkpoint_from_json(ss.str());
}

}  // namespace seqmem
