#pragma once

#include <random>

#include "seqmem/dataset.hpp"
#include "seqmem/matrix.hpp"

namespace testutil {

inline seqmem::Matrix random_matrix(Eigen::Index rows, Eigen::Index cols,
                                    std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    seqmem::Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return m;
}

inline seqmem::Vector random_vector(Eigen::Index n, std::mt19937_64& rng,
                                    double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    seqmem::Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = dist(rng);
    return v;
}

inline seqmem::Sequence random_sequence(Eigen::Index length, Eigen::Index n_x,
                                        Eigen::Index n_y, std::mt19937_64& rng) {
    seqmem::Sequence s;
    s.inputs = random_matrix(length, n_x, rng);
    s.targets = random_matrix(length, n_y, rng);
    return s;
}

}  // namespace testutil
