#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace seqmem {

// All numerics are double precision; the LAES exactness properties depend on it.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline bool is_finite(const Matrix& m) { return m.allFinite(); }

inline void require_finite(const Matrix& m, const std::string& what) {
    if (!m.allFinite())
        throw std::invalid_argument(what + ": contains NaN or Inf");
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace seqmem
