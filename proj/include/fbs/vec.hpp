#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace fbs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite())
    throw std::invalid_argument(std::string(what) + ": vector has NaN/Inf entries");
}

inline void require_same_size(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size())
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
}

}  // namespace fbs
