#pragma once

#include <cstdint>
#include <random>

#include "fbs/vec.hpp"

namespace fbs {

// Seeded sampling with a fixed Box-Muller transform over mt19937_64.
// std::normal_distribution is implementation-defined, so rolling the
// transform by hand keeps seeded outputs byte-identical everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  Vector normal_vector(int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Matrix normal_matrix(int rows, int cols) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fbs
