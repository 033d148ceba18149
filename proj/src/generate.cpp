#include "ozmm/generate.hpp"

#include "ozmm/parallel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ozmm {

MatrixF64 gen_phi_matrix(Index m, Index n, double phi, std::uint64_t seed) {
  if (m < 1 || n < 1) throw std::invalid_argument("gen_phi_matrix: empty shape");
  if (!(phi >= 0)) throw std::invalid_argument("gen_phi_matrix: phi must be >= 0");

  MatrixF64 a(m, n);
  const Index total = m * n;
  double* data = a.data();
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Index idx = 0; idx < total; ++idx) {
    const std::uint64_t ctr = static_cast<std::uint64_t>(idx) * 3;
    const double u = uniform_open(counter_hash(seed, ctr));
    const double u1 = uniform_open(counter_hash(seed, ctr + 1));
    const double u2 = uniform_open(counter_hash(seed, ctr + 2));
    const double normal =
        std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    data[idx] = (u - 0.5) * std::exp(phi * normal);
  }
  return a;
}

}  // namespace ozmm
