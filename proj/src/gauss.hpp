#pragma once

#include <cstddef>
#include <vector>

namespace relugd {

double norm_pdf(double z);
double norm_cdf(double z);

struct QuadRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

// Gauss-Legendre rule on [-1, 1]; cached per node count, thread-safe.
const QuadRule& gauss_legendre(std::size_t n);

} // namespace relugd
