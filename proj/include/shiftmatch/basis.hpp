#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace shiftmatch {

// Ordered multi-index set for d-variate monomials of total degree <= L.
// Entry 0 is always the zero tuple, so the constant term of a local fit sits
// at position 0. Order is (total degree, lexicographic), which pins the
// serialisation of fitted coefficient vectors.
struct MultiIndexBasis {
    int d = 0;
    int L = 0;
    std::vector<std::vector<int>> indices;
    int kstar = 0;           // binomial(d+L, d)
    std::int64_t dconst = 0;  // sum_{i=1..L} i * binomial(d+i-1, i)
};

MultiIndexBasis build_basis(int d, int L);

std::int64_t binomial(int n, int k);

// Evaluates all basis monomials of (t - z)/scale into out (length kstar).
// Component 0 is always exactly 1.
void eval_monomials(const MultiIndexBasis& basis, std::span<const double> z, std::span<const double> t, double scale,
                    std::span<double> out);

std::vector<double> eval_monomials(const MultiIndexBasis& basis, std::span<const double> z, std::span<const double> t,
                                   double scale = 1.0);

}  // namespace shiftmatch
