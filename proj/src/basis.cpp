#include "shiftmatch/basis.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace shiftmatch {

std::int64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::int64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

namespace {

// All tuples of fixed total degree, in lexicographic order.
void emit_degree(int d, int degree, std::vector<int>& tuple, int pos, int remaining,
                 std::vector<std::vector<int>>& out) {
    if (pos == d - 1) {
        tuple[pos] = remaining;
        out.push_back(tuple);
        return;
    }
    for (int v = 0; v <= remaining; ++v) {
        tuple[pos] = v;
        emit_degree(d, degree, tuple, pos + 1, remaining - v, out);
    }
}

}  // namespace

MultiIndexBasis build_basis(int d, int L) {
    if (d < 1) throw std::invalid_argument("build_basis: dimension must be >= 1");
    if (L < 0) throw std::invalid_argument("build_basis: order must be >= 0");
    MultiIndexBasis b;
    b.d = d;
    b.L = L;
    std::vector<int> tuple(static_cast<std::size_t>(d), 0);
    for (int degree = 0; degree <= L; ++degree) {
        emit_degree(d, degree, tuple, 0, degree, b.indices);
    }
    b.kstar = static_cast<int>(b.indices.size());
    if (b.kstar != binomial(d + L, d)) {
        throw std::logic_error("build_basis: enumeration disagrees with binomial(d+L, d)");
    }
    for (int i = 1; i <= L; ++i) b.dconst += i * binomial(d + i - 1, i);
    return b;
}

void eval_monomials(const MultiIndexBasis& basis, std::span<const double> z, std::span<const double> t, double scale,
                    std::span<double> out) {
    const std::size_t d = static_cast<std::size_t>(basis.d);
    if (z.size() != d || t.size() != d) throw std::invalid_argument("eval_monomials: point dimension mismatch");
    if (!(scale > 0)) throw std::invalid_argument("eval_monomials: scale must be positive");
    if (out.size() != static_cast<std::size_t>(basis.kstar)) {
        throw std::invalid_argument("eval_monomials: output length mismatch");
    }
    // diff reused across monomials; powers are tiny (|alpha| <= L).
    double diff[64];
    double* dp = d <= 64 ? diff : nullptr;
    std::vector<double> heap_diff;
    if (!dp) {
        heap_diff.resize(d);
        dp = heap_diff.data();
    }
    for (std::size_t j = 0; j < d; ++j) dp[j] = (t[j] - z[j]) / scale;
    for (std::size_t a = 0; a < out.size(); ++a) {
        double v = 1.0;
        const auto& alpha = basis.indices[a];
        for (std::size_t j = 0; j < d; ++j) {
            for (int p = 0; p < alpha[j]; ++p) v *= dp[j];
        }
        out[a] = v;
    }
    out[0] = 1.0;
}

std::vector<double> eval_monomials(const MultiIndexBasis& basis, std::span<const double> z, std::span<const double> t,
                                   double scale) {
    std::vector<double> out(static_cast<std::size_t>(basis.kstar));
    eval_monomials(basis, z, t, scale, out);
    return out;
}

}  // namespace shiftmatch
