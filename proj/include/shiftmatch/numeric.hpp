#pragma once

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

namespace shiftmatch {

// Pairwise summation. The split points depend only on the length, so the
// result is independent of how the values were produced (thread schedule,
// chunking, ...).
inline double pairwise_sum(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline double mean(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("mean of empty range");
    return pairwise_sum(v) / static_cast<double>(v.size());
}

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;  // population variance (1/n)
    double std_err = 0.0;  // sd of the mean, sample variance (1/(n-1))
};

inline MeanVar mean_var(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n == 0) throw std::invalid_argument("mean_var of empty range");
    MeanVar out;
    out.mean = mean(v);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = v[i] - out.mean;
        sq[i] = d * d;
    }
    const double ss = pairwise_sum(sq);
    out.var = ss / static_cast<double>(n);
    out.std_err = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    return out;
}

namespace detail {
inline int& max_threads_override() {
    static int v = 0;  // 0 = resolve from env / hardware
    return v;
}
inline thread_local bool in_parallel_worker = false;
}  // namespace detail

// Caps worker threads globally (0 restores SHIFTMATCH_THREADS / hardware).
inline void set_max_threads(int n) { detail::max_threads_override() = n; }

inline int resolved_thread_count() {
    if (detail::max_threads_override() > 0) return detail::max_threads_override();
    if (const char* env = std::getenv("SHIFTMATCH_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(i) for i in [0, n). Work is handed out in fixed-size chunks through
// an atomic cursor; fn must write only to slot i of pre-sized output. Nested
// calls run serially, keeping replication-level parallelism the only level.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const int threads = resolved_thread_count();
    if (threads <= 1 || n == 1 || detail::in_parallel_worker) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    constexpr std::size_t kChunk = 16;
    std::atomic<std::size_t> cursor{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        detail::in_parallel_worker = true;
        for (;;) {
            const std::size_t begin = cursor.fetch_add(kChunk);
            if (begin >= n || failed.load()) break;
            const std::size_t end = std::min(begin + kChunk, n);
            for (std::size_t i = begin; i < end; ++i) {
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                    return;
                }
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t nworkers = std::min<std::size_t>(static_cast<std::size_t>(threads), (n + kChunk - 1) / kChunk);
    pool.reserve(nworkers);
    for (std::size_t t = 0; t < nworkers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failed.load() && error) std::rethrow_exception(error);
}

// Adaptive Simpson quadrature on [a, b].
namespace detail {
inline double simpson(const std::function<double(double)>& f, double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}
inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double fa, double b, double fb,
                                   double fm, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(f, a, fa, m, fm, flm);
    const double right = simpson(f, m, fm, b, fb, frm);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive_simpson_rec(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

inline double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-10) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = detail::simpson(f, a, fa, b, fb, fm);
    return detail::adaptive_simpson_rec(f, a, fa, b, fb, fm, whole, tol, 48);
}

}  // namespace shiftmatch
