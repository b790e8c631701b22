#pragma once

#include <cmath>
#include <cstddef>

namespace ccclab {

/// Streaming mean/variance (Welford, with Chan's pairwise merge).
struct RunningStats {
    std::size_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++count;
        const double delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (x - mean);
    }

    void merge(const RunningStats& other) {
        if (other.count == 0) return;
        if (count == 0) {
            *this = other;
            return;
        }
        const double n_a = static_cast<double>(count);
        const double n_b = static_cast<double>(other.count);
        const double n = n_a + n_b;
        const double delta = other.mean - mean;
        mean += delta * (n_b / n);
        m2 += other.m2 + delta * delta * (n_a * n_b / n);
        count += other.count;
    }

    /// Unbiased sample variance (0 for fewer than two samples).
    double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
    double standard_error() const { return count > 1 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0; }
};

}  // namespace ccclab
