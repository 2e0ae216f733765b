#pragma once

// Direct solves with the free-boundary lattice Laplacian. The matrix
// B^T B is diagonalized by the separable DCT-II, with eigenvalue
// sum_axes (2 - 2 cos(pi k / N)), so (a I + b L) x = r costs two
// transforms. FFTW does the transforms.

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <span>
#include <vector>

#include "tvdn/grid.hpp"

namespace tvdn::detail {

// FFTW planning is not thread-safe; execution with new-array calls is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

class LaplacianDct {
public:
    explicit LaplacianDct(const LatticeShape& shape)
        : m_(shape.num_sites()), buffer_(fftw_alloc_real(m_)), eigen_(m_, 0.0) {
        const int d = static_cast<int>(shape.dims());
        // FFTW is row-major: the fastest axis goes last.
        std::vector<int> n(d);
        for (int k = 0; k < d; ++k) n[k] = static_cast<int>(shape.size(d - 1 - k));
        std::vector<fftw_r2r_kind> fwd(d, FFTW_REDFT10), inv(d, FFTW_REDFT01);
        {
            std::lock_guard lock(fftw_planner_mutex());
            forward_ = fftw_plan_r2r(d, n.data(), buffer_, buffer_, fwd.data(), FFTW_ESTIMATE);
            inverse_ = fftw_plan_r2r(d, n.data(), buffer_, buffer_, inv.data(), FFTW_ESTIMATE);
        }
        scale_ = 1.0;
        for (std::size_t axis = 0; axis < shape.dims(); ++axis)
            scale_ /= 2.0 * static_cast<double>(shape.size(axis));
        for (std::size_t i = 0; i < m_; ++i) {
            std::size_t rest = i;
            double ev = 0.0;
            for (std::size_t axis = 0; axis < shape.dims(); ++axis) {
                const std::size_t len = shape.size(axis);
                const std::size_t k = rest % len;
                rest /= len;
                ev += 2.0 - 2.0 * std::cos(M_PI * static_cast<double>(k) / static_cast<double>(len));
            }
            eigen_[i] = ev;
        }
    }

    LaplacianDct(const LaplacianDct&) = delete;
    LaplacianDct& operator=(const LaplacianDct&) = delete;

    ~LaplacianDct() {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(inverse_);
        fftw_free(buffer_);
    }

    // x = (a I + b L)^+ rhs. With a = 0 the constant mode is dropped, which
    // gives the mean-zero pseudo-inverse solution.
    void solve(double a, double b, std::span<const double> rhs, std::span<double> x) {
        std::copy(rhs.begin(), rhs.end(), buffer_);
        fftw_execute(forward_);
        for (std::size_t i = 0; i < m_; ++i) {
            const double denom = a + b * eigen_[i];
            buffer_[i] = denom > 1e-300 * (a + b) ? buffer_[i] * scale_ / denom : 0.0;
        }
        fftw_execute(inverse_);
        std::copy(buffer_, buffer_ + m_, x.begin());
    }

private:
    std::size_t m_;
    double* buffer_;
    std::vector<double> eigen_;
    double scale_ = 1.0;
    fftw_plan forward_{};
    fftw_plan inverse_{};
};

}  // namespace tvdn::detail
