#ifndef KSK_TRIDIAG_HPP
#define KSK_TRIDIAG_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "ksk/errors.hpp"

namespace ksk {

// Thomas algorithm for a*x_{i-1} + b*x_i + c*x_{i+1} = d_i.
// The diffusion rows this solves are strictly diagonally dominant, so no
// pivoting is needed; a vanishing pivot is reported as a numerics error.
// `d` is overwritten with the solution; `scratch` must have size n.
inline void solve_tridiagonal(const std::vector<double>& a,
                              const std::vector<double>& b,
                              const std::vector<double>& c,
                              double* d, std::size_t n,
                              std::vector<double>& scratch) {
    double pivot = b[0];
    if (pivot == 0.0 || !std::isfinite(pivot))
        throw numerics_error("tridiagonal solve: zero or non-finite pivot at row 0");
    scratch[0] = c[0] / pivot;
    d[0] /= pivot;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = b[i] - a[i] * scratch[i - 1];
        if (pivot == 0.0 || !std::isfinite(pivot))
            throw numerics_error("tridiagonal solve: zero or non-finite pivot");
        scratch[i] = c[i] / pivot;
        d[i] = (d[i] - a[i] * d[i - 1]) / pivot;
    }
    for (std::size_t i = n - 1; i-- > 0;)
        d[i] -= scratch[i] * d[i + 1];
}

} // namespace ksk

#endif
