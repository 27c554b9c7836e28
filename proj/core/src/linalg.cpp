#include "vtsim/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace vtsim {

void Matrix::set_zero() {
    std::fill(a_.begin(), a_.end(), 0.0);
}

bool lu_factor(Matrix& m, std::vector<int>& perm) {
    const int n = m.size();
    perm.resize(n);
    for (int i = 0; i < n; ++i) perm[i] = i;

    for (int k = 0; k < n; ++k) {
        // Partial pivot: largest magnitude in column k at or below the diagonal.
        int piv = k;
        double best = std::fabs(m(k, k));
        for (int i = k + 1; i < n; ++i) {
            double v = std::fabs(m(i, k));
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best == 0.0 || !std::isfinite(best)) return false;
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
            std::swap(perm[k], perm[piv]);
        }
        const double pivot = m(k, k);
        for (int i = k + 1; i < n; ++i) {
            double f = m(i, k) / pivot;
            m(i, k) = f;
            if (f == 0.0) continue;
            for (int j = k + 1; j < n; ++j) m(i, j) -= f * m(k, j);
        }
    }
    return true;
}

void lu_solve(const Matrix& lu, const std::vector<int>& perm, std::vector<double>& b) {
    const int n = lu.size();
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = b[perm[i]];
    // Forward substitution, unit lower triangle.
    for (int i = 1; i < n; ++i) {
        double s = x[i];
        for (int j = 0; j < i; ++j) s -= lu(i, j) * x[j];
        x[i] = s;
    }
    // Back substitution.
    for (int i = n - 1; i >= 0; --i) {
        double s = x[i];
        for (int j = i + 1; j < n; ++j) s -= lu(i, j) * x[j];
        x[i] = s / lu(i, i);
    }
    b = std::move(x);
}

}  // namespace vtsim
