#pragma once

#include <vector>

namespace vtsim {

// Dense square matrix, row-major. MNA systems here stay well under
// ~50 unknowns, so no sparsity is attempted.
class Matrix {
public:
    Matrix() = default;
    explicit Matrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * n, 0.0) {}

    int size() const { return n_; }
    double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * n_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }
    void set_zero();

private:
    int n_ = 0;
    std::vector<double> a_;
};

// In-place LU factorization with partial pivoting.
// Returns false when a pivot column is exactly or numerically zero.
bool lu_factor(Matrix& m, std::vector<int>& perm);

// Solves LU x = b given the output of lu_factor; b is replaced by x.
void lu_solve(const Matrix& lu, const std::vector<int>& perm, std::vector<double>& b);

}  // namespace vtsim
