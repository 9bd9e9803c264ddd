#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "difmaml/errors.hpp"

namespace difmaml {

// Flat sequence of 64-bit model parameters.
using ParamVector = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm_sq(std::span<const double> a) { return dot(a, a); }

inline double norm(std::span<const double> a) { return std::sqrt(norm_sq(a)); }

// y += c * x
inline void axpy(double c, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

inline bool all_finite(std::span<const double> a) {
    for (double v : a) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

// Dense symmetric matrix, row-major storage. Small by construction (task
// Hessians and combination matrices at desk scale).
struct SymMatrix {
    int n = 0;
    std::vector<double> a;  // n*n, a[i*n+j] == a[j*n+i]

    SymMatrix() = default;
    explicit SymMatrix(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim, 0.0) {}

    static SymMatrix diag(std::span<const double> d) {
        SymMatrix m(static_cast<int>(d.size()));
        for (int i = 0; i < m.n; ++i) m(i, i) = d[i];
        return m;
    }

    static SymMatrix identity(int dim) {
        SymMatrix m(dim);
        for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
        return m;
    }

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

    void matvec(std::span<const double> x, std::span<double> y) const {
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            const double* row = a.data() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) s += row[j] * x[j];
            y[i] = s;
        }
    }

    std::vector<double> matvec(std::span<const double> x) const {
        std::vector<double> y(static_cast<std::size_t>(n));
        matvec(x, y);
        return y;
    }

    // x' M x
    double quad_form(std::span<const double> x) const {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const double* row = a.data() + static_cast<std::size_t>(i) * n;
            double r = 0.0;
            for (int j = 0; j < n; ++j) r += row[j] * x[j];
            s += x[i] * r;
        }
        return s;
    }

    double trace() const {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += (*this)(i, i);
        return s;
    }

    // tr(M^2) = sum of squared entries for symmetric M.
    double trace_sq() const {
        double s = 0.0;
        for (double v : a) s += v * v;
        return s;
    }

    double trace_cube() const {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) s += (*this)(i, j) * (*this)(j, k) * (*this)(k, i);
        return s;
    }
};

// All eigenvalues of a symmetric matrix via the cyclic Jacobi method,
// ascending order. Exact to machine precision at the matrix sizes used here.
std::vector<double> symmetric_eigenvalues(const SymMatrix& m);

inline double lambda_max(const SymMatrix& m) {
    auto ev = symmetric_eigenvalues(m);
    return ev.empty() ? 0.0 : ev.back();
}

inline double lambda_min(const SymMatrix& m) {
    auto ev = symmetric_eigenvalues(m);
    return ev.empty() ? 0.0 : ev.front();
}

// Least-squares slope of y on x.
double regression_slope(std::span<const double> x, std::span<const double> y);

}  // namespace difmaml
