#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "motic/error.hpp"

namespace motic {

// All numerics are 64-bit: the finite-difference checks at 1e-4 relative
// tolerance are not reliable in float.
using Vec = std::vector<double>;

// Dense row-major matrix.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }
};

// Norm floor for zero-vector detection; far below any legitimate feature norm.
inline constexpr double kNormEps = 1e-12;

double dot(const Vec& x, const Vec& y);
double norm(const Vec& v);
bool all_finite(const Vec& v);
bool all_finite(const Mat& m);

// v / ||v||. Throws ZeroNormError when ||v|| <= 1e-12.
Vec l2_normalize(const Vec& v);

// x'y / (||x|| ||y||), clamped into [-1, 1] against rounding.
double cosine_sim(const Vec& x, const Vec& y);

// y = A x
Vec matvec(const Mat& a, const Vec& x);
// y = A' x
Vec matvec_t(const Mat& a, const Vec& x);

// Central differences (f(x + h e_i) - f(x - h e_i)) / (2h) per coordinate.
// The verification oracle for every analytic gradient in this repository;
// it only ever evaluates f, never any gradient code.
Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& x, double h);

}  // namespace motic
