#include "motic/vec.hpp"

#include <algorithm>

namespace motic {

double dot(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw ShapeMismatchError("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

double norm(const Vec& v) { return std::sqrt(dot(v, v)); }

bool all_finite(const Vec& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

bool all_finite(const Mat& m) {
    for (double x : m.data) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

Vec l2_normalize(const Vec& v) {
    const double n = norm(v);
    if (!(n > kNormEps)) throw ZeroNormError("l2_normalize: norm below 1e-12");
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
    return out;
}

double cosine_sim(const Vec& x, const Vec& y) {
    const double nx = norm(x);
    const double ny = norm(y);
    if (!(nx > kNormEps) || !(ny > kNormEps)) {
        throw ZeroNormError("cosine_sim: degenerate input");
    }
    const double c = dot(x, y) / (nx * ny);
    return std::clamp(c, -1.0, 1.0);
}

Vec matvec(const Mat& a, const Vec& x) {
    if (a.cols != static_cast<int>(x.size())) throw ShapeMismatchError("matvec: dimension mismatch");
    Vec y(static_cast<std::size_t>(a.rows), 0.0);
    for (int r = 0; r < a.rows; ++r) {
        const double* row = a.data.data() + static_cast<std::size_t>(r) * a.cols;
        double s = 0.0;
        for (int c = 0; c < a.cols; ++c) s += row[c] * x[c];
        y[r] = s;
    }
    return y;
}

Vec matvec_t(const Mat& a, const Vec& x) {
    if (a.rows != static_cast<int>(x.size())) throw ShapeMismatchError("matvec_t: dimension mismatch");
    Vec y(static_cast<std::size_t>(a.cols), 0.0);
    for (int r = 0; r < a.rows; ++r) {
        const double* row = a.data.data() + static_cast<std::size_t>(r) * a.cols;
        const double xr = x[r];
        for (int c = 0; c < a.cols; ++c) y[c] += row[c] * xr;
    }
    return y;
}

Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
    if (!(h > 0.0)) throw ConfigError("finite_diff_grad: h must be positive");
    Vec g(x.size());
    Vec probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = probe[i];
        probe[i] = xi + h;
        const double fp = f(probe);
        probe[i] = xi - h;
        const double fm = f(probe);
        probe[i] = xi;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw NonFiniteError("finite_diff_grad: non-finite evaluation");
        }
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

}  // namespace motic
