#include "deepmatch/numerics/kernels.hpp"

#include <cmath>

namespace deepmatch::kernels::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum_scalar(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

double sum_squares_scalar(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void gemv_scalar(const double* a, std::size_t rows, std::size_t cols, const double* x,
                 double* y) {
    for (std::size_t r = 0; r < rows; ++r) y[r] = dot_scalar(a + r * cols, x, cols);
}

void gemv_t_acc_scalar(const double* a, std::size_t rows, std::size_t cols, const double* d,
                       double* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        if (d[r] != 0.0) axpy_scalar(d[r], a + r * cols, out, cols);
    }
}

void ger_acc_scalar(const double* d, const double* x, double* g, std::size_t rows,
                    std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        if (d[r] != 0.0) axpy_scalar(d[r], x, g + r * cols, cols);
    }
}

void adam_update_scalar(double* p, const double* g, double* m, double* v, std::size_t n,
                        double lr, double beta1, double beta2, double eps, double bias1,
                        double bias2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        const double mhat = m[i] / bias1;
        const double vhat = v[i] / bias2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{dot_scalar,        sum_scalar,     sum_squares_scalar,
                                   axpy_scalar,       scale_scalar,   gemv_scalar,
                                   gemv_t_acc_scalar, ger_acc_scalar, adam_update_scalar};
    return table;
}

}  // namespace deepmatch::kernels::detail
