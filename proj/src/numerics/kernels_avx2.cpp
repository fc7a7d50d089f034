#include "deepmatch/numerics/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define DEEPMATCH_HAVE_AVX2 1
#else
#define DEEPMATCH_HAVE_AVX2 0
#endif

namespace deepmatch::kernels::detail {

#if DEEPMATCH_HAVE_AVX2
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum_avx2(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i];
    return s;
}

double sum_squares_avx2(const double* a, std::size_t n) { return dot_avx2(a, a, n); }

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_avx2(double alpha, double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= alpha;
}

void gemv_avx2(const double* a, std::size_t rows, std::size_t cols, const double* x,
               double* y) {
    for (std::size_t r = 0; r < rows; ++r) y[r] = dot_avx2(a + r * cols, x, cols);
}

void gemv_t_acc_avx2(const double* a, std::size_t rows, std::size_t cols, const double* d,
                     double* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        if (d[r] != 0.0) axpy_avx2(d[r], a + r * cols, out, cols);
    }
}

void ger_acc_avx2(const double* d, const double* x, double* g, std::size_t rows,
                  std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        if (d[r] != 0.0) axpy_avx2(d[r], x, g + r * cols, cols);
    }
}

void adam_update_avx2(double* p, const double* g, double* m, double* v, std::size_t n,
                      double lr, double beta1, double beta2, double eps, double bias1,
                      double bias2) {
    const __m256d b1 = _mm256_set1_pd(beta1);
    const __m256d b1c = _mm256_set1_pd(1.0 - beta1);
    const __m256d b2 = _mm256_set1_pd(beta2);
    const __m256d b2c = _mm256_set1_pd(1.0 - beta2);
    const __m256d inv_bias1 = _mm256_set1_pd(1.0 / bias1);
    const __m256d inv_bias2 = _mm256_set1_pd(1.0 / bias2);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vlr = _mm256_set1_pd(lr);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d gi = _mm256_loadu_pd(g + i);
        const __m256d mi = _mm256_fmadd_pd(b1, _mm256_loadu_pd(m + i), _mm256_mul_pd(b1c, gi));
        const __m256d vi = _mm256_fmadd_pd(b2, _mm256_loadu_pd(v + i),
                                           _mm256_mul_pd(b2c, _mm256_mul_pd(gi, gi)));
        _mm256_storeu_pd(m + i, mi);
        _mm256_storeu_pd(v + i, vi);
        const __m256d denom =
            _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vi, inv_bias2)), veps);
        const __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, _mm256_mul_pd(mi, inv_bias1)), denom);
        _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        p[i] -= lr * (m[i] / bias1) / (__builtin_sqrt(v[i] / bias2) + eps);
    }
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{dot_avx2,        sum_avx2,     sum_squares_avx2,
                                   axpy_avx2,       scale_avx2,   gemv_avx2,
                                   gemv_t_acc_avx2, ger_acc_avx2, adam_update_avx2};
    return table;
}

#else

const KernelTable& avx2_table() { return scalar_table(); }

#endif

}  // namespace deepmatch::kernels::detail
