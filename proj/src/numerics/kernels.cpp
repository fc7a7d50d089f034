#include "deepmatch/numerics/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "deepmatch/error.hpp"

namespace deepmatch::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend initial_backend() {
    if (const char* env = std::getenv("DEEPMATCH_SIMD")) {
        if (std::string(env) == "scalar") return Backend::Scalar;
    }
    return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& backend_slot() {
    static std::atomic<Backend> slot{initial_backend()};
    return slot;
}

void check_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw DimensionError(std::string(what) + ": length mismatch");
}

}  // namespace

std::string_view backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

bool avx2_supported() {
    static const bool supported = cpu_has_avx2();
    return supported;
}

Backend active_backend() { return backend_slot().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
    if (b == Backend::Avx2 && !avx2_supported())
        throw PreconditionError("AVX2 backend requested on a CPU without AVX2/FMA");
    backend_slot().store(b, std::memory_order_relaxed);
}

namespace detail {
const KernelTable& active_table() {
    return active_backend() == Backend::Avx2 ? avx2_table() : scalar_table();
}
}  // namespace detail

double dot(std::span<const double> a, std::span<const double> b) {
    check_size(a.size(), b.size(), "dot");
    return detail::active_table().dot(a.data(), b.data(), a.size());
}

double sum(std::span<const double> a) { return detail::active_table().sum(a.data(), a.size()); }

double sum_squares(std::span<const double> a) {
    return detail::active_table().sum_squares(a.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    check_size(x.size(), y.size(), "axpy");
    detail::active_table().axpy(alpha, x.data(), y.data(), x.size());
}

void scale(double alpha, std::span<double> x) {
    detail::active_table().scale(alpha, x.data(), x.size());
}

void gemv(std::span<const double> a, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y) {
    check_size(a.size(), rows * cols, "gemv matrix");
    check_size(x.size(), cols, "gemv x");
    check_size(y.size(), rows, "gemv y");
    detail::active_table().gemv(a.data(), rows, cols, x.data(), y.data());
}

void gemv_t_acc(std::span<const double> a, std::size_t rows, std::size_t cols,
                std::span<const double> d, std::span<double> out) {
    check_size(a.size(), rows * cols, "gemv_t matrix");
    check_size(d.size(), rows, "gemv_t d");
    check_size(out.size(), cols, "gemv_t out");
    detail::active_table().gemv_t_acc(a.data(), rows, cols, d.data(), out.data());
}

void ger_acc(std::span<const double> d, std::span<const double> x, std::span<double> g,
             std::size_t rows, std::size_t cols) {
    check_size(d.size(), rows, "ger d");
    check_size(x.size(), cols, "ger x");
    check_size(g.size(), rows * cols, "ger matrix");
    detail::active_table().ger_acc(d.data(), x.data(), g.data(), rows, cols);
}

void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, double lr, double beta1, double beta2, double eps,
                 double bias1, double bias2) {
    check_size(param.size(), grad.size(), "adam grad");
    check_size(param.size(), m.size(), "adam m");
    check_size(param.size(), v.size(), "adam v");
    detail::active_table().adam_update(param.data(), grad.data(), m.data(), v.data(),
                                       param.size(), lr, beta1, beta2, eps, bias1, bias2);
}

}  // namespace deepmatch::kernels
