#pragma once

// Data-parallel inner loops shared by the network, optimizer and loss code.
//
// Every kernel has a scalar reference implementation and an AVX2/FMA variant.
// The variant is chosen once at startup from CPUID; DEEPMATCH_SIMD=scalar in
// the environment forces the reference path. Both paths are tested for
// agreement in tests/test_kernels.cpp.

#include <cstddef>
#include <span>
#include <string_view>

namespace deepmatch::kernels {

enum class Backend { Scalar, Avx2 };

std::string_view backend_name(Backend b);

/// True when the running CPU supports the AVX2 + FMA path.
bool avx2_supported();

Backend active_backend();

/// Switch backends (tests and benchmarking). Throws PreconditionError when the
/// CPU cannot run the requested backend.
void set_backend(Backend b);

double dot(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> a);
double sum_squares(std::span<const double> a);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// x *= alpha
void scale(double alpha, std::span<double> x);

/// y = A x for row-major A (rows x cols).
void gemv(std::span<const double> a, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y);

/// out += A^T d for row-major A (rows x cols).
void gemv_t_acc(std::span<const double> a, std::size_t rows, std::size_t cols,
                std::span<const double> d, std::span<double> out);

/// G += d x^T for row-major G (rows x cols).
void ger_acc(std::span<const double> d, std::span<const double> x,
             std::span<double> g, std::size_t rows, std::size_t cols);

/// One Adam update over a flat parameter block (descent direction).
/// bias1 = 1 - beta1^t, bias2 = 1 - beta2^t.
void adam_update(std::span<double> param, std::span<const double> grad,
                 std::span<double> m, std::span<double> v, double lr,
                 double beta1, double beta2, double eps, double bias1, double bias2);

namespace detail {

// Table of function pointers, one per backend. Exposed so the equivalence
// tests can call both implementations side by side.
struct KernelTable {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    double (*sum_squares)(const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scale)(double, double*, std::size_t);
    void (*gemv)(const double*, std::size_t, std::size_t, const double*, double*);
    void (*gemv_t_acc)(const double*, std::size_t, std::size_t, const double*, double*);
    void (*ger_acc)(const double*, const double*, double*, std::size_t, std::size_t);
    void (*adam_update)(double*, const double*, double*, double*, std::size_t, double,
                        double, double, double, double, double);
};

const KernelTable& scalar_table();
// Only valid to call when avx2_supported(); on non-x86 builds it returns the
// scalar table.
const KernelTable& avx2_table();
const KernelTable& active_table();

}  // namespace detail

}  // namespace deepmatch::kernels
