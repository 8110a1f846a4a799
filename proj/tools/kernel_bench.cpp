// Times each compute kernel in serial and OpenMP mode on representative
// shapes and verifies the two produce bitwise-identical results.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "stixelpn/kernels.h"
#include "stixelpn/parallel.h"
#include "stixelpn/rng.h"

using namespace stixelpn;

namespace {

std::vector<double> randu(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

template <typename F>
double time_ms(F&& body, int runs) {
    body();  // warmup
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < runs; ++i) body();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / runs;
}

bool g_all_equal = true;

void report(const char* kernel, const std::string& shape, double serial_ms, double omp_ms,
            bool equal) {
    g_all_equal = g_all_equal && equal;
    std::printf("%-22s %-18s %10.4f %10.4f %8.2fx  %s\n", kernel, shape.c_str(), serial_ms,
                omp_ms, omp_ms > 0 ? serial_ms / omp_ms : 0.0, equal ? "bitwise" : "MISMATCH");
}

void bench_dense(int rows, int in, int out, int runs, Rng& rng) {
    const auto x = randu(rng, static_cast<std::size_t>(rows) * in);
    const auto w = randu(rng, static_cast<std::size_t>(in) * out);
    const auto b = randu(rng, out);
    std::vector<double> y_s(static_cast<std::size_t>(rows) * out);
    std::vector<double> y_p(y_s.size());
    const std::string shape = std::to_string(rows) + "x" + std::to_string(in) + "->" +
                              std::to_string(out);

    const double fwd_s = time_ms(
        [&] { kernels::dense_forward(x.data(), rows, in, w.data(), b.data(), out, y_s.data(),
                                     true, ExecMode::serial); },
        runs);
    const double fwd_p = time_ms(
        [&] { kernels::dense_forward(x.data(), rows, in, w.data(), b.data(), out, y_p.data(),
                                     true, ExecMode::openmp); },
        runs);
    report("dense_forward", shape, fwd_s, fwd_p, y_s == y_p);

    const auto dy = randu(rng, static_cast<std::size_t>(rows) * out);
    std::vector<double> dx_s(static_cast<std::size_t>(rows) * in);
    std::vector<double> dx_p(dx_s.size());
    const double bwd_s = time_ms(
        [&] { kernels::dense_backward_input(dy.data(), rows, out, w.data(), in, dx_s.data(),
                                            ExecMode::serial); },
        runs);
    const double bwd_p = time_ms(
        [&] { kernels::dense_backward_input(dy.data(), rows, out, w.data(), in, dx_p.data(),
                                            ExecMode::openmp); },
        runs);
    report("dense_backward_input", shape, bwd_s, bwd_p, dx_s == dx_p);

    std::vector<double> dw_s(w.size()), dw_p(w.size()), db_s(out), db_p(out);
    const double par_s = time_ms(
        [&] {
            std::fill(dw_s.begin(), dw_s.end(), 0.0);
            std::fill(db_s.begin(), db_s.end(), 0.0);
            kernels::dense_backward_params(x.data(), dy.data(), rows, in, out, dw_s.data(),
                                           db_s.data(), ExecMode::serial);
        },
        runs);
    const double par_p = time_ms(
        [&] {
            std::fill(dw_p.begin(), dw_p.end(), 0.0);
            std::fill(db_p.begin(), db_p.end(), 0.0);
            kernels::dense_backward_params(x.data(), dy.data(), rows, in, out, dw_p.data(),
                                           db_p.data(), ExecMode::openmp);
        },
        runs);
    report("dense_backward_params", shape, par_s, par_p, dw_s == dw_p && db_s == db_p);
}

void bench_colmax(int rows, int cols, int runs, Rng& rng) {
    const auto a = randu(rng, static_cast<std::size_t>(rows) * cols);
    std::vector<double> m_s(cols), m_p(cols);
    std::vector<int> r_s(cols), r_p(cols);
    const std::string shape = std::to_string(rows) + "x" + std::to_string(cols);
    const double s = time_ms(
        [&] { kernels::colwise_max(a.data(), rows, cols, m_s.data(), r_s.data(),
                                   ExecMode::serial); },
        runs);
    const double p = time_ms(
        [&] { kernels::colwise_max(a.data(), rows, cols, m_p.data(), r_p.data(),
                                   ExecMode::openmp); },
        runs);
    report("colwise_max", shape, s, p, m_s == m_p && r_s == r_p);
}

}  // namespace

int main(int argc, char** argv) {
    init_threads_from_env();
    const int runs = argc > 1 ? std::atoi(argv[1]) : 20;
    if (runs < 1) {
        std::fprintf(stderr, "usage: kernel_bench [runs]\n");
        return 2;
    }
    std::printf("threads: %d, runs: %d\n", max_threads(), runs);
    std::printf("%-22s %-18s %10s %10s %9s\n", "kernel", "shape", "serial_ms", "omp_ms",
                "speedup");

    Rng rng(99);
    bench_dense(512, 10, 64, runs, rng);
    bench_dense(512, 64, 64, runs, rng);
    bench_dense(512, 128, 1024, runs, rng);
    bench_dense(4096, 64, 64, runs, rng);
    bench_dense(64, 1088, 512, runs, rng);
    bench_colmax(512, 1024, runs, rng);
    bench_colmax(8192, 256, runs, rng);

    std::printf("%s\n", g_all_equal ? "all kernels bitwise-identical across modes"
                                    : "MODE MISMATCH DETECTED");
    return g_all_equal ? 0 : 1;
}
