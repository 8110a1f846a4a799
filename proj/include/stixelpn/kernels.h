#pragma once

#include <algorithm>

#include "stixelpn/parallel.h"

// Dense-layer kernels shared by training (f64) and inference (f32).
//
// Layout conventions: activations are row-major [rows x width] with one row
// per stixel; weights are row-major [in x out] so that the hot loop streams
// one weight row per input feature. Each public kernel has a serial path and
// an OpenMP path over the same per-block code; the parallel grain is always a
// set of independent outputs and reductions keep a fixed order, so both modes
// produce bitwise-identical results for any thread count.

namespace stixelpn::kernels {

namespace detail {

inline constexpr int kRowBlock = 8;
inline constexpr int kColBlock = 64;

// Column-tile width: the accumulators for one tile stay in vector registers
// across the whole reduction loop. Tile boundaries never change results;
// per-element operation order is fixed by the reduction index alone.
template <typename T>
inline constexpr int kColTile = 128 / static_cast<int>(sizeof(T));

// y[r][j] = b[j] + sum_i x[r][i] * W[i][j], rows [r0, r1), optional ReLU.
// Four rows in flight so each streamed weight row feeds four FMA chains.
template <typename T>
inline void forward_block(const T* x, int r0, int r1, int in, const T* W, const T* b,
                          int out, T* y, bool relu) {
    constexpr int jt = kColTile<T>;
    T acc[4][jt];
    for (int j0 = 0; j0 < out; j0 += jt) {
        const int jn = std::min(jt, out - j0);
        int r = r0;
        for (; r + 4 <= r1; r += 4) {
            for (int rr = 0; rr < 4; ++rr)
                for (int jj = 0; jj < jn; ++jj) acc[rr][jj] = b[j0 + jj];
            const T* x0 = x + static_cast<long>(r + 0) * in;
            const T* x1 = x + static_cast<long>(r + 1) * in;
            const T* x2 = x + static_cast<long>(r + 2) * in;
            const T* x3 = x + static_cast<long>(r + 3) * in;
            for (int i = 0; i < in; ++i) {
                const T a0 = x0[i], a1 = x1[i], a2 = x2[i], a3 = x3[i];
                const T* w = W + static_cast<long>(i) * out + j0;
                for (int jj = 0; jj < jn; ++jj) {
                    acc[0][jj] += a0 * w[jj];
                    acc[1][jj] += a1 * w[jj];
                    acc[2][jj] += a2 * w[jj];
                    acc[3][jj] += a3 * w[jj];
                }
            }
            for (int rr = 0; rr < 4; ++rr) {
                T* yr = y + static_cast<long>(r + rr) * out + j0;
                for (int jj = 0; jj < jn; ++jj) yr[jj] = acc[rr][jj];
            }
        }
        for (; r < r1; ++r) {
            for (int jj = 0; jj < jn; ++jj) acc[0][jj] = b[j0 + jj];
            const T* xr = x + static_cast<long>(r) * in;
            for (int i = 0; i < in; ++i) {
                const T a = xr[i];
                const T* w = W + static_cast<long>(i) * out + j0;
                for (int jj = 0; jj < jn; ++jj) acc[0][jj] += a * w[jj];
            }
            T* yr = y + static_cast<long>(r) * out + j0;
            for (int jj = 0; jj < jn; ++jj) yr[jj] = acc[0][jj];
        }
    }
    if (relu) {
        for (int rr = r0; rr < r1; ++rr) {
            T* yr = y + static_cast<long>(rr) * out;
            for (int j = 0; j < out; ++j) yr[j] = std::max(yr[j], T(0));
        }
    }
}

// dx[r][i] = sum_j dy[r][j] * W[i][j], rows [r0, r1). The dot product runs
// as eight independent lanes reduced in a fixed tree, so the summation order
// is deterministic and identical in both execution modes.
template <typename T>
inline void backward_input_block(const T* dy, int r0, int r1, int out, const T* W, int in, T* dx) {
    for (int r = r0; r < r1; ++r) {
        const T* dyr = dy + static_cast<long>(r) * out;
        T* dxr = dx + static_cast<long>(r) * in;
        for (int i = 0; i < in; ++i) {
            const T* w = W + static_cast<long>(i) * out;
            T lane[8] = {};
            int j = 0;
            for (; j + 8 <= out; j += 8)
                for (int l = 0; l < 8; ++l) lane[l] += dyr[j + l] * w[j + l];
            T acc = ((lane[0] + lane[1]) + (lane[2] + lane[3])) +
                    ((lane[4] + lane[5]) + (lane[6] + lane[7]));
            for (; j < out; ++j) acc += dyr[j] * w[j];
            dxr[i] = acc;
        }
    }
}

// dW[i][j] += sum_r x[r][i] * dy[r][j] for i in [i0, i1); row order fixed.
// Four weight rows share each streamed dy slice.
template <typename T>
inline void backward_weights_block(const T* x, const T* dy, int rows, int in, int out,
                                   int i0, int i1, T* dW) {
    constexpr int jt = kColTile<T>;
    T acc[4][jt];
    for (int j0 = 0; j0 < out; j0 += jt) {
        const int jn = std::min(jt, out - j0);
        int i = i0;
        for (; i + 4 <= i1; i += 4) {
            for (int ii = 0; ii < 4; ++ii)
                for (int jj = 0; jj < jn; ++jj)
                    acc[ii][jj] = dW[static_cast<long>(i + ii) * out + j0 + jj];
            for (int r = 0; r < rows; ++r) {
                const T* xr = x + static_cast<long>(r) * in + i;
                const T xi0 = xr[0], xi1 = xr[1], xi2 = xr[2], xi3 = xr[3];
                const T* dyr = dy + static_cast<long>(r) * out + j0;
                for (int jj = 0; jj < jn; ++jj) {
                    acc[0][jj] += xi0 * dyr[jj];
                    acc[1][jj] += xi1 * dyr[jj];
                    acc[2][jj] += xi2 * dyr[jj];
                    acc[3][jj] += xi3 * dyr[jj];
                }
            }
            for (int ii = 0; ii < 4; ++ii)
                for (int jj = 0; jj < jn; ++jj)
                    dW[static_cast<long>(i + ii) * out + j0 + jj] = acc[ii][jj];
        }
        for (; i < i1; ++i) {
            for (int jj = 0; jj < jn; ++jj) acc[0][jj] = dW[static_cast<long>(i) * out + j0 + jj];
            for (int r = 0; r < rows; ++r) {
                const T xi = x[static_cast<long>(r) * in + i];
                const T* dyr = dy + static_cast<long>(r) * out + j0;
                for (int jj = 0; jj < jn; ++jj) acc[0][jj] += xi * dyr[jj];
            }
            for (int jj = 0; jj < jn; ++jj) dW[static_cast<long>(i) * out + j0 + jj] = acc[0][jj];
        }
    }
}

// Column-wise running max over rows with the first maximal row recorded,
// columns [j0, j1). Strict > keeps the lowest row index on ties.
template <typename T>
inline void colwise_max_block(const T* a, int rows, int cols, int j0, int j1,
                              T* out_max, int* out_argrow) {
    for (int j = j0; j < j1; ++j) {
        out_max[j] = a[j];
        out_argrow[j] = 0;
    }
    for (int r = 1; r < rows; ++r) {
        const T* ar = a + static_cast<long>(r) * cols;
        for (int j = j0; j < j1; ++j) {
            if (ar[j] > out_max[j]) {
                out_max[j] = ar[j];
                out_argrow[j] = r;
            }
        }
    }
}

}  // namespace detail

template <typename T>
void dense_forward(const T* x, int rows, int in, const T* W, const T* b, int out, T* y,
                   bool relu, ExecMode mode) {
    const int nblocks = (rows + detail::kRowBlock - 1) / detail::kRowBlock;
    if (mode == ExecMode::openmp) {
#pragma omp parallel for schedule(static)
        for (int blk = 0; blk < nblocks; ++blk) {
            const int r0 = blk * detail::kRowBlock;
            detail::forward_block(x, r0, std::min(rows, r0 + detail::kRowBlock), in, W, b, out,
                                  y, relu);
        }
    } else {
        for (int blk = 0; blk < nblocks; ++blk) {
            const int r0 = blk * detail::kRowBlock;
            detail::forward_block(x, r0, std::min(rows, r0 + detail::kRowBlock), in, W, b, out,
                                  y, relu);
        }
    }
}

template <typename T>
void dense_backward_input(const T* dy, int rows, int out, const T* W, int in, T* dx,
                          ExecMode mode) {
    const int nblocks = (rows + detail::kRowBlock - 1) / detail::kRowBlock;
    if (mode == ExecMode::openmp) {
#pragma omp parallel for schedule(static)
        for (int blk = 0; blk < nblocks; ++blk) {
            const int r0 = blk * detail::kRowBlock;
            detail::backward_input_block(dy, r0, std::min(rows, r0 + detail::kRowBlock), out, W,
                                         in, dx);
        }
    } else {
        for (int blk = 0; blk < nblocks; ++blk) {
            const int r0 = blk * detail::kRowBlock;
            detail::backward_input_block(dy, r0, std::min(rows, r0 + detail::kRowBlock), out, W,
                                         in, dx);
        }
    }
}

// Accumulates into dW and db (callers zero them per sample or keep batch sums).
template <typename T>
void dense_backward_params(const T* x, const T* dy, int rows, int in, int out, T* dW, T* db,
                           ExecMode mode) {
    if (mode == ExecMode::openmp) {
        const int nblocks = (in + 3) / 4;
#pragma omp parallel for schedule(static)
        for (int blk = 0; blk < nblocks; ++blk)
            detail::backward_weights_block(x, dy, rows, in, out, blk * 4,
                                           std::min(in, blk * 4 + 4), dW);
    } else {
        detail::backward_weights_block(x, dy, rows, in, out, 0, in, dW);
    }
    for (int r = 0; r < rows; ++r) {
        const T* dyr = dy + static_cast<long>(r) * out;
        for (int j = 0; j < out; ++j) db[j] += dyr[j];
    }
}

// grad[i] *= (act[i] > 0); the ReLU subgradient at 0 is taken as 0.
template <typename T>
void relu_backward_inplace(const T* act, long n, T* grad, ExecMode mode) {
    if (mode == ExecMode::openmp) {
#pragma omp parallel for schedule(static)
        for (long i = 0; i < n; ++i)
            if (!(act[i] > 0)) grad[i] = 0;
    } else {
        for (long i = 0; i < n; ++i)
            if (!(act[i] > 0)) grad[i] = 0;
    }
}

template <typename T>
void colwise_max(const T* a, int rows, int cols, T* out_max, int* out_argrow, ExecMode mode) {
    const int nblocks = (cols + detail::kColBlock - 1) / detail::kColBlock;
    if (mode == ExecMode::openmp) {
#pragma omp parallel for schedule(static)
        for (int blk = 0; blk < nblocks; ++blk) {
            const int j0 = blk * detail::kColBlock;
            detail::colwise_max_block(a, rows, cols, j0, std::min(cols, j0 + detail::kColBlock),
                                      out_max, out_argrow);
        }
    } else {
        for (int blk = 0; blk < nblocks; ++blk) {
            const int j0 = blk * detail::kColBlock;
            detail::colwise_max_block(a, rows, cols, j0, std::min(cols, j0 + detail::kColBlock),
                                      out_max, out_argrow);
        }
    }
}

}  // namespace stixelpn::kernels
