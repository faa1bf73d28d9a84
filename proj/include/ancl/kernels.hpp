#pragma once

#include "ancl/common.hpp"

#include <cstdint>
#include <vector>

namespace ancl::kernels {

// Parallel kernels for the hot paths (batched forward/backward, scatter
// accumulation, pairwise similarity). Each has a serial reference twin in
// kernels::serial used by the tests and the benchmark. Work is always split
// over independent output entries and every entry is accumulated in a fixed
// sequential order, so serial and parallel results are bit-identical and
// independent of the thread count.

bool parallel_enabled();
void set_parallel(bool on);

/// C = A * B^T (A: m x k, B: n x k, C: m x n). accumulate adds into C.
void gemm_nt(const Mat& A, const Mat& B, Mat& C, bool accumulate = false);

/// C = A^T * B (A: n x m, B: n x k, C: m x k). accumulate adds into C.
void gemm_tn(const Mat& A, const Mat& B, Mat& C, bool accumulate = false);

/// C = A * B (A: m x k, B: k x n, C: m x n). accumulate adds into C.
void gemm_nn(const Mat& A, const Mat& B, Mat& C, bool accumulate = false);

/// Normalize each row to unit L2 norm. Rows with norm < min_norm are zeroed.
/// Returns the number of such degenerate rows; original norms go to *norms.
int normalize_rows(Mat& A, Vec* norms = nullptr, double min_norm = 1e-12);

/// Cosine k-NN vote: train/test rows must be unit-normalized. Ties between
/// neighbors break toward the lower row index; vote ties toward the smaller
/// class index.
std::vector<std::int32_t> knn_predict(const Mat& train, const std::vector<std::int32_t>& labels,
                                      const Mat& test, int k, int num_classes);

namespace serial {
void gemm_nt(const Mat& A, const Mat& B, Mat& C, bool accumulate = false);
void gemm_tn(const Mat& A, const Mat& B, Mat& C, bool accumulate = false);
void gemm_nn(const Mat& A, const Mat& B, Mat& C, bool accumulate = false);
int normalize_rows(Mat& A, Vec* norms = nullptr, double min_norm = 1e-12);
std::vector<std::int32_t> knn_predict(const Mat& train, const std::vector<std::int32_t>& labels,
                                      const Mat& test, int k, int num_classes);
}  // namespace serial

}  // namespace ancl::kernels
