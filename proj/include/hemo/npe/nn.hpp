#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "hemo/common/rng.hpp"

// Small reverse-mode neural-network layer kit. Layers hold parameters only;
// per-sample activations and per-sample parameter gradients live in caller-
// owned workspace structs so batch items can run on independent threads.
// Everything is templated on the scalar so float32 training and float64
// derivative verification share one code path.

namespace hemo::npe {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

constexpr int conv_out_len(int in_len, int kernel, int stride) {
    return (in_len - kernel) / stride + 1;
}

// ---------------------------------------------------------------------------
// 1D convolution, no padding (im2col + GEMM)
// ---------------------------------------------------------------------------

template <typename T>
struct Conv1d {
    int in_ch = 1, out_ch = 1, kernel = 3, stride = 2;
    Mat<T> W;  // out_ch x (in_ch * kernel)
    Vec<T> b;

    void init(Rng& rng) {
        W.resize(out_ch, in_ch * kernel);
        b = Vec<T>::Zero(out_ch);
        const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch * kernel));
        for (int i = 0; i < W.rows(); ++i)
            for (int j = 0; j < W.cols(); ++j)
                W(i, j) = static_cast<T>(rng.uniform(-bound, bound));
    }

    int out_len(int in_len) const { return conv_out_len(in_len, kernel, stride); }

    // x: in_ch x L, cols: (in_ch*kernel) x L_out, y: out_ch x L_out
    void forward(const Mat<T>& x, Mat<T>& cols, Mat<T>& y) const {
        const int lo = out_len(static_cast<int>(x.cols()));
        cols.resize(in_ch * kernel, lo);
        for (int p = 0; p < lo; ++p)
            for (int j = 0; j < kernel; ++j)
                cols.block(j * in_ch, p, in_ch, 1) = x.col(p * stride + j);
        y.noalias() = W * cols;
        y.colwise() += b;
    }

    // writes per-sample parameter grads into (gW, gb) and input grads into gx
    void backward(const Mat<T>& cols, const Mat<T>& gy, int in_len, Mat<T>& gW,
                  Vec<T>& gb, Mat<T>& gcols, Mat<T>& gx) const {
        gW.noalias() = gy * cols.transpose();
        gb = gy.rowwise().sum();
        gcols.noalias() = W.transpose() * gy;
        gx.setZero(in_ch, in_len);
        const int lo = static_cast<int>(gy.cols());
        for (int p = 0; p < lo; ++p)
            for (int j = 0; j < kernel; ++j)
                gx.col(p * stride + j) += gcols.block(j * in_ch, p, in_ch, 1);
    }
};

// ---------------------------------------------------------------------------
// ReLU (in place variants with cached pre-activation)
// ---------------------------------------------------------------------------

template <typename T>
void relu_forward(Mat<T>& y) {
    y = y.cwiseMax(T(0));
}

// gy masked by the cached post-activation (y > 0 iff pre-activation > 0)
template <typename T>
void relu_backward(const Mat<T>& post, Mat<T>& gy) {
    gy = (post.array() > T(0)).template cast<T>() * gy.array();
}

// ---------------------------------------------------------------------------
// Max pooling over the length dimension
// ---------------------------------------------------------------------------

template <typename T>
struct MaxPool1d {
    int kernel = 3, stride = 3;

    int out_len(int in_len) const { return conv_out_len(in_len, kernel, stride); }

    void forward(const Mat<T>& x, Mat<T>& y, Eigen::MatrixXi& argmax) const {
        const int ch = static_cast<int>(x.rows());
        const int lo = out_len(static_cast<int>(x.cols()));
        y.resize(ch, lo);
        argmax.resize(ch, lo);
        for (int p = 0; p < lo; ++p) {
            for (int c = 0; c < ch; ++c) {
                int best = p * stride;
                T v = x(c, best);
                for (int j = 1; j < kernel; ++j) {
                    const int q = p * stride + j;
                    if (x(c, q) > v) {
                        v = x(c, q);
                        best = q;
                    }
                }
                y(c, p) = v;
                argmax(c, p) = best;
            }
        }
    }

    void backward(const Eigen::MatrixXi& argmax, const Mat<T>& gy, int in_len,
                  Mat<T>& gx) const {
        gx.setZero(gy.rows(), in_len);
        for (int p = 0; p < gy.cols(); ++p)
            for (int c = 0; c < gy.rows(); ++c) gx(c, argmax(c, p)) += gy(c, p);
    }
};

// ---------------------------------------------------------------------------
// Linear layer with a fixed binary mask (autoregressive conditioners).
// Masked entries are zero at init and their gradients are zeroed, so the
// stored weights stay masked through training.
// ---------------------------------------------------------------------------

template <typename T>
struct MaskedLinear {
    Mat<T> W;
    Vec<T> b;
    Mat<T> mask;  // 0/1, same shape as W

    void init(Rng& rng, int out_dim, int in_dim) {
        W.resize(out_dim, in_dim);
        b = Vec<T>::Zero(out_dim);
        if (mask.rows() == 0) mask = Mat<T>::Ones(out_dim, in_dim);
        const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
        for (int i = 0; i < out_dim; ++i)
            for (int j = 0; j < in_dim; ++j)
                W(i, j) = static_cast<T>(rng.uniform(-bound, bound)) * mask(i, j);
    }

    void init_zero(int out_dim, int in_dim) {
        W = Mat<T>::Zero(out_dim, in_dim);
        b = Vec<T>::Zero(out_dim);
        if (mask.rows() == 0) mask = Mat<T>::Ones(out_dim, in_dim);
    }

    // multi-column x supported (batched sampling path)
    void forward(const Mat<T>& x, Mat<T>& y) const {
        y.noalias() = W * x;
        y.colwise() += b;
    }

    void backward(const Mat<T>& x, const Mat<T>& gy, Mat<T>& gW, Vec<T>& gb,
                  Mat<T>& gx) const {
        gW.noalias() = gy * x.transpose();
        gW = gW.cwiseProduct(mask);
        gb = gy.rowwise().sum();
        gx.noalias() = W.transpose() * gy;
    }
};

} // namespace hemo::npe
