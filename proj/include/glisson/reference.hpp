#pragma once

#include "glisson/image.hpp"
#include "glisson/imaging.hpp"
#include "glisson/nn/tensor.hpp"

// Serial brute-force implementations of the parallel kernels. They are kept
// deliberately naive: tests use them as independent oracles and the benchmark
// target compares them against the OpenMP kernels. Accumulation order matches
// the kernels so equality checks can be bit-exact.
namespace glisson::ref {

GradientField prewitt_gradient(const GrayImage& img);

GrayImage srad_despeckle(const GrayImage& img, const SradParams& params);

GrayImage resize(const GrayImage& img, int new_width, int new_height);

/// Direct-loop 2-D convolution, stride 1, zero padding `pad`, bias seeding the
/// accumulator. x: (N,Cin,H,W), w: (Cout,Cin,K,K), b: (Cout) -> (N,Cout,H,W).
nn::Tensor conv2d_forward(const nn::Tensor& x, const nn::Tensor& w, const nn::Tensor& b,
                          int pad);

} // namespace glisson::ref
