#include "glisson/nn/layers.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "glisson/error.hpp"

namespace glisson::nn {

namespace {

void check_finite(const Tensor& t, const char* where) {
#ifndef NDEBUG
    for (double v : t.data) {
        if (!std::isfinite(v)) throw std::logic_error(std::string("non-finite value after ") + where);
    }
#else
    (void)t;
    (void)where;
#endif
}

} // namespace

// ---------------------------------------------------------------------------
// Dense

DenseLayer::DenseLayer(int in, int out, Rng& rng, double bias_init)
    : in_(in), out_(out), w_({out, in}), b_({out}), dw_({out, in}), db_({out}) {
    const double std = std::sqrt(2.0 / double(in));
    for (auto& v : w_.data) v = rng.normal(0.0, std);
    for (auto& v : b_.data) v = bias_init;
}

std::string DenseLayer::name() const {
    return "dense(" + std::to_string(in_) + "->" + std::to_string(out_) + ")";
}

Tensor DenseLayer::forward(const Tensor& x, TrainContext*) {
    if (x.shape.size() != 2 || x.dim(1) != in_) {
        throw ParamError(name() + ": expected input (N," + std::to_string(in_) + ")");
    }
    x_ = x;
    const int n = x.dim(0);
    Tensor y({n, out_});
#pragma omp parallel for schedule(static)
    for (int ni = 0; ni < n; ++ni) {
        const double* xr = x.ptr() + std::size_t(ni) * std::size_t(in_);
        double* yr = y.ptr() + std::size_t(ni) * std::size_t(out_);
        for (int o = 0; o < out_; ++o) {
            const double* wr = w_.ptr() + std::size_t(o) * std::size_t(in_);
            double acc = b_.data[std::size_t(o)];
            for (int i = 0; i < in_; ++i) acc += wr[i] * xr[i];
            yr[o] = acc;
        }
    }
    check_finite(y, "dense forward");
    return y;
}

Tensor DenseLayer::backward(const Tensor& dy) {
    const int n = x_.dim(0);
#pragma omp parallel for schedule(static)
    for (int o = 0; o < out_; ++o) {
        double* dwr = dw_.ptr() + std::size_t(o) * std::size_t(in_);
        for (int i = 0; i < in_; ++i) dwr[i] = 0.0;
        double dbo = 0.0;
        for (int ni = 0; ni < n; ++ni) {
            const double g = dy.data[std::size_t(ni) * std::size_t(out_) + std::size_t(o)];
            dbo += g;
            const double* xr = x_.ptr() + std::size_t(ni) * std::size_t(in_);
            for (int i = 0; i < in_; ++i) dwr[i] += g * xr[i];
        }
        db_.data[std::size_t(o)] = dbo;
    }

    Tensor dx({n, in_});
#pragma omp parallel for schedule(static)
    for (int ni = 0; ni < n; ++ni) {
        double* dxr = dx.ptr() + std::size_t(ni) * std::size_t(in_);
        const double* dyr = dy.ptr() + std::size_t(ni) * std::size_t(out_);
        for (int o = 0; o < out_; ++o) {
            const double g = dyr[o];
            const double* wr = w_.ptr() + std::size_t(o) * std::size_t(in_);
            for (int i = 0; i < in_; ++i) dxr[i] += g * wr[i];
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Conv2d

Conv2dLayer::Conv2dLayer(int in_channels, int out_channels, Rng& rng, double bias_init, int kernel)
    : cin_(in_channels),
      cout_(out_channels),
      k_(kernel),
      pad_(kernel / 2),
      w_({out_channels, in_channels, kernel, kernel}),
      b_({out_channels}),
      dw_({out_channels, in_channels, kernel, kernel}),
      db_({out_channels}) {
    const double std = std::sqrt(2.0 / double(in_channels * kernel * kernel));
    for (auto& v : w_.data) v = rng.normal(0.0, std);
    for (auto& v : b_.data) v = bias_init;
}

std::string Conv2dLayer::name() const {
    return "conv2d(" + std::to_string(cin_) + "->" + std::to_string(cout_) + ")";
}

Tensor Conv2dLayer::forward(const Tensor& x, TrainContext*) {
    if (x.shape.size() != 4 || x.dim(1) != cin_) {
        throw ParamError(name() + ": expected input (N," + std::to_string(cin_) + ",H,W)");
    }
    x_ = x;
    const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
    Tensor y({n, cout_, h, w});

    // Accumulates shifted input slabs per (ic,ky,kx); for a fixed output
    // element the addition order is ic,ky,kx with the bias first, the same
    // sequence a direct-loop gather produces.
#pragma omp parallel for collapse(2) schedule(static)
    for (int ni = 0; ni < n; ++ni) {
        for (int oc = 0; oc < cout_; ++oc) {
            double* yp = y.ptr() + ((std::size_t(ni) * cout_ + oc) * h) * w;
            const double bias = b_.data[std::size_t(oc)];
            for (std::size_t i = 0; i < std::size_t(h) * std::size_t(w); ++i) yp[i] = bias;
            for (int ic = 0; ic < cin_; ++ic) {
                const double* xp = x.ptr() + ((std::size_t(ni) * cin_ + ic) * h) * w;
                for (int ky = 0; ky < k_; ++ky) {
                    for (int kx = 0; kx < k_; ++kx) {
                        const double wv =
                            w_.data[((std::size_t(oc) * cin_ + ic) * k_ + ky) * k_ + kx];
                        const int oy_lo = std::max(0, pad_ - ky);
                        const int oy_hi = std::min(h, h + pad_ - ky);
                        const int ox_lo = std::max(0, pad_ - kx);
                        const int ox_hi = std::min(w, w + pad_ - kx);
                        for (int oy = oy_lo; oy < oy_hi; ++oy) {
                            const double* xrow = xp + std::size_t(oy + ky - pad_) * w;
                            double* yrow = yp + std::size_t(oy) * w;
                            for (int ox = ox_lo; ox < ox_hi; ++ox) {
                                yrow[ox] += wv * xrow[ox + kx - pad_];
                            }
                        }
                    }
                }
            }
        }
    }
    check_finite(y, "conv2d forward");
    return y;
}

Tensor Conv2dLayer::backward(const Tensor& dy) {
    const int n = x_.dim(0), h = x_.dim(2), w = x_.dim(3);

#pragma omp parallel for collapse(2) schedule(static)
    for (int oc = 0; oc < cout_; ++oc) {
        for (int ic = 0; ic < cin_; ++ic) {
            for (int ky = 0; ky < k_; ++ky) {
                for (int kx = 0; kx < k_; ++kx) {
                    double acc = 0.0;
                    for (int ni = 0; ni < n; ++ni) {
                        const double* dyp = dy.ptr() + ((std::size_t(ni) * cout_ + oc) * h) * w;
                        const double* xp = x_.ptr() + ((std::size_t(ni) * cin_ + ic) * h) * w;
                        const int oy_lo = std::max(0, pad_ - ky);
                        const int oy_hi = std::min(h, h + pad_ - ky);
                        const int ox_lo = std::max(0, pad_ - kx);
                        const int ox_hi = std::min(w, w + pad_ - kx);
                        for (int oy = oy_lo; oy < oy_hi; ++oy) {
                            const double* xrow = xp + std::size_t(oy + ky - pad_) * w;
                            const double* dyrow = dyp + std::size_t(oy) * w;
                            for (int ox = ox_lo; ox < ox_hi; ++ox) {
                                acc += dyrow[ox] * xrow[ox + kx - pad_];
                            }
                        }
                    }
                    dw_.data[((std::size_t(oc) * cin_ + ic) * k_ + ky) * k_ + kx] = acc;
                }
            }
        }
    }

#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < cout_; ++oc) {
        double acc = 0.0;
        for (int ni = 0; ni < n; ++ni) {
            const double* dyp = dy.ptr() + ((std::size_t(ni) * cout_ + oc) * h) * w;
            for (std::size_t i = 0; i < std::size_t(h) * std::size_t(w); ++i) acc += dyp[i];
        }
        db_.data[std::size_t(oc)] = acc;
    }

    Tensor dx({n, cin_, h, w});
#pragma omp parallel for schedule(static)
    for (int ni = 0; ni < n; ++ni) {
        for (int oc = 0; oc < cout_; ++oc) {
            const double* dyp = dy.ptr() + ((std::size_t(ni) * cout_ + oc) * h) * w;
            for (int ic = 0; ic < cin_; ++ic) {
                double* dxp = dx.ptr() + ((std::size_t(ni) * cin_ + ic) * h) * w;
                for (int ky = 0; ky < k_; ++ky) {
                    for (int kx = 0; kx < k_; ++kx) {
                        const double wv =
                            w_.data[((std::size_t(oc) * cin_ + ic) * k_ + ky) * k_ + kx];
                        const int oy_lo = std::max(0, pad_ - ky);
                        const int oy_hi = std::min(h, h + pad_ - ky);
                        const int ox_lo = std::max(0, pad_ - kx);
                        const int ox_hi = std::min(w, w + pad_ - kx);
                        for (int oy = oy_lo; oy < oy_hi; ++oy) {
                            double* dxrow = dxp + std::size_t(oy + ky - pad_) * w;
                            const double* dyrow = dyp + std::size_t(oy) * w;
                            for (int ox = ox_lo; ox < ox_hi; ++ox) {
                                dxrow[ox + kx - pad_] += wv * dyrow[ox];
                            }
                        }
                    }
                }
            }
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// ReLU

Tensor ReluLayer::forward(const Tensor& x, TrainContext*) {
    x_ = x;
    double min_abs = std::numeric_limits<double>::infinity();
    Tensor y = x;
    for (auto& v : y.data) {
        min_abs = std::min(min_abs, std::abs(v));
        if (v < 0.0) v = 0.0;
    }
    min_abs_input_ = min_abs;
    return y;
}

Tensor ReluLayer::backward(const Tensor& dy) {
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i) {
        if (x_.data[i] <= 0.0) dx.data[i] = 0.0;
    }
    return dx;
}

// ---------------------------------------------------------------------------
// MaxPool 2x2/2

Tensor MaxPool2Layer::forward(const Tensor& x, TrainContext*) {
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int ho = h / 2, wo = w / 2;
    in_shape_ = x.shape;
    Tensor y({n, c, ho, wo});
    argmax_.assign(y.data.size(), 0);
    double min_margin = std::numeric_limits<double>::infinity();

    for (int ni = 0; ni < n; ++ni) {
        for (int ci = 0; ci < c; ++ci) {
            const double* xp = x.ptr() + ((std::size_t(ni) * c + ci) * h) * w;
            for (int oy = 0; oy < ho; ++oy) {
                for (int ox = 0; ox < wo; ++ox) {
                    double best = -std::numeric_limits<double>::infinity();
                    double second = best;
                    std::int64_t best_idx = 0;
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dx = 0; dx < 2; ++dx) {
                            const std::int64_t idx =
                                std::int64_t(2 * oy + dy) * w + (2 * ox + dx);
                            const double v = xp[idx];
                            if (v > best) { // strict: ties keep the earlier index
                                second = best;
                                best = v;
                                best_idx = idx;
                            } else if (v > second) {
                                second = v;
                            }
                        }
                    }
                    const std::size_t oi =
                        ((std::size_t(ni) * c + ci) * ho + oy) * wo + ox;
                    y.data[oi] = best;
                    argmax_[oi] = ((std::int64_t(ni) * c + ci) * h) * w + best_idx;
                    min_margin = std::min(min_margin, best - second);
                }
            }
        }
    }
    min_margin_ = min_margin;
    return y;
}

Tensor MaxPool2Layer::backward(const Tensor& dy) {
    Tensor dx(in_shape_);
    for (std::size_t i = 0; i < dy.data.size(); ++i) {
        dx.data[std::size_t(argmax_[i])] += dy.data[i];
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Flatten

Tensor FlattenLayer::forward(const Tensor& x, TrainContext*) {
    in_shape_ = x.shape;
    Tensor y = x;
    const int n = x.dim(0);
    y.shape = {n, int(x.numel() / n)};
    return y;
}

Tensor FlattenLayer::backward(const Tensor& dy) {
    Tensor dx = dy;
    dx.shape = in_shape_;
    return dx;
}

// ---------------------------------------------------------------------------
// Dropout

DropoutLayer::DropoutLayer(double rate) : rate_(rate) {
    if (!(rate > 0.0 && rate < 1.0)) throw ParamError("dropout rate must lie in (0,1)");
}

std::string DropoutLayer::name() const {
    return "dropout(" + std::to_string(rate_) + ")";
}

Tensor DropoutLayer::forward(const Tensor& x, TrainContext* ctx) {
    if (!ctx || !ctx->dropout_rng) {
        active_ = false;
        return x;
    }
    active_ = true;
    mask_ = Tensor(x.shape);
    const double keep_scale = 1.0 / (1.0 - rate_);
    // The mask stream is drawn serially so results do not depend on threading.
    for (auto& m : mask_.data) m = ctx->dropout_rng->unit() >= rate_ ? keep_scale : 0.0;

    Tensor y = x;
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] *= mask_.data[i];
    return y;
}

Tensor DropoutLayer::backward(const Tensor& dy) {
    if (!active_) return dy;
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] *= mask_.data[i];
    return dx;
}

// ---------------------------------------------------------------------------

Tensor softmax_rows(const Tensor& logits) {
    const int n = logits.dim(0), k = logits.dim(1);
    Tensor p = logits;
    for (int ni = 0; ni < n; ++ni) {
        double* row = p.ptr() + std::size_t(ni) * std::size_t(k);
        double mx = row[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < k; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        for (int j = 0; j < k; ++j) row[j] /= sum;
    }
    return p;
}

} // namespace glisson::nn
