#include "glisson/reference.hpp"

#include <algorithm>
#include <cmath>

#include "glisson/error.hpp"

namespace glisson::ref {

GradientField prewitt_gradient(const GrayImage& img) {
    static constexpr double kx[3][3] = {{-1, 0, 1}, {-1, 0, 1}, {-1, 0, 1}};
    static constexpr double ky[3][3] = {{-1, -1, -1}, {0, 0, 0}, {1, 1, 1}};

    GradientField field;
    field.width = img.width();
    field.height = img.height();
    field.gx.resize(img.pixels().size());
    field.gy.resize(img.pixels().size());
    field.magnitude.resize(img.pixels().size());

    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            double sx = 0.0, sy = 0.0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const double v = img.clamped(y + dy, x + dx);
                    sx += kx[dy + 1][dx + 1] * v;
                    sy += ky[dy + 1][dx + 1] * v;
                }
            }
            const std::size_t i = std::size_t(y) * std::size_t(img.width()) + std::size_t(x);
            field.gx[i] = sx;
            field.gy[i] = sy;
            field.magnitude[i] = std::sqrt(sx * sx + sy * sy);
        }
    }
    return field;
}

GrayImage srad_despeckle(const GrayImage& img, const SradParams& params) {
    params.validate();
    const int w = img.width();
    const int h = img.height();
    std::vector<double> cur = img.pixels();
    std::vector<double> nxt(cur.size());
    std::vector<double> coef(cur.size());

    auto at = [&](const std::vector<double>& a, int y, int x) {
        y = std::clamp(y, 0, h - 1);
        x = std::clamp(x, 0, w - 1);
        return a[std::size_t(y) * std::size_t(w) + std::size_t(x)];
    };

    for (int it = 0; it < params.iterations; ++it) {
        const double t = it * params.time_step;
        const double q0t = params.q0 * std::exp(-params.rho * t);
        const double q0t2 = q0t * q0t;

        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t i = std::size_t(y) * std::size_t(w) + std::size_t(x);
                const double c0 = cur[i];
                const double dn = at(cur, y - 1, x) - c0;
                const double ds = at(cur, y + 1, x) - c0;
                const double de = at(cur, y, x + 1) - c0;
                const double dw = at(cur, y, x - 1) - c0;

                const double val = std::max(c0, 1e-6);
                const double g2 = (dn * dn + ds * ds + de * de + dw * dw) / (val * val);
                const double lap = (dn + ds + de + dw) / val;
                const double den = 1.0 + 0.25 * lap;
                double q2 = (0.5 * g2 - 0.0625 * lap * lap) / std::max(den * den, 1e-12);
                q2 = std::max(q2, 0.0);

                double c = 1.0 / (1.0 + (q2 - q0t2) / (q0t2 * (1.0 + q0t2)));
                coef[i] = std::clamp(c, 0.0, 1.0);
            }
        }
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t i = std::size_t(y) * std::size_t(w) + std::size_t(x);
                const double c0 = cur[i];
                const double dn = at(cur, y - 1, x) - c0;
                const double ds = at(cur, y + 1, x) - c0;
                const double de = at(cur, y, x + 1) - c0;
                const double dw = at(cur, y, x - 1) - c0;
                const double div = at(coef, y + 1, x) * ds + coef[i] * dn +
                                   at(coef, y, x + 1) * de + coef[i] * dw;
                nxt[i] = std::clamp(c0 + 0.25 * params.time_step * div, 0.0, 1.0);
            }
        }
        cur.swap(nxt);
    }
    return GrayImage::from_pixels(w, h, std::move(cur));
}

GrayImage resize(const GrayImage& img, int new_width, int new_height) {
    if (new_width < 3 || new_height < 3) throw ParamError("resize target must be at least 3x3");
    if (new_width == img.width() && new_height == img.height()) return img;

    const int w = img.width();
    const int h = img.height();
    const double sx = double(w) / double(new_width);
    const double sy = double(h) / double(new_height);

    std::vector<double> out(std::size_t(new_width) * std::size_t(new_height));
    for (int yo = 0; yo < new_height; ++yo) {
        double fy = std::clamp((yo + 0.5) * sy - 0.5, 0.0, double(h - 1));
        const int y0 = std::min(int(fy), h - 2);
        fy -= y0;
        for (int xo = 0; xo < new_width; ++xo) {
            double fx = std::clamp((xo + 0.5) * sx - 0.5, 0.0, double(w - 1));
            const int x0 = std::min(int(fx), w - 2);
            fx -= x0;
            const double top = (1.0 - fx) * img(y0, x0) + fx * img(y0, x0 + 1);
            const double bot = (1.0 - fx) * img(y0 + 1, x0) + fx * img(y0 + 1, x0 + 1);
            const double v = (1.0 - fy) * top + fy * bot;
            out[std::size_t(yo) * std::size_t(new_width) + std::size_t(xo)] =
                std::clamp(v, 0.0, 1.0);
        }
    }
    return GrayImage::from_pixels(new_width, new_height, std::move(out));
}

nn::Tensor conv2d_forward(const nn::Tensor& x, const nn::Tensor& w, const nn::Tensor& b,
                          int pad) {
    const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int cout = w.dim(0), k = w.dim(2);

    nn::Tensor y({n, cout, h, wd});
    auto xi = [&](int ni, int c, int yy, int xx) {
        return ((std::size_t(ni) * cin + c) * h + yy) * wd + xx;
    };
    auto wi = [&](int oc, int ic, int ky, int kx) {
        return ((std::size_t(oc) * cin + ic) * k + ky) * k + kx;
    };

    for (int ni = 0; ni < n; ++ni) {
        for (int oc = 0; oc < cout; ++oc) {
            for (int oy = 0; oy < h; ++oy) {
                for (int ox = 0; ox < wd; ++ox) {
                    double acc = b.data[std::size_t(oc)]; // bias seeds the accumulator
                    for (int ic = 0; ic < cin; ++ic) {
                        for (int ky = 0; ky < k; ++ky) {
                            const int iy = oy + ky - pad;
                            if (iy < 0 || iy >= h) continue;
                            for (int kx = 0; kx < k; ++kx) {
                                const int ix = ox + kx - pad;
                                if (ix < 0 || ix >= wd) continue;
                                acc += w.data[wi(oc, ic, ky, kx)] * x.data[xi(ni, ic, iy, ix)];
                            }
                        }
                    }
                    y.data[((std::size_t(ni) * cout + oc) * h + oy) * wd + ox] = acc;
                }
            }
        }
    }
    return y;
}

} // namespace glisson::ref
