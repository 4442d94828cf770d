#include "glisson/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "glisson/error.hpp"

namespace glisson {

void SradParams::validate() const {
    if (iterations <= 0) throw ParamError("srad: iterations must be positive");
    if (!(time_step > 0.0 && time_step <= 0.25)) {
        throw ParamError("srad: time_step must lie in (0, 0.25], got " + std::to_string(time_step));
    }
    if (!(q0 > 0.0)) throw ParamError("srad: q0 must be positive");
    if (!(rho > 0.0)) throw ParamError("srad: rho must be positive");
}

GrayImage srad_despeckle(const GrayImage& img, const SradParams& params) {
    params.validate();
    const int w = img.width();
    const int h = img.height();
    const std::size_t n = img.pixels().size();

    std::vector<double> cur = img.pixels();
    std::vector<double> nxt(n);
    std::vector<double> coef(n);

    auto at = [&](const std::vector<double>& a, int y, int x) {
        y = std::clamp(y, 0, h - 1);
        x = std::clamp(x, 0, w - 1);
        return a[std::size_t(y) * std::size_t(w) + std::size_t(x)];
    };

    for (int it = 0; it < params.iterations; ++it) {
        const double t = it * params.time_step;
        const double q0t = params.q0 * std::exp(-params.rho * t);
        const double q0t2 = q0t * q0t;

        // Diffusion coefficient from the instantaneous coefficient of variation.
#pragma omp parallel for schedule(static)
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

        // Divergence update; the south/east edges take the neighbour's coefficient.
#pragma omp parallel for schedule(static)
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

GradientField prewitt_gradient(const GrayImage& img) {
    static constexpr double kx[3][3] = {{-1, 0, 1}, {-1, 0, 1}, {-1, 0, 1}};
    static constexpr double ky[3][3] = {{-1, -1, -1}, {0, 0, 0}, {1, 1, 1}};

    GradientField field;
    field.width = img.width();
    field.height = img.height();
    const std::size_t n = img.pixels().size();
    field.gx.resize(n);
    field.gy.resize(n);
    field.magnitude.resize(n);

#pragma omp parallel for schedule(static)
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

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw ParamError("percentile of an empty value set");
    std::sort(values.begin(), values.end());
    if (p <= 0.0) return values.front();
    if (p >= 100.0) return values.back();
    const double pos = p / 100.0 * double(values.size() - 1);
    const std::size_t lo = std::size_t(pos);
    const double frac = pos - double(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (values[lo + 1] - values[lo]) * frac;
}

ContrastResult enhance_contrast(const GrayImage& img, double low_percentile,
                                double high_percentile) {
    if (!(low_percentile >= 0.0 && low_percentile < 50.0) ||
        !(high_percentile > 50.0 && high_percentile <= 100.0)) {
        throw ParamError("contrast percentiles must satisfy low in [0,50) and high in (50,100]");
    }
    const double lo = percentile(img.pixels(), low_percentile);
    const double hi = percentile(img.pixels(), high_percentile);
    if (hi - lo < 1e-12) return {img, true};

    std::vector<double> out(img.pixels().size());
    const double scale = 1.0 / (hi - lo);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < std::int64_t(out.size()); ++i) {
        out[std::size_t(i)] = std::clamp((img.pixels()[std::size_t(i)] - lo) * scale, 0.0, 1.0);
    }
    return {GrayImage::from_pixels(img.width(), img.height(), std::move(out)), false};
}

GrayImage extract_roi(const GrayImage& img, int band_top, int band_bottom) {
    if (band_top < 0 || band_bottom > img.height() || band_top >= band_bottom) {
        throw ParamError("roi band [" + std::to_string(band_top) + ", " +
                         std::to_string(band_bottom) + ") outside image of height " +
                         std::to_string(img.height()));
    }
    if (band_bottom - band_top < 3) throw ParamError("roi band must span at least 3 rows");

    const int bh = band_bottom - band_top;
    std::vector<double> band(std::size_t(img.width()) * std::size_t(bh));
    for (int y = 0; y < bh; ++y) {
        for (int x = 0; x < img.width(); ++x) {
            band[std::size_t(y) * std::size_t(img.width()) + std::size_t(x)] =
                img(band_top + y, x);
        }
    }
    return resize(GrayImage::from_pixels(img.width(), bh, std::move(band)), kRoiWidth,
                  kRoiHeight);
}

GrayImage resize(const GrayImage& img, int new_width, int new_height) {
    if (new_width < 3 || new_height < 3) {
        throw ParamError("resize target must be at least 3x3");
    }
    if (new_width == img.width() && new_height == img.height()) return img;

    const int w = img.width();
    const int h = img.height();
    const double sx = double(w) / double(new_width);
    const double sy = double(h) / double(new_height);

    std::vector<double> out(std::size_t(new_width) * std::size_t(new_height));
#pragma omp parallel for schedule(static)
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

} // namespace glisson
