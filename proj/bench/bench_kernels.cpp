// Times the OpenMP kernels against their serial reference implementations
// and verifies the outputs agree bit-exactly. Run manually:
//   ./build/bench/bench_kernels [reps]
#include <chrono>
#include <cstdio>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "glisson/imaging.hpp"
#include "glisson/nn/layers.hpp"
#include "glisson/reference.hpp"
#include "glisson/rng.hpp"

using namespace glisson;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

GrayImage random_image(int w, int h, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> px(std::size_t(w) * std::size_t(h));
    for (auto& v : px) v = rng.unit();
    return GrayImage::from_pixels(w, h, std::move(px));
}

template <typename F>
double best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        best = std::min(best, ms_since(t0));
    }
    return best;
}

void report(const char* name, double serial_ms, double parallel_ms, bool equal) {
    std::printf("%-22s serial %8.2f ms   parallel %8.2f ms   speedup %5.2fx   %s\n", name,
                serial_ms, parallel_ms, serial_ms / parallel_ms,
                equal ? "bit-equal" : "MISMATCH");
}

} // namespace

int main(int argc, char** argv) {
    const int reps = argc > 1 ? std::atoi(argv[1]) : 3;
#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#endif

    {
        const GrayImage img = random_image(310, 90, 1);
        SradParams params;
        GrayImage out_p, out_s;
        const double tp = best_of(reps, [&] { out_p = srad_despeckle(img, params); });
        const double ts = best_of(reps, [&] { out_s = ref::srad_despeckle(img, params); });
        report("srad 310x90 x100", ts, tp, out_p == out_s);
    }
    {
        const GrayImage img = random_image(1024, 1024, 2);
        GradientField gp, gs;
        const double tp = best_of(reps, [&] { gp = prewitt_gradient(img); });
        const double ts = best_of(reps, [&] { gs = ref::prewitt_gradient(img); });
        report("prewitt 1024x1024", ts, tp,
               gp.gx == gs.gx && gp.gy == gs.gy && gp.magnitude == gs.magnitude);
    }
    {
        const GrayImage img = random_image(1024, 768, 3);
        GrayImage rp, rs;
        const double tp = best_of(reps, [&] { rp = resize(img, 310, 90); });
        const double ts = best_of(reps, [&] { rs = ref::resize(img, 310, 90); });
        report("resize 1024->310x90", ts, tp, rp == rs);
    }
    {
        Rng rng(4);
        nn::Tensor x({16, 8, 64, 96});
        for (auto& v : x.data) v = rng.unit();
        Rng init(5);
        nn::Conv2dLayer layer(8, 16, init, 0.01);
        nn::Tensor yp, ys;
        const double tp = best_of(reps, [&] { yp = layer.forward(x, nullptr); });
        const double ts = best_of(reps, [&] {
            ys = ref::conv2d_forward(x, *layer.params()[0], *layer.params()[1], 1);
        });
        report("conv2d 16x8x64x96", ts, tp, yp.data == ys.data);
    }
    return 0;
}
