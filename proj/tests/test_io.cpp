#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "glisson/error.hpp"
#include "glisson/image_io.hpp"
#include "glisson/manifest.hpp"
#include "glisson/rng.hpp"

using namespace glisson;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("glisson_io_" + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

GrayImage quantized_random(int w, int h, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> px(std::size_t(w) * std::size_t(h));
    for (auto& v : px) v = double(rng.uniform_int(0, 255)) / 255.0;
    return GrayImage::from_pixels(w, h, std::move(px));
}

} // namespace

TEST_CASE("pgm: round trip is exact for quantized intensities") {
    TempDir tmp;
    const GrayImage img = quantized_random(31, 17, 1);
    write_pgm(img, tmp.file("a.pgm"));
    const GrayImage back = read_pgm(tmp.file("a.pgm"));
    CHECK(back == img);
}

TEST_CASE("png: round trip is exact for quantized intensities") {
    TempDir tmp;
    const GrayImage img = quantized_random(23, 29, 2);
    write_png(img, tmp.file("a.png"));
    const GrayImage back = read_png(tmp.file("a.png"));
    CHECK(back == img);
}

TEST_CASE("image io: quantization rounds half up") {
    TempDir tmp;
    GrayImage img(3, 3, 0.0);
    img(0, 0) = 0.5 / 255.0;   // rounds to 1
    img(0, 1) = 0.49 / 255.0;  // rounds to 0
    write_pgm(img, tmp.file("q.pgm"));
    const GrayImage back = read_pgm(tmp.file("q.pgm"));
    CHECK(back(0, 0) == doctest::Approx(1.0 / 255.0));
    CHECK(back(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("image io: errors name the offending path") {
    TempDir tmp;
    CHECK_THROWS_WITH_AS(read_pgm(tmp.file("missing.pgm")),
                         doctest::Contains("missing.pgm"), DataError);

    std::ofstream(tmp.file("trunc.pgm"), std::ios::binary) << "P5\n10 10\n255\nab";
    CHECK_THROWS_WITH_AS(read_pgm(tmp.file("trunc.pgm")), doctest::Contains("trunc.pgm"),
                         DataError);

    std::ofstream(tmp.file("bad.png"), std::ios::binary) << "not a png";
    CHECK_THROWS_WITH_AS(read_png(tmp.file("bad.png")), doctest::Contains("bad.png"), DataError);

    CHECK_THROWS_AS(load_image(tmp.file("image.bmp")), DataError);
}

TEST_CASE("pgm: rejects 16-bit payloads") {
    TempDir tmp;
    std::ofstream(tmp.file("deep.pgm"), std::ios::binary) << "P5\n3 3\n65535\n";
    CHECK_THROWS_AS(read_pgm(tmp.file("deep.pgm")), DataError);
}

TEST_CASE("manifest: round trip preserves rows and stage labels") {
    TempDir tmp;
    DatasetManifest manifest;
    manifest.rows.push_back({"img/a.pgm", "p0001", 0, "orig", "img/a.pgm"});
    manifest.rows.push_back({"img/a_cz1.pgm", "p0001", 0, "cz1", "img/a.pgm"});
    manifest.rows.push_back({"img/b.pgm", "p0002", 4, "orig", "img/b.pgm"});
    save_manifest(manifest, tmp.file("m.csv"));
    const DatasetManifest back = load_manifest(tmp.file("m.csv"));
    REQUIRE(back.size() == 3);
    CHECK(back.rows[0].path == "img/a.pgm");
    CHECK(back.rows[1].variant == "cz1");
    CHECK(back.rows[2].stage == 4);
    CHECK(back.rows[2].patient_id == "p0002");
}

TEST_CASE("manifest: rejects malformed files") {
    TempDir tmp;
    std::ofstream(tmp.file("bad.csv")) << "path,patient\nx,y\n";
    CHECK_THROWS_AS(load_manifest(tmp.file("bad.csv")), DataError);

    std::ofstream(tmp.file("badstage.csv"))
        << "path,patient_id,stage,variant,origin_path\na,p,F9,orig,a\n";
    CHECK_THROWS_AS(load_manifest(tmp.file("badstage.csv")), DataError);
}

TEST_CASE("stage labels map both ways") {
    for (int s = 0; s < 5; ++s) CHECK(parse_stage_label(stage_label(s)) == s);
    CHECK_THROWS_AS(stage_label(5), ParamError);
    CHECK_THROWS_AS(parse_stage_label("G1"), DataError);
}
