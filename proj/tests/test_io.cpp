#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "insartd/io.hpp"
#include "test_support.hpp"

using namespace insartd;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("insartd_io_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const char* name) const { return (path / name).string(); }
};

std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), std::streamsize(bytes.size()));
}

}  // namespace

TEST_CASE("ct3 files round-trip bit exactly and start with the magic") {
    TempDir tmp;
    ComplexTensor3 t = test_support::random_tensor(Dims3{7, 5, 3}, 2024, 13.7);
    auto path = tmp.file("stack.ct3");
    write_ct3(path, t);

    std::string raw = slurp(path);
    REQUIRE(raw.size() == 4 + 3 * 8 + t.size() * 16);
    CHECK(raw[0] == 0x43);  // 'C'
    CHECK(raw[1] == 0x54);  // 'T'
    CHECK(raw[2] == 0x33);  // '3'
    CHECK(raw[3] == 0x00);

    ComplexTensor3 back = read_ct3(path);
    CHECK(back == t);

    // An empty-but-valid tensor also survives.
    ComplexTensor3 tiny(Dims3{1, 1, 1}, Complex(-0.0, 3.5e-310));
    write_ct3(tmp.file("tiny.ct3"), tiny);
    CHECK(read_ct3(tmp.file("tiny.ct3")) == tiny);
}

TEST_CASE("ct3 reader rejects wrong magic, truncation and non-finite payloads") {
    TempDir tmp;
    ComplexTensor3 t = test_support::random_tensor(Dims3{3, 3, 2}, 5);
    auto path = tmp.file("stack.ct3");
    write_ct3(path, t);
    std::string good = slurp(path);

    std::string bad_magic = good;
    bad_magic[2] = 'X';
    spit(tmp.file("bad_magic.ct3"), bad_magic);
    CHECK_THROWS_AS((void)read_ct3(tmp.file("bad_magic.ct3")), std::runtime_error);

    spit(tmp.file("trunc.ct3"), good.substr(0, good.size() - 9));
    CHECK_THROWS_AS((void)read_ct3(tmp.file("trunc.ct3")), std::runtime_error);

    spit(tmp.file("short_header.ct3"), good.substr(0, 10));
    CHECK_THROWS_AS((void)read_ct3(tmp.file("short_header.ct3")), std::runtime_error);

    // Trailing garbage is a format violation, not silently ignored.
    spit(tmp.file("long.ct3"), good + "extra");
    CHECK_THROWS_AS((void)read_ct3(tmp.file("long.ct3")), std::runtime_error);

    CHECK_THROWS_AS((void)read_ct3(tmp.file("missing.ct3")), std::runtime_error);

    ComplexTensor3 nan_t = t;
    nan_t[0] = Complex(std::nan(""), 0.0);
    CHECK_THROWS_AS(write_ct3(tmp.file("nan.ct3"), nan_t), std::invalid_argument);
}

TEST_CASE("grid CSV round-trips exactly, including awkward doubles") {
    TempDir tmp;
    RealGrid g(3, 4);
    std::mt19937_64 rng(77);
    std::normal_distribution<double> gauss(0.0, 1e6);
    for (double& v : g.data) v = gauss(rng);
    g(0, 0) = 0.1;  // not exactly representable; must still round-trip
    g(1, 1) = -1.7976931348623157e308;
    g(2, 2) = 5e-324;  // smallest subnormal
    g(2, 3) = -0.0;

    auto path = tmp.file("grid.csv");
    write_grid_csv(path, g, "m");
    std::string text = slurp(path);
    CHECK(text.rfind("# rows=3 cols=4 units=m\n", 0) == 0);

    RealGrid back = read_grid_csv(path);
    REQUIRE(back.rows == 3);
    REQUIRE(back.cols == 4);
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(back.data[i] == g.data[i]);
        CHECK(std::signbit(back.data[i]) == std::signbit(g.data[i]));
    }
}

TEST_CASE("grid CSV reader rejects malformed inputs") {
    TempDir tmp;
    spit(tmp.file("no_header.csv"), "1,2\n3,4\n");
    CHECK_THROWS_AS((void)read_grid_csv(tmp.file("no_header.csv")), std::runtime_error);

    spit(tmp.file("short_row.csv"), "# rows=2 cols=2 units=m\n1,2\n3\n");
    CHECK_THROWS_AS((void)read_grid_csv(tmp.file("short_row.csv")), std::runtime_error);

    spit(tmp.file("bad_number.csv"), "# rows=1 cols=2 units=m\n1,abc\n");
    CHECK_THROWS_AS((void)read_grid_csv(tmp.file("bad_number.csv")), std::runtime_error);

    spit(tmp.file("missing_rows.csv"), "# rows=3 cols=2 units=m\n1,2\n");
    CHECK_THROWS_AS((void)read_grid_csv(tmp.file("missing_rows.csv")), std::runtime_error);
}

TEST_CASE("mask CSV stores 0/1 and round-trips") {
    TempDir tmp;
    std::vector<std::uint8_t> mask{1, 0, 0, 1, 1, 0};
    auto path = tmp.file("mask.csv");
    write_mask_csv(path, 2, 3, mask);
    std::string text = slurp(path);
    CHECK(text.rfind("# rows=2 cols=3 units=bool\n", 0) == 0);
    CHECK(text.find("1,0,0\n") != std::string::npos);

    std::size_t rows = 0, cols = 0;
    std::vector<std::uint8_t> back = read_mask_csv(path, &rows, &cols);
    CHECK(rows == 2);
    CHECK(cols == 3);
    CHECK(back == mask);

    CHECK_THROWS_AS(write_mask_csv(path, 2, 2, mask), std::invalid_argument);
}

TEST_CASE("geometry JSON round-trips every field") {
    TempDir tmp;
    InSARGeometry geom = make_geometry(6, 350.0, 1.5, MotionModel::seasonal, 0.25, 8);
    geom.wavelength_m = 0.056;
    geom.range_m = 8.5e5;
    auto path = tmp.file("geometry.json");
    write_geometry_json(path, geom);

    InSARGeometry back = read_geometry_json(path);
    CHECK(back.wavelength_m == geom.wavelength_m);
    CHECK(back.range_m == geom.range_m);
    CHECK(back.spatial_baselines_m == geom.spatial_baselines_m);
    CHECK(back.temporal_baselines_y == geom.temporal_baselines_y);
    CHECK(back.motion == geom.motion);
    CHECK(back.t0_y == geom.t0_y);

    spit(tmp.file("bad.json"), "{\"wavelength_m\": 0.031");
    CHECK_THROWS((void)read_geometry_json(tmp.file("bad.json")));
}

TEST_CASE("checksum_file computes the standard CRC-32") {
    TempDir tmp;
    auto path = tmp.file("check.txt");
    spit(path, "123456789");
    FileChecksum c = checksum_file(path);
    CHECK(c.crc32 == 0xCBF43926u);  // published check value for this input
    CHECK(c.bytes == 9);

    spit(path, "");
    FileChecksum empty = checksum_file(path);
    CHECK(empty.crc32 == 0u);
    CHECK(empty.bytes == 0);

    CHECK_THROWS_AS((void)checksum_file(tmp.file("absent.txt")), std::runtime_error);
}
