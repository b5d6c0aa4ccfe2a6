#include "insartd/io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "insartd/util.hpp"

namespace insartd {

namespace {

constexpr std::array<unsigned char, 4> kMagic{0x43, 0x54, 0x33, 0x00};  // "CT3\0"

static_assert(std::endian::native == std::endian::little,
              "CT3 I/O assumes a little-endian host");

void put_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t get_u64(std::istream& in, const std::string& path) {
    std::uint64_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw std::runtime_error("read_ct3: truncated header in " + path);
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

void write_ct3(const std::string& path, const ComplexTensor3& t) {
    if (!all_finite(t)) throw std::invalid_argument("write_ct3: non-finite entries");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_ct3: cannot open " + path);
    out.write(reinterpret_cast<const char*>(kMagic.data()), kMagic.size());
    const Dims3 d = t.dims();
    put_u64(out, d.i1);
    put_u64(out, d.i2);
    put_u64(out, d.i3);
    for (const Complex& v : t.data()) {
        const double re = v.real(), im = v.imag();
        out.write(reinterpret_cast<const char*>(&re), sizeof re);
        out.write(reinterpret_cast<const char*>(&im), sizeof im);
    }
    if (!out) throw std::runtime_error("write_ct3: write failed for " + path);
}

ComplexTensor3 read_ct3(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_ct3: cannot open " + path);
    std::array<unsigned char, 4> magic{};
    if (!in.read(reinterpret_cast<char*>(magic.data()), magic.size()) || magic != kMagic)
        throw std::runtime_error("read_ct3: bad magic in " + path);
    Dims3 d{get_u64(in, path), get_u64(in, path), get_u64(in, path)};
    if (d.total() == 0 || d.total() > (1ull << 32))
        throw std::runtime_error("read_ct3: implausible dims in " + path);

    ComplexTensor3 t(d);
    for (Complex& v : t.data()) {
        double re = 0.0, im = 0.0;
        if (!in.read(reinterpret_cast<char*>(&re), sizeof re) ||
            !in.read(reinterpret_cast<char*>(&im), sizeof im))
            throw std::runtime_error("read_ct3: truncated payload in " + path);
        if (!std::isfinite(re) || !std::isfinite(im))
            throw std::runtime_error("read_ct3: non-finite entry in " + path);
        v = Complex(re, im);
    }
    if (in.get() != std::ifstream::traits_type::eof())
        throw std::runtime_error("read_ct3: trailing bytes in " + path);
    return t;
}

void write_grid_csv(const std::string& path, const RealGrid& g, const std::string& units) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_grid_csv: cannot open " + path);
    out << "# rows=" << g.rows << " cols=" << g.cols << " units=" << units << "\n";
    for (std::size_t r = 0; r < g.rows; ++r) {
        for (std::size_t c = 0; c < g.cols; ++c) {
            if (c) out << ',';
            out << format_double(g(r, c));
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write_grid_csv: write failed for " + path);
}

RealGrid read_grid_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_grid_csv: cannot open " + path);
    std::string header;
    std::getline(in, header);
    std::size_t rows = 0, cols = 0;
    if (std::sscanf(header.c_str(), "# rows=%zu cols=%zu", &rows, &cols) != 2 ||
        rows == 0 || cols == 0)
        throw std::runtime_error("read_grid_csv: bad header in " + path);

    RealGrid g(rows, cols, 0.0);
    std::string line;
    for (std::size_t r = 0; r < rows; ++r) {
        if (!std::getline(in, line))
            throw std::runtime_error("read_grid_csv: missing row in " + path);
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != cols)
            throw std::runtime_error("read_grid_csv: wrong column count in " + path);
        for (std::size_t c = 0; c < cols; ++c) {
            try {
                g(r, c) = parse_double(fields[c]);
            } catch (const std::invalid_argument& e) {
                throw std::runtime_error("read_grid_csv: " + path + ": " + e.what());
            }
        }
    }
    return g;
}

void write_mask_csv(const std::string& path, std::size_t rows, std::size_t cols,
                    const std::vector<std::uint8_t>& mask) {
    if (mask.size() != rows * cols)
        throw std::invalid_argument("write_mask_csv: mask size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_mask_csv: cannot open " + path);
    out << "# rows=" << rows << " cols=" << cols << " units=bool\n";
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (c) out << ',';
            out << int(mask[r * cols + c] ? 1 : 0);
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write_mask_csv: write failed for " + path);
}

std::vector<std::uint8_t> read_mask_csv(const std::string& path, std::size_t* rows,
                                        std::size_t* cols) {
    const RealGrid g = read_grid_csv(path);
    std::vector<std::uint8_t> mask(g.data.size());
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = g.data[i] != 0.0 ? 1 : 0;
    if (rows) *rows = g.rows;
    if (cols) *cols = g.cols;
    return mask;
}

void write_geometry_json(const std::string& path, const InSARGeometry& geom) {
    geom.validate();
    nlohmann::json j;
    j["wavelength_m"] = geom.wavelength_m;
    j["range_m"] = geom.range_m;
    j["spatial_baselines_m"] = geom.spatial_baselines_m;
    j["temporal_baselines_y"] = geom.temporal_baselines_y;
    j["motion"] = geom.motion == MotionModel::linear ? "linear" : "seasonal";
    j["t0_y"] = geom.t0_y;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_geometry_json: cannot open " + path);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write_geometry_json: write failed for " + path);
}

InSARGeometry read_geometry_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_geometry_json: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("read_geometry_json: parse error in " + path + ": " +
                                 e.what());
    }
    InSARGeometry geom;
    try {
        geom.wavelength_m = j.at("wavelength_m").get<double>();
        geom.range_m = j.at("range_m").get<double>();
        geom.spatial_baselines_m = j.at("spatial_baselines_m").get<std::vector<double>>();
        geom.temporal_baselines_y = j.at("temporal_baselines_y").get<std::vector<double>>();
        const std::string motion = j.at("motion").get<std::string>();
        if (motion == "linear")
            geom.motion = MotionModel::linear;
        else if (motion == "seasonal")
            geom.motion = MotionModel::seasonal;
        else
            throw std::runtime_error("read_geometry_json: unknown motion model " + motion);
        geom.t0_y = j.value("t0_y", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("read_geometry_json: bad fields in " + path + ": " +
                                 e.what());
    }
    geom.validate();
    return geom;
}

FileChecksum checksum_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checksum_file: cannot open " + path);
    FileChecksum sum;
    unsigned long crc = ::crc32(0L, Z_NULL, 0);
    std::array<char, 65536> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        const std::streamsize got = in.gcount();
        if (got > 0) {
            crc = ::crc32(crc, reinterpret_cast<const Bytef*>(buf.data()),
                          static_cast<uInt>(got));
            sum.bytes += static_cast<std::uint64_t>(got);
        }
    }
    sum.crc32 = static_cast<std::uint32_t>(crc);
    return sum;
}

}  // namespace insartd
