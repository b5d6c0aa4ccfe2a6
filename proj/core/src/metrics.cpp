#include "insartd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "insartd/util.hpp"

namespace insartd {

namespace {

double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (n % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid - 1),
                         v.begin() + static_cast<std::ptrdiff_t>(mid));
        m = 0.5 * (m + v[mid - 1]);
    }
    return m;
}

struct Stats {
    double bias, sd, median, mad;
};

Stats stats_of(const std::vector<double>& r) {
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(r.size());
    double var = 0.0;
    for (double v : r) var += (v - mean) * (v - mean);
    var /= static_cast<double>(r.size());  // population convention

    const double med = median_of(r);
    std::vector<double> dev(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) dev[i] = std::abs(r[i] - med);
    const double mad = 1.4826 * median_of(std::move(dev));
    return {mean, std::sqrt(var), med, mad};
}

void check_same_shape(const RealGrid& a, const RealGrid& b, const char* what) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw std::invalid_argument(std::string(what) + ": grid dims mismatch");
}

}  // namespace

std::size_t Histogram::total() const {
    std::size_t t = 0;
    for (std::size_t c : counts) t += c;
    return t;
}

std::vector<double> Histogram::pdf() const {
    std::vector<double> d(counts.size(), 0.0);
    const auto n = static_cast<double>(total());
    if (n == 0.0) return d;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double width = edges[i + 1] - edges[i];
        d[i] = width > 0.0 ? static_cast<double>(counts[i]) / (n * width) : 0.0;
    }
    return d;
}

EvalSummary residual_stats(const ParameterMaps& est, const ParameterMaps& ref,
                           const std::vector<std::uint8_t>* valid_mask) {
    check_same_shape(est.elevation, ref.elevation, "residual_stats: elevation");
    check_same_shape(est.deformation, ref.deformation, "residual_stats: deformation");
    check_same_shape(est.elevation, est.deformation, "residual_stats: est");
    const std::size_t n = est.elevation.data.size();
    if (valid_mask && valid_mask->size() != n)
        throw std::invalid_argument("residual_stats: mask size mismatch");

    std::vector<double> rd, re;
    rd.reserve(n);
    re.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (valid_mask && !(*valid_mask)[i]) continue;
        rd.push_back(est.deformation.data[i] - ref.deformation.data[i]);
        re.push_back(est.elevation.data[i] - ref.elevation.data[i]);
    }
    if (rd.empty()) throw std::invalid_argument("residual_stats: no valid pixels");

    const Stats sd = stats_of(rd);
    const Stats se = stats_of(re);
    EvalSummary out;
    out.bias_deformation = sd.bias;
    out.sd_deformation = sd.sd;
    out.median_deformation = sd.median;
    out.mad_deformation = sd.mad;
    out.bias_elevation = se.bias;
    out.sd_elevation = se.sd;
    out.median_elevation = se.median;
    out.mad_elevation = se.mad;
    out.n_valid_pixels = rd.size();
    return out;
}

Histogram coherence_histogram(const RealGrid& c, int bins,
                              const std::vector<std::uint8_t>* valid_mask) {
    if (bins < 2) throw std::invalid_argument("coherence_histogram: bins must be >= 2");
    if (valid_mask && valid_mask->size() != c.data.size())
        throw std::invalid_argument("coherence_histogram: mask size mismatch");

    Histogram h;
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i)
        h.edges[static_cast<std::size_t>(i)] = static_cast<double>(i) / bins;
    h.counts.assign(static_cast<std::size_t>(bins), 0);

    for (std::size_t i = 0; i < c.data.size(); ++i) {
        if (valid_mask && !(*valid_mask)[i]) continue;
        const double v = std::clamp(c.data[i], 0.0, 1.0);
        const auto b = std::min<std::size_t>(static_cast<std::size_t>(v * bins),
                                             static_cast<std::size_t>(bins) - 1);
        ++h.counts[b];
    }
    return h;
}

Rgb palette(double t) {
    // Diverging blue-white-red anchors; piecewise linear between them.
    static constexpr std::array<Rgb, 5> anchors{{{59, 76, 192},
                                                 {124, 159, 249},
                                                 {222, 220, 218},
                                                 {245, 132, 102},
                                                 {180, 4, 38}}};
    t = std::clamp(t, 0.0, 1.0);
    const double x = t * static_cast<double>(anchors.size() - 1);
    const auto lo = std::min<std::size_t>(static_cast<std::size_t>(x), anchors.size() - 2);
    const double f = x - static_cast<double>(lo);
    const Rgb& a = anchors[lo];
    const Rgb& b = anchors[lo + 1];
    auto mix = [f](std::uint8_t u, std::uint8_t v) {
        return static_cast<std::uint8_t>(std::lround((1.0 - f) * u + f * v));
    };
    return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

void render_map(const RealGrid& map, double lo, double hi, const std::string& ppm_path,
                const std::string& svg_path, const std::vector<std::uint8_t>* valid_mask) {
    if (!(lo < hi)) throw std::invalid_argument("render_map: need lo < hi");
    if (valid_mask && valid_mask->size() != map.data.size())
        throw std::invalid_argument("render_map: mask size mismatch");

    std::ofstream ppm(ppm_path, std::ios::binary);
    if (!ppm) throw std::runtime_error("render_map: cannot open " + ppm_path);
    ppm << "P6\n" << map.cols << " " << map.rows << "\n255\n";
    for (std::size_t r = 0; r < map.rows; ++r)
        for (std::size_t c = 0; c < map.cols; ++c) {
            const std::size_t i = r * map.cols + c;
            const double v = map.data[i];
            Rgb px = kInvalidColor;
            if ((!valid_mask || (*valid_mask)[i]) && std::isfinite(v))
                px = palette((v - lo) / (hi - lo));
            ppm.put(static_cast<char>(px.r));
            ppm.put(static_cast<char>(px.g));
            ppm.put(static_cast<char>(px.b));
        }
    if (!ppm) throw std::runtime_error("render_map: write failed for " + ppm_path);
    ppm.close();

    std::ofstream svg(svg_path, std::ios::binary);
    if (!svg) throw std::runtime_error("render_map: cannot open " + svg_path);
    constexpr int kSteps = 64;
    constexpr int kBarW = 24, kBarH = 256, kMargin = 8, kTextW = 72;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
        << kBarW + kTextW + 2 * kMargin << "\" height=\"" << kBarH + 2 * kMargin << "\">\n";
    for (int i = 0; i < kSteps; ++i) {
        // Top of the bar is the high end of the range.
        const Rgb px = palette((static_cast<double>(kSteps - 1 - i) + 0.5) / kSteps);
        const double y = kMargin + static_cast<double>(i) * kBarH / kSteps;
        svg << "  <rect x=\"" << kMargin << "\" y=\"" << format_double(y) << "\" width=\""
            << kBarW << "\" height=\"" << format_double(static_cast<double>(kBarH) / kSteps + 0.5)
            << "\" fill=\"rgb(" << int(px.r) << "," << int(px.g) << "," << int(px.b)
            << ")\"/>\n";
    }
    svg << "  <text x=\"" << kMargin + kBarW + 4 << "\" y=\"" << kMargin + 12
        << "\" font-family=\"monospace\" font-size=\"12\">" << format_double(hi)
        << "</text>\n";
    svg << "  <text x=\"" << kMargin + kBarW + 4 << "\" y=\"" << kMargin + kBarH
        << "\" font-family=\"monospace\" font-size=\"12\">" << format_double(lo)
        << "</text>\n";
    svg << "</svg>\n";
    if (!svg) throw std::runtime_error("render_map: write failed for " + svg_path);
}

void write_summary_csv(const std::string& path,
                       const std::vector<std::pair<std::string, EvalSummary>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_summary_csv: cannot open " + path);
    out << "method,sd_deformation,bias_deformation,sd_elevation,bias_elevation,"
           "median_deformation,mad_deformation,median_elevation,mad_elevation,"
           "n_valid_pixels\n";
    for (const auto& [method, s] : rows) {
        out << method << ',' << format_double(s.sd_deformation) << ','
            << format_double(s.bias_deformation) << ',' << format_double(s.sd_elevation)
            << ',' << format_double(s.bias_elevation) << ','
            << format_double(s.median_deformation) << ',' << format_double(s.mad_deformation)
            << ',' << format_double(s.median_elevation) << ','
            << format_double(s.mad_elevation) << ',' << s.n_valid_pixels << '\n';
    }
    if (!out) throw std::runtime_error("write_summary_csv: write failed for " + path);
}

}  // namespace insartd
