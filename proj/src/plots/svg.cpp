#include "ffsteer/plots.hpp"

#include "ffsteer/csv.hpp"
#include "ffsteer/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <sstream>

namespace ffsteer::plots {

namespace {

constexpr double kWidth = 760.0;
constexpr double kHeight = 460.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 170.0;  // room for the legend
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v, const char* fmt = "%.2f") {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void settle() {
        if (!(lo <= hi)) {
            lo = 0.0;
            hi = 1.0;
        } else if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
            const double pad = lo == 0.0 ? 1.0 : 0.1 * std::abs(lo);
            lo -= pad;
            hi += pad;
        }
    }
};

std::vector<double> nice_ticks(double lo, double hi) {
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw) break;
    }
    std::vector<double> t;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) {
        t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    }
    return t;
}

void header(std::ostringstream& os, const Figure& f) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << esc(f.title)
       << "</text>\n";
}

void render_lines(std::ostringstream& os, const Figure& f) {
    Range xr, yr;
    for (const auto& s : f.series) {
        for (double v : s.x) xr.add(v);
        for (double v : s.y) yr.add(v);
    }
    xr.settle();
    yr.settle();
    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto py = [&](double y) { return kTop + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

    os << "<g stroke=\"#ddd\" stroke-width=\"1\">\n";
    const auto xt = nice_ticks(xr.lo, xr.hi);
    const auto yt = nice_ticks(yr.lo, yr.hi);
    for (double t : xt) os << "<line x1=\"" << num(px(t)) << "\" y1=\"" << kTop << "\" x2=\"" << num(px(t)) << "\" y2=\"" << kTop + ph << "\"/>\n";
    for (double t : yt) os << "<line x1=\"" << kLeft << "\" y1=\"" << num(py(t)) << "\" x2=\"" << kLeft + pw << "\" y2=\"" << num(py(t)) << "\"/>\n";
    os << "</g>\n";
    os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double t : xt) {
        os << "<text x=\"" << num(px(t)) << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">"
           << num(t, "%g") << "</text>\n";
    }
    for (double t : yt) {
        os << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(py(t) + 4) << "\" text-anchor=\"end\">" << num(t, "%g")
           << "</text>\n";
    }
    os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 14 << "\" text-anchor=\"middle\">"
       << esc(f.xlabel) << "</text>\n";
    os << "<text x=\"18\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
       << kTop + ph / 2 << ")\">" << esc(f.ylabel) << "</text>\n";

    for (std::size_t k = 0; k < f.series.size(); ++k) {
        const auto& s = f.series[k];
        const char* color = kPalette[k % (sizeof kPalette / sizeof kPalette[0])];
        const std::size_t n = std::min(s.x.size(), s.y.size());
        if (s.markers) {
            os << "<g fill=\"" << color << "\" fill-opacity=\"0.6\">\n";
            for (std::size_t i = 0; i < n; ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                os << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"2\"/>\n";
            }
            os << "</g>\n";
        } else {
            // Non-finite points break the line into pieces.
            std::string pts;
            auto flush = [&] {
                if (!pts.empty()) {
                    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\" points=\"" << pts
                       << "\"/>\n";
                }
                pts.clear();
            };
            for (std::size_t i = 0; i < n; ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
                    flush();
                    continue;
                }
                pts += num(px(s.x[i])) + "," + num(py(s.y[i])) + " ";
            }
            flush();
        }
        const double ly = kTop + 14 + 18.0 * static_cast<double>(k);
        const double lx = kLeft + pw + 12;
        os << "<rect x=\"" << lx << "\" y=\"" << ly - 9 << "\" width=\"14\" height=\"10\" fill=\"" << color << "\"/>\n";
        os << "<text x=\"" << lx + 20 << "\" y=\"" << ly << "\">" << esc(s.name) << "</text>\n";
    }
}

void render_heatmap(std::ostringstream& os, const Figure& f) {
    const std::size_t rows = f.cells.size();
    const std::size_t cols = rows ? f.cells[0].size() : 0;
    double vmax = 0.0;
    for (const auto& r : f.cells) {
        for (double v : r) {
            if (std::isfinite(v)) vmax = std::max(vmax, std::abs(v));
        }
    }
    if (vmax == 0.0) vmax = 1.0;
    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    const double cw = cols ? pw / static_cast<double>(cols) : pw;
    const double ch = rows ? ph / static_cast<double>(rows) : ph;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols && c < f.cells[r].size(); ++c) {
            const double v = f.cells[r][c];
            const double a = std::isfinite(v) ? std::abs(v) / vmax : 0.0;
            const int shade = static_cast<int>(std::lround(255.0 * (1.0 - a)));
            os << "<rect x=\"" << num(kLeft + cw * static_cast<double>(c)) << "\" y=\""
               << num(kTop + ch * static_cast<double>(r)) << "\" width=\"" << num(cw) << "\" height=\"" << num(ch)
               << "\" fill=\"rgb(" << shade << ',' << shade << ",255)\" stroke=\"white\"><title>" << num(v, "%.4g")
               << "</title></rect>\n";
        }
        if (r < f.row_labels.size()) {
            os << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(kTop + ch * (static_cast<double>(r) + 0.5) + 4)
               << "\" text-anchor=\"end\">" << esc(f.row_labels[r]) << "</text>\n";
        }
    }
    for (std::size_t c = 0; c < cols && c < f.col_labels.size(); ++c) {
        os << "<text x=\"" << num(kLeft + cw * (static_cast<double>(c) + 0.5)) << "\" y=\"" << kTop + ph + 16
           << "\" text-anchor=\"middle\">" << esc(f.col_labels[c]) << "</text>\n";
    }
    os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 14 << "\" text-anchor=\"middle\">"
       << esc(f.xlabel) << "</text>\n";
    os << "<text x=\"" << kLeft + pw + 12 << "\" y=\"" << kTop + 14 << "\">max " << num(vmax, "%.3g") << "</text>\n";
}

void mix(std::uint64_t& h, std::string_view bytes) {
    // Chain FNV-1a over consecutive pieces by folding the running hash in.
    std::string buf(reinterpret_cast<const char*>(&h), sizeof h);
    buf.append(bytes);
    h = csv::fnv1a(buf);
}

void mix(std::uint64_t& h, const std::vector<double>& v) {
    mix(h, std::string_view(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double)));
}

}  // namespace

std::uint64_t Figure::data_hash() const {
    std::uint64_t h = csv::fnv1a(name);
    for (const auto& s : series) {
        mix(h, s.name);
        mix(h, s.x);
        mix(h, s.y);
    }
    for (const auto& l : row_labels) mix(h, l);
    for (const auto& l : col_labels) mix(h, l);
    for (const auto& r : cells) mix(h, r);
    return h;
}

std::string Figure::render_svg() const {
    std::ostringstream os;
    header(os, *this);
    if (!cells.empty()) render_heatmap(os, *this);
    else render_lines(os, *this);
    os << "</svg>\n";
    return os.str();
}

std::string Figure::to_json() const {
    nlohmann::ordered_json j;
    j["name"] = name;
    j["title"] = title;
    j["xlabel"] = xlabel;
    j["ylabel"] = ylabel;
    j["series"] = nlohmann::ordered_json::array();
    for (const auto& s : series) {
        // Non-finite values are stored as null.
        nlohmann::ordered_json xs = nlohmann::ordered_json::array(), ys = nlohmann::ordered_json::array();
        for (double v : s.x) xs.push_back(std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json());
        for (double v : s.y) ys.push_back(std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json());
        j["series"].push_back({{"name", s.name}, {"markers", s.markers}, {"x", xs}, {"y", ys}});
    }
    j["row_labels"] = row_labels;
    j["col_labels"] = col_labels;
    j["cells"] = cells;
    return j.dump();
}

Figure Figure::from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        Figure f;
        f.name = j.at("name").get<std::string>();
        f.title = j.value("title", "");
        f.xlabel = j.value("xlabel", "");
        f.ylabel = j.value("ylabel", "");
        auto nums = [](const nlohmann::json& a) {
            std::vector<double> v;
            for (const auto& e : a) v.push_back(e.is_null() ? std::numeric_limits<double>::quiet_NaN() : e.get<double>());
            return v;
        };
        for (const auto& s : j.value("series", nlohmann::json::array())) {
            Series out;
            out.name = s.value("name", "");
            out.markers = s.value("markers", false);
            out.x = nums(s.at("x"));
            out.y = nums(s.at("y"));
            f.series.push_back(std::move(out));
        }
        f.row_labels = j.value("row_labels", std::vector<std::string>{});
        f.col_labels = j.value("col_labels", std::vector<std::string>{});
        f.cells = j.value("cells", std::vector<std::vector<double>>{});
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("bad plot data: ") + e.what());
    }
}

std::vector<std::string> write_figures(const std::vector<Figure>& figures, const std::string& dir) {
    std::vector<std::string> paths;
    if (figures.empty()) return paths;
    std::filesystem::create_directories(dir);
    for (const auto& f : figures) {
        const std::string stem = (std::filesystem::path(dir) / f.name).string();
        std::ofstream svg(stem + ".svg");
        std::ofstream data(stem + ".plot.json");
        if (!svg || !data) throw InvalidInput("cannot write plot " + stem);
        svg << f.render_svg();
        data << f.to_json() << '\n';
        paths.push_back(stem + ".svg");
    }
    return paths;
}

std::vector<std::string> render_plot_data(const std::string& dir, const std::string& out_dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw InvalidInput(dir + " is not a directory");
    std::vector<fs::path> inputs;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string n = e.path().filename().string();
        if (n.size() > 10 && n.compare(n.size() - 10, 10, ".plot.json") == 0) inputs.push_back(e.path());
    }
    std::sort(inputs.begin(), inputs.end());
    std::vector<Figure> figs;
    for (const auto& p : inputs) {
        std::ifstream in(p);
        std::ostringstream ss;
        ss << in.rdbuf();
        figs.push_back(Figure::from_json(ss.str()));
    }
    return write_figures(figs, out_dir);
}

}  // namespace ffsteer::plots
