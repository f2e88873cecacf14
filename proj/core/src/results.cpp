#include "sfbc/results.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "sfbc/error.hpp"

namespace sfbc {

namespace {

std::string number(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string escape_xml(const std::string& text) {
    std::string out;
    for (char c : text) {
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

}  // namespace

std::string results_header() { return "task,basis,variant,n,seed,window,mapping,metric,mean,p05,p95,runtime_s"; }

std::string format_result_row(const ResultRow& r) {
    for (const auto* field : {&r.task, &r.basis, &r.variant, &r.window, &r.mapping, &r.metric})
        if (field->find(',') != std::string::npos) throw ConfigError("result field contains a comma: " + *field);
    return r.task + ',' + r.basis + ',' + r.variant + ',' + std::to_string(r.n) + ',' + std::to_string(r.seed) + ',' +
           r.window + ',' + r.mapping + ',' + r.metric + ',' + number(r.mean) + ',' + number(r.p05) + ',' +
           number(r.p95) + ',' + number(r.runtime_s);
}

void write_results_csv(const std::filesystem::path& path, const ResultTable& table) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << results_header() << '\n';
    for (const auto& row : table.rows) out << format_result_row(row) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

ResultTable read_results_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != results_header())
        throw CorruptDataError("unexpected result CSV header in " + path.string());
    ResultTable table;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 12) throw CorruptDataError("malformed result row: " + line);
        ResultRow r;
        r.task = cells[0];
        r.basis = cells[1];
        r.variant = cells[2];
        r.n = std::stoi(cells[3]);
        r.seed = std::stoull(cells[4]);
        r.window = cells[5];
        r.mapping = cells[6];
        r.metric = cells[7];
        r.mean = std::stod(cells[8]);
        r.p05 = std::stod(cells[9]);
        r.p95 = std::stod(cells[10]);
        r.runtime_s = std::stod(cells[11]);
        table.rows.push_back(std::move(r));
    }
    return table;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) return std::nan("");
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

void plot_results(const std::filesystem::path& path, const ResultTable& table, const std::string& title) {
    struct Point {
        std::vector<double> mean, lo, hi;
    };
    std::map<std::string, std::map<int, Point>> series;
    for (const auto& r : table.rows) {
        std::string key = r.basis;
        if (!r.variant.empty() && r.variant != "-") key += " (" + r.variant + ")";
        if (r.metric != "l2") key += " " + r.metric;
        auto& p = series[key][r.n];
        p.mean.push_back(r.mean);
        p.lo.push_back(r.p05);
        p.hi.push_back(r.p95);
    }

    const double width = 720, height = 440, left = 70, right = 200, top = 40, bottom = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& [key, points] : series) {
        for (const auto& [n, p] : points) {
            const double x = std::log2(std::max(n, 1));
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            for (const auto* v : {&p.mean, &p.lo, &p.hi})
                for (double y : *v)
                    if (y > 0 && std::isfinite(y)) {
                        ymin = std::min(ymin, std::log10(y));
                        ymax = std::max(ymax, std::log10(y));
                    }
        }
    }
    if (xmin > xmax) xmin = 0, xmax = 1;
    if (xmax - xmin < 1e-9) xmax = xmin + 1;
    if (ymin > ymax) ymin = 0, ymax = 1;
    ymin = std::floor(ymin);
    ymax = std::ceil(ymax);
    if (ymax - ymin < 1) ymax = ymin + 1;
    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (width - left - right); };
    auto py = [&](double y) {
        const double ly = std::log10(std::max(y, std::pow(10.0, ymin)));
        return top + (ymax - ly) / (ymax - ymin) * (height - top - bottom);
    };

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << escape_xml(title) << "</text>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right << "\" y2=\""
        << height - bottom << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << height - bottom
        << "\" stroke=\"black\"/>\n";
    for (int e = static_cast<int>(ymin); e <= static_cast<int>(ymax); ++e) {
        const double y = py(std::pow(10.0, e));
        svg << "<line x1=\"" << left - 4 << "\" y1=\"" << y << "\" x2=\"" << width - right << "\" y2=\"" << y
            << "\" stroke=\"#dddddd\"/>\n"
            << "<text x=\"" << left - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">1e" << e << "</text>\n";
    }
    std::map<int, bool> ticks;
    for (const auto& [key, points] : series)
        for (const auto& [n, p] : points) ticks[n] = true;
    for (const auto& [n, unused] : ticks) {
        const double x = px(std::log2(std::max(n, 1)));
        svg << "<text x=\"" << x << "\" y=\"" << height - bottom + 18 << "\" text-anchor=\"middle\">" << n
            << "</text>\n";
    }
    svg << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 10
        << "\" text-anchor=\"middle\">n</text>\n";

    std::size_t index = 0;
    for (const auto& [key, points] : series) {
        const char* color = palette[index % 10];
        std::ostringstream line, band_top, band_bottom;
        for (const auto& [n, p] : points) {
            auto avg = [](const std::vector<double>& v) {
                double s = 0;
                for (double x : v) s += x;
                return s / static_cast<double>(v.size());
            };
            const double x = px(std::log2(std::max(n, 1)));
            line << x << ',' << py(avg(p.mean)) << ' ';
            band_top << x << ',' << py(*std::max_element(p.hi.begin(), p.hi.end())) << ' ';
            band_bottom.str(std::to_string(x) + ',' + std::to_string(py(*std::min_element(p.lo.begin(), p.lo.end()))) +
                            ' ' + band_bottom.str());
        }
        svg << "<polygon points=\"" << band_top.str() << band_bottom.str() << "\" fill=\"" << color
            << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n"
            << "<polyline points=\"" << line.str() << "\" fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        const double ly = top + 16.0 * static_cast<double>(index);
        svg << "<rect x=\"" << width - right + 12 << "\" y=\"" << ly << "\" width=\"12\" height=\"4\" fill=\"" << color
            << "\"/>\n"
            << "<text x=\"" << width - right + 30 << "\" y=\"" << ly + 6 << "\">" << escape_xml(key) << "</text>\n";
        ++index;
    }
    svg << "</svg>\n";

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << svg.str();
}

}  // namespace sfbc
