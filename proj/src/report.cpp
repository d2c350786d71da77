// SPDX-License-Identifier: Apache-2.0
//
// mbtd - multiband time-delay estimation by weighted subspace fitting
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

#include "mbtd/bench.hpp"

namespace mbtd {

namespace {

std::string fmt(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

double parse_num(const std::string& s, int line)
{
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ArgumentError("csv line " + std::to_string(line) + ": bad number '" + s + "'");
    }
    return v;
}

// Rows grouped per estimator in first-appearance order.
std::vector<std::pair<std::string, std::vector<const BenchRow*>>> series_of(const BenchResult& res)
{
    std::vector<std::pair<std::string, std::vector<const BenchRow*>>> out;
    for (const auto& row : res.rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const auto& s) { return s.first == row.estimator; });
        if (it == out.end()) {
            out.push_back({row.estimator, {}});
            it = out.end() - 1;
        }
        it->second.push_back(&row);
    }
    return out;
}

// CRLB per axis value (it is repeated on every estimator row).
std::vector<std::pair<double, double>> crlb_series(const BenchResult& res)
{
    std::vector<std::pair<double, double>> out;
    for (const auto& row : res.rows) {
        if (std::none_of(out.begin(), out.end(), [&](const auto& p) { return p.first == row.axis_value; })) {
            out.emplace_back(row.axis_value, row.crlb_s);
        }
    }
    return out;
}

} // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& contents)
{
    std::filesystem::path tmp = path;
    tmp += ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::system_error(errno, std::generic_category(), "cannot open '" + tmp.string() + "' for writing");
        }
        out << contents;
        out.flush();
        if (!out) {
            throw std::system_error(errno, std::generic_category(), "write to '" + tmp.string() + "' failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::system_error(ec, "cannot move output into place at '" + path.string() + "'");
    }
}

std::string to_csv(const BenchResult& res)
{
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& r : res.rows) {
        out += r.axis + "," + fmt(r.axis_value) + "," + r.estimator + "," + fmt(r.rmse_s) + "," + fmt(r.crlb_s) + "," +
               std::to_string(r.trials) + "," + std::to_string(r.failures) + "\n";
    }
    return out;
}

BenchResult parse_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw ArgumentError("csv: missing or unexpected header");
    }
    BenchResult res;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            f.push_back(cell);
        }
        if (f.size() != 7) {
            throw ArgumentError("csv line " + std::to_string(line_no) + ": expected 7 fields");
        }
        res.rows.push_back({f[0], parse_num(f[1], line_no), f[2], parse_num(f[3], line_no), parse_num(f[4], line_no),
                            static_cast<int>(parse_num(f[5], line_no)), static_cast<int>(parse_num(f[6], line_no))});
    }
    return res;
}

void emit_csv(const BenchResult& res, const std::filesystem::path& path)
{
    write_file_atomic(path, to_csv(res));
}

std::string crlb_csv(const Scenario& scn, const std::vector<double>& bound)
{
    const std::string axis = scn.axis == SweepAxis::snr ? "snr" : "snapshots";
    std::string out = "axis,axis_value,crlb_s\n";
    for (std::size_t a = 0; a < bound.size(); ++a) {
        out += axis + "," + fmt(scn.axis_value(a)) + "," + fmt(bound[a]) + "\n";
    }
    return out;
}

std::string to_plotdata(const BenchResult& res)
{
    std::string out;
    const std::string axis = res.rows.empty() ? "axis" : res.rows.front().axis;
    for (const auto& [name, rows] : series_of(res)) {
        out += "# series " + name + "\n# " + axis + " rmse_s trials failures\n";
        for (const BenchRow* r : rows) {
            out += fmt(r->axis_value) + " " + fmt(r->rmse_s) + " " + std::to_string(r->trials) + " " +
                   std::to_string(r->failures) + "\n";
        }
        out += "\n\n";
    }
    if (!res.rows.empty()) {
        out += "# series crlb\n# " + axis + " crlb_s\n";
        for (const auto& [x, c] : crlb_series(res)) {
            out += fmt(x) + " " + fmt(c) + "\n";
        }
    }
    return out;
}

void emit_plotdata(const BenchResult& res, const std::filesystem::path& path)
{
    write_file_atomic(path, to_plotdata(res));
}

std::string to_svg(const BenchResult& res, const std::string& title)
{
    constexpr double W = 640, H = 440, left = 80, right = 150, top = 40, bottom = 60;
    const double pw = W - left - right;
    const double ph = H - top - bottom;

    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    const auto grow = [&](double x, double y) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        if (std::isfinite(y) && y > 0.0) {
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    };
    for (const auto& r : res.rows) {
        grow(r.axis_value, r.rmse_s);
        grow(r.axis_value, r.crlb_s);
    }
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
        << title << "</text>\n";
    if (!std::isfinite(ymin) || !(xmax >= xmin)) {
        svg << "</svg>\n";
        return svg.str();
    }
    if (xmax == xmin) {
        xmax = xmin + 1.0;
    }
    const double dmin = std::floor(std::log10(ymin));
    const double dmax = std::max(std::ceil(std::log10(ymax)), dmin + 1.0);
    const auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    const auto py = [&](double y) { return top + (dmax - std::log10(y)) / (dmax - dmin) * ph; };

    svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double d = dmin; d <= dmax; d += 1.0) {
        const double y = py(std::pow(10.0, d));
        svg << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << y << "\" y2=\"" << y
            << "\" stroke=\"#ddd\"/>\n"
            << "<text x=\"" << left - 6 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" << d << "</text>\n";
    }
    for (const auto& [x, c] : crlb_series(res)) {
        svg << "<text x=\"" << px(x) << "\" y=\"" << top + ph + 16
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(x) << "</text>\n";
    }
    const std::string axis = res.rows.front().axis == "snr" ? "SNR [dB]" : "snapshots";
    svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << axis << "</text>\n"
        << "<text x=\"18\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 18 " << top + ph / 2
        << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">RMSE [s]</text>\n";

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::size_t idx = 0;
    const auto polyline = [&](const std::vector<std::pair<double, double>>& pts, const std::string& name,
                              const char* color, bool dashed) {
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\""
            << (dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"";
        for (const auto& [x, y] : pts) {
            if (std::isfinite(y) && y > 0.0) {
                svg << px(x) << "," << py(y) << " ";
            }
        }
        svg << "\"/>\n";
        const double ly = top + 14 + 18 * static_cast<double>(idx);
        svg << "<line x1=\"" << left + pw + 10 << "\" x2=\"" << left + pw + 34 << "\" y1=\"" << ly << "\" y2=\"" << ly
            << "\" stroke=\"" << color << "\" stroke-width=\"2\"" << (dashed ? " stroke-dasharray=\"6,4\"" : "")
            << "/>\n<text x=\"" << left + pw + 40 << "\" y=\"" << ly + 4
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << name << "</text>\n";
        ++idx;
    };
    for (const auto& [name, rows] : series_of(res)) {
        std::vector<std::pair<double, double>> pts;
        for (const BenchRow* r : rows) {
            pts.emplace_back(r->axis_value, r->rmse_s);
        }
        polyline(pts, name, colors[idx % 6], false);
    }
    polyline(crlb_series(res), "CRLB", "black", true);
    svg << "</svg>\n";
    return svg.str();
}

void emit_svg(const BenchResult& res, const std::filesystem::path& path, const std::string& title)
{
    write_file_atomic(path, to_svg(res, title));
}

} // namespace mbtd
