#include "plume_scout/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <tuple>

#include "plume_scout/errors.hpp"

namespace plume_scout::report {

namespace {

struct Table {
    std::vector<std::string> header;
    std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;  // (line number, cells)

    std::size_t column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw FormatError("missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    }
};

std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
        while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
        out.emplace_back(cell);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

Table read_table(std::string_view csv) {
    Table t;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        const auto nl = csv.find('\n', pos);
        std::string_view line = csv.substr(pos, nl == std::string_view::npos ? csv.npos : nl - pos);
        pos = nl == std::string_view::npos ? csv.size() : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        auto cells = split(line);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw FormatError("row at line " + std::to_string(line_no) + ": expected " +
                              std::to_string(t.header.size()) + " fields, found " + std::to_string(cells.size()));
        }
        t.rows.emplace_back(line_no, std::move(cells));
    }
    if (t.header.empty()) throw FormatError("CSV has no header row");
    return t;
}

template <class T>
T parse_number(const std::string& cell, std::size_t line, const std::string& column) {
    T value{};
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw FormatError("row at line " + std::to_string(line) + ": column '" + column + "' is not a number: '" +
                          cell + "'");
    }
    return value;
}

std::string num(double v, int precision = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    return buf;
}

std::string escape(const std::string& s) {
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

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

// Plot frame shared by both charts.
struct Frame {
    double width = 760, height = 440;
    double left = 70, right = 190, top = 30, bottom = 55;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    bool log_y = false;

    double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
    double py(double y) const {
        const double v = log_y ? std::log10(y) : y;
        return height - bottom - (v - y0) / (y1 - y0) * (height - top - bottom);
    }
};

std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
    const double span = hi - lo;
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (span / step <= target) break;
    }
    std::vector<double> ticks;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) ticks.push_back(t);
    return ticks;
}

std::string open_svg(const Frame& f, const std::string& title, const std::string& xlabel, const std::string& ylabel) {
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(f.width) + "\" height=\"" +
                    num(f.height) + "\" viewBox=\"0 0 " + num(f.width) + " " + num(f.height) +
                    "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(f.width / 2) + "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) +
         "</text>\n";
    const double xa = f.left, xb = f.width - f.right, ya = f.top, yb = f.height - f.bottom;
    s += "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n";
    s += "<line x1=\"" + num(xa) + "\" y1=\"" + num(yb) + "\" x2=\"" + num(xb) + "\" y2=\"" + num(yb) + "\"/>\n";
    s += "<line x1=\"" + num(xa) + "\" y1=\"" + num(ya) + "\" x2=\"" + num(xa) + "\" y2=\"" + num(yb) + "\"/>\n";
    s += "</g>\n";
    s += "<text x=\"" + num((xa + xb) / 2) + "\" y=\"" + num(f.height - 15) + "\" text-anchor=\"middle\">" +
         escape(xlabel) + "</text>\n";
    s += "<text x=\"18\" y=\"" + num((ya + yb) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         num((ya + yb) / 2) + ")\">" + escape(ylabel) + "</text>\n";
    return s;
}

void x_ticks(std::string& s, const Frame& f, const std::vector<double>& ticks) {
    const double yb = f.height - f.bottom;
    for (double t : ticks) {
        s += "<line x1=\"" + num(f.px(t)) + "\" y1=\"" + num(yb) + "\" x2=\"" + num(f.px(t)) + "\" y2=\"" +
             num(yb + 5) + "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + num(f.px(t)) + "\" y=\"" + num(yb + 18) + "\" text-anchor=\"middle\">" + num(t) +
             "</text>\n";
    }
}

void y_tick(std::string& s, const Frame& f, double value_in_axis_units, const std::string& label) {
    const double y = f.height - f.bottom -
                     (value_in_axis_units - f.y0) / (f.y1 - f.y0) * (f.height - f.top - f.bottom);
    s += "<line x1=\"" + num(f.left - 5) + "\" y1=\"" + num(y) + "\" x2=\"" + num(f.left) + "\" y2=\"" + num(y) +
         "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + num(f.left - 8) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" + label + "</text>\n";
}

void legend(std::string& s, const Frame& f, const std::vector<std::string>& names) {
    s += "<g class=\"legend\">\n";
    for (std::size_t i = 0; i < names.size(); ++i) {
        const double y = f.top + 10 + 20.0 * static_cast<double>(i);
        const double x = f.width - f.right + 15;
        s += "<rect x=\"" + num(x) + "\" y=\"" + num(y - 8) + "\" width=\"14\" height=\"10\" fill=\"" +
             kPalette[i % std::size(kPalette)] + "\"/>\n";
        s += "<text x=\"" + num(x + 20) + "\" y=\"" + num(y + 1) + "\">" + escape(names[i]) + "</text>\n";
    }
    s += "</g>\n";
}

}  // namespace

std::vector<CurveRow> parse_learning_curve(std::string_view csv) {
    const Table t = read_table(csv);
    const auto c_method = t.column("method"), c_seed = t.column("seed"), c_step = t.column("step"),
               c_mean = t.column("eval_final_mae_mean"), c_std = t.column("eval_final_mae_std");
    std::vector<CurveRow> rows;
    for (const auto& [line, cells] : t.rows) {
        CurveRow r;
        r.method = cells[c_method];
        if (r.method.empty()) throw FormatError("row at line " + std::to_string(line) + ": empty method");
        r.seed = parse_number<std::uint64_t>(cells[c_seed], line, "seed");
        r.step = parse_number<std::uint64_t>(cells[c_step], line, "step");
        r.final_mae_mean = parse_number<double>(cells[c_mean], line, "eval_final_mae_mean");
        r.final_mae_std = parse_number<double>(cells[c_std], line, "eval_final_mae_std");
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<SummaryRow> parse_summary(std::string_view csv) {
    const Table t = read_table(csv);
    const auto c_method = t.column("method"), c_alpha = t.column("alpha"), c_budget = t.column("budget"),
               c_agents = t.column("n_agents"), c_mean = t.column("final_mae_mean"), c_lo = t.column("ci95_low"),
               c_hi = t.column("ci95_high"), c_n = t.column("n_seeds");
    std::vector<SummaryRow> rows;
    for (const auto& [line, cells] : t.rows) {
        SummaryRow r;
        r.method = cells[c_method];
        r.alpha = parse_number<double>(cells[c_alpha], line, "alpha");
        r.budget = parse_number<double>(cells[c_budget], line, "budget");
        r.n_agents = parse_number<int>(cells[c_agents], line, "n_agents");
        r.final_mae_mean = parse_number<double>(cells[c_mean], line, "final_mae_mean");
        r.ci95_low = parse_number<double>(cells[c_lo], line, "ci95_low");
        r.ci95_high = parse_number<double>(cells[c_hi], line, "ci95_high");
        r.n_seeds = parse_number<int>(cells[c_n], line, "n_seeds");
        rows.push_back(std::move(r));
    }
    return rows;
}

std::map<std::string, std::vector<BandPoint>> aggregate_bands(const std::vector<CurveRow>& rows) {
    std::map<std::string, std::map<std::uint64_t, std::vector<const CurveRow*>>> grouped;
    for (const auto& r : rows) grouped[r.method][r.step].push_back(&r);
    std::map<std::string, std::vector<BandPoint>> out;
    for (const auto& [method, by_step] : grouped) {
        auto& band = out[method];
        for (const auto& [step, rs] : by_step) {
            double m = 0.0, second = 0.0;
            for (const auto* r : rs) {
                m += r->final_mae_mean;
                second += r->final_mae_std * r->final_mae_std + r->final_mae_mean * r->final_mae_mean;
            }
            const double k = static_cast<double>(rs.size());
            m /= k;
            band.push_back(BandPoint{step, m, std::sqrt(std::max(0.0, second / k - m * m))});
        }
    }
    return out;
}

std::string learning_curve_svg(const std::vector<CurveRow>& rows) {
    const auto bands = aggregate_bands(rows);
    Frame f;
    double xmax = 0.0, ymax = 0.0;
    for (const auto& [method, band] : bands) {
        for (const auto& p : band) {
            xmax = std::max(xmax, static_cast<double>(p.step));
            ymax = std::max(ymax, p.mean + p.std);
        }
    }
    f.x1 = xmax > 0 ? xmax : 1.0;
    f.y1 = ymax > 0 ? ymax * 1.05 : 1.0;
    std::string s = open_svg(f, "Evaluation MAE during training (mean ± std)", "training step", "final MAE (ppm)");
    x_ticks(s, f, nice_ticks(f.x0, f.x1));
    for (double t : nice_ticks(f.y0, f.y1)) y_tick(s, f, t, num(t));

    std::vector<std::string> names;
    std::size_t i = 0;
    for (const auto& [method, band] : bands) {
        const char* color = kPalette[i++ % std::size(kPalette)];
        names.push_back(method);
        std::string upper, lower, line;
        for (const auto& p : band) {
            const double x = f.px(static_cast<double>(p.step));
            upper += num(x, 6) + "," + num(f.py(p.mean + p.std), 6) + " ";
            line += num(x, 6) + "," + num(f.py(p.mean), 6) + " ";
        }
        for (auto it = band.rbegin(); it != band.rend(); ++it) {
            lower += num(f.px(static_cast<double>(it->step)), 6) + "," +
                     num(f.py(std::max(0.0, it->mean - it->std)), 6) + " ";
        }
        s += "<g class=\"series\" data-method=\"" + escape(method) + "\">\n";
        s += "<polygon class=\"band\" points=\"" + upper + lower + "\" fill=\"" + color +
             "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
        s += "<polyline class=\"mean\" points=\"" + line + "\" fill=\"none\" stroke=\"" + color +
             "\" stroke-width=\"2\"/>\n";
        s += "</g>\n";
    }
    legend(s, f, names);
    s += "</svg>\n";
    return s;
}

std::string budget_svg(const std::vector<SummaryRow>& rows) {
    for (const auto& r : rows) {
        if (!(r.final_mae_mean > 0.0)) {
            throw InvalidArgument("log-scale MAE axis cannot show non-positive value " + num(r.final_mae_mean) +
                                  " (method " + r.method + ", budget " + num(r.budget) + ")");
        }
    }
    using Key = std::tuple<std::string, double, int>;
    std::map<Key, std::vector<std::pair<double, double>>> series;
    for (const auto& r : rows) series[{r.method, r.alpha, r.n_agents}].emplace_back(r.budget, r.final_mae_mean);

    Frame f;
    f.log_y = true;
    double xmin = 0.0, xmax = 1.0, lo = 0.0, hi = 1.0;
    if (!rows.empty()) {
        xmin = xmax = rows.front().budget;
        lo = hi = std::log10(rows.front().final_mae_mean);
        for (const auto& r : rows) {
            xmin = std::min(xmin, r.budget);
            xmax = std::max(xmax, r.budget);
            lo = std::min(lo, std::log10(r.final_mae_mean));
            hi = std::max(hi, std::log10(r.final_mae_mean));
        }
        if (xmax == xmin) {
            xmin -= 1.0;
            xmax += 1.0;
        }
        lo = std::floor(lo);
        hi = std::max(std::ceil(hi), lo + 1.0);
    }
    f.x0 = xmin;
    f.x1 = xmax;
    f.y0 = lo;
    f.y1 = hi;
    std::string s = open_svg(f, "Final MAE against budget", "budget (m)", "final MAE (ppm, log scale)");
    x_ticks(s, f, nice_ticks(f.x0, f.x1));
    for (double d = lo; d <= hi + 1e-9; d += 1.0) y_tick(s, f, d, num(std::pow(10.0, d)));

    std::vector<std::string> names;
    std::size_t i = 0;
    for (auto& [key, pts] : series) {
        std::sort(pts.begin(), pts.end());
        const char* color = kPalette[i++ % std::size(kPalette)];
        const auto& [method, alpha, agents] = key;
        names.push_back(method + " α=" + num(alpha) + " N=" + std::to_string(agents));
        std::string line;
        s += "<g class=\"series\" data-method=\"" + escape(method) + "\">\n";
        for (const auto& [b, m] : pts) {
            line += num(f.px(b), 6) + "," + num(f.py(m), 6) + " ";
            s += "<circle cx=\"" + num(f.px(b), 6) + "\" cy=\"" + num(f.py(m), 6) + "\" r=\"3\" fill=\"" + color +
                 "\"/>\n";
        }
        s += "<polyline class=\"mean\" points=\"" + line + "\" fill=\"none\" stroke=\"" + color +
             "\" stroke-width=\"2\"/>\n";
        s += "</g>\n";
    }
    legend(s, f, names);
    s += "</svg>\n";
    return s;
}

std::string summary_markdown(const std::vector<SummaryRow>& rows) {
    std::string md = "Final MAE (ppm), mean over seeds with two-sided 95% Student-t interval.\n\n";
    md += "| method | alpha | budget (m) | agents | final MAE | 95% CI | seeds |\n";
    md += "|---|---|---|---|---|---|---|\n";
    for (const auto& r : rows) {
        md += "| " + r.method + " | " + num(r.alpha) + " | " + num(r.budget) + " | " + std::to_string(r.n_agents) +
              " | " + num(r.final_mae_mean) + " | [" + num(r.ci95_low) + ", " + num(r.ci95_high) + "] | " +
              std::to_string(r.n_seeds) + " |\n";
    }
    return md;
}

}  // namespace plume_scout::report
