#include "termfpca/yield_data.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <regex>
#include <set>

#include "termfpca/errors.hpp"

namespace termfpca {

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

Eigen::VectorXd YieldPanel::rescaled_abscissae() const {
    const double lo = tau_low(), hi = tau_high();
    Eigen::VectorXd x(maturities.size());
    for (std::size_t j = 0; j < maturities.size(); ++j)
        x(static_cast<Eigen::Index>(j)) = (maturities[j] - lo) / (hi - lo);
    return x;
}

namespace {

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

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\"");
    auto e = s.find_last_not_of(" \t\"");
    if (b == std::string::npos) return {};
    return s.substr(b, e - b + 1);
}

bool is_missing(const std::string& cell) {
    const std::string t = trim(cell);
    return t.empty() || t == "NA" || t == "na" || t == "NaN" || t == "ND";
}

std::optional<int> parse_int(const std::string& s) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

// ISO-8601 (YYYY-MM-DD) or M/D/YYYY.
std::optional<Date> parse_date(const std::string& raw) {
    const std::string s = trim(raw);
    char sep = 0;
    if (s.find('-') != std::string::npos) sep = '-';
    else if (s.find('/') != std::string::npos) sep = '/';
    else return std::nullopt;

    std::vector<std::string> parts;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    parts.push_back(cur);
    if (parts.size() != 3) return std::nullopt;

    auto a = parse_int(parts[0]), b = parse_int(parts[1]), c = parse_int(parts[2]);
    if (!a || !b || !c) return std::nullopt;
    Date d;
    if (sep == '-') {
        d = {*a, *b, *c};
    } else {
        d = {*c, *a, *b};  // M/D/YYYY
    }
    if (d.year < 1000 || d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31)
        return std::nullopt;
    return d;
}

std::optional<double> parse_double(const std::string& s) {
    const std::string t = trim(s);
    double v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size()) return std::nullopt;
    return v;
}

// Trailing digits of a column name, interpreted as maturity in years.
std::optional<double> maturity_from_name(const std::string& name) {
    auto e = name.find_last_of("0123456789");
    if (e == std::string::npos) return std::nullopt;
    auto b = e;
    while (b > 0 && std::isdigit(static_cast<unsigned char>(name[b - 1]))) --b;
    auto v = parse_int(name.substr(b, e - b + 1));
    if (!v) return std::nullopt;
    return static_cast<double>(*v);
}

std::string shortest_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

}  // namespace

YieldPanel load_panel(std::istream& source, const std::vector<std::string>& maturity_columns) {
    static const std::regex kDefaultPattern("^SVENY[0-9]+$");

    // Locate the header: some published files carry preamble lines before it.
    std::string line;
    std::vector<std::string> header;
    std::size_t line_no = 0;
    std::size_t header_line = 0;
    while (std::getline(source, line)) {
        ++line_no;
        auto fields = split_csv_line(line);
        std::size_t hits = 0;
        for (const auto& f : fields) {
            const std::string name = trim(f);
            if (!maturity_columns.empty()) {
                if (std::find(maturity_columns.begin(), maturity_columns.end(), name) !=
                    maturity_columns.end())
                    ++hits;
            } else if (std::regex_match(name, kDefaultPattern)) {
                ++hits;
            }
        }
        if (hits >= 4) {
            header = fields;
            for (auto& f : header) f = trim(f);
            header_line = line_no;
            break;
        }
        if (line_no > 200) break;
    }
    if (header.empty())
        throw_input("schema error: no header row with at least 4 maturity columns found");

    // Column selection: maturity columns plus the date column.
    struct MatCol {
        std::size_t index;
        double maturity;
    };
    std::vector<MatCol> mats;
    std::vector<bool> is_maturity(header.size(), false);
    if (!maturity_columns.empty()) {
        for (const auto& want : maturity_columns) {
            auto it = std::find(header.begin(), header.end(), want);
            if (it == header.end())
                throw_input("schema error: maturity column '" + want + "' not in header");
            auto m = maturity_from_name(want);
            if (!m)
                throw_input("schema error: maturity column '" + want +
                            "' does not encode a maturity in years");
            const auto idx = static_cast<std::size_t>(it - header.begin());
            mats.push_back({idx, *m});
            is_maturity[idx] = true;
        }
    } else {
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (std::regex_match(header[j], kDefaultPattern)) {
                mats.push_back({j, *maturity_from_name(header[j])});
                is_maturity[j] = true;
            }
        }
    }
    if (mats.size() < 4)
        throw_input("schema error: found " + std::to_string(mats.size()) +
                    " maturity columns, need at least 4");
    std::stable_sort(mats.begin(), mats.end(),
                     [](const MatCol& a, const MatCol& b) { return a.maturity < b.maturity; });
    for (std::size_t j = 1; j < mats.size(); ++j)
        if (!(mats[j].maturity > mats[j - 1].maturity))
            throw_input("schema error: maturities not strictly increasing across columns");

    struct Row {
        Date date;
        std::vector<double> vals;
    };
    std::vector<Row> rows;
    std::size_t dropped = 0;
    std::optional<std::size_t> date_col;

    while (std::getline(source, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() < header.size())
            throw_input("parse error at line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));

        if (!date_col) {
            for (std::size_t j = 0; j < header.size(); ++j) {
                if (is_maturity[j]) continue;
                if (parse_date(fields[j])) {
                    date_col = j;
                    break;
                }
            }
            if (!date_col)
                throw_input("parse error at line " + std::to_string(line_no) +
                            ": no column parses as a date");
        }

        auto d = parse_date(fields[*date_col]);
        if (!d)
            throw_input("parse error at line " + std::to_string(line_no) + ": bad date '" +
                        trim(fields[*date_col]) + "'");

        Row r;
        r.date = *d;
        r.vals.reserve(mats.size());
        bool missing = false;
        for (const auto& mc : mats) {
            const std::string& cell = fields[mc.index];
            if (is_missing(cell)) {
                missing = true;
                break;
            }
            auto v = parse_double(cell);
            if (!v)
                throw_input("parse error at line " + std::to_string(line_no) +
                            ": bad numeric value '" + trim(cell) + "'");
            r.vals.push_back(*v);
        }
        if (missing) {
            ++dropped;
            continue;
        }
        rows.push_back(std::move(r));
    }
    (void)header_line;

    if (rows.empty()) throw_input("empty-panel error: no rows without missing values");

    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.date < b.date; });

    YieldPanel panel;
    panel.dropped_rows = dropped;
    panel.maturities.reserve(mats.size());
    for (const auto& mc : mats) panel.maturities.push_back(mc.maturity);
    panel.dates.reserve(rows.size());
    panel.values.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(mats.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        panel.dates.push_back(rows[i].date);
        for (std::size_t j = 0; j < mats.size(); ++j)
            panel.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rows[i].vals[j];
    }
    return panel;
}

void serialize_panel(const YieldPanel& panel, std::ostream& out) {
    out << "Date";
    for (double m : panel.maturities) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "SVENY%02d", static_cast<int>(m));
        out << ',' << buf;
    }
    out << '\n';
    for (Eigen::Index i = 0; i < panel.rows(); ++i) {
        out << panel.dates[static_cast<std::size_t>(i)].to_string();
        for (Eigen::Index j = 0; j < panel.cols(); ++j)
            out << ',' << shortest_double(panel.values(i, j));
        out << '\n';
    }
}

RescaledGrid make_uniform_grid(int n_grid) {
    if (n_grid < 2) throw_input("argument error: n_grid must be at least 2");
    RescaledGrid g;
    g.points.resize(n_grid);
    g.weights.resize(n_grid);
    const double h = 1.0 / (n_grid - 1);
    for (int j = 0; j < n_grid; ++j) {
        g.points(j) = static_cast<double>(j) / (n_grid - 1);
        g.weights(j) = (j == 0 || j == n_grid - 1) ? h / 2.0 : h;
    }
    g.points(n_grid - 1) = 1.0;
    return g;
}

RescaledGrid rescale(const YieldPanel& panel, int n_grid) {
    if (panel.rows() == 0) throw_input("argument error: empty panel");
    return make_uniform_grid(n_grid);
}

YieldPanel slice_by_year(const YieldPanel& panel, int year) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < panel.rows(); ++i)
        if (panel.dates[static_cast<std::size_t>(i)].year == year) keep.push_back(i);
    if (keep.empty())
        throw_input("empty-slice error: no rows in year " + std::to_string(year));

    YieldPanel out;
    out.maturities = panel.maturities;
    out.dropped_rows = 0;
    out.values.resize(static_cast<Eigen::Index>(keep.size()), panel.cols());
    out.dates.reserve(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        out.dates.push_back(panel.dates[static_cast<std::size_t>(keep[i])]);
        out.values.row(static_cast<Eigen::Index>(i)) = panel.values.row(keep[i]);
    }
    return out;
}

std::vector<int> years_in_panel(const YieldPanel& panel) {
    std::set<int> ys;
    for (const auto& d : panel.dates) ys.insert(d.year);
    return {ys.begin(), ys.end()};
}

YieldPanel to_differences(const YieldPanel& panel) {
    if (panel.rows() < 2)
        throw_input("argument error: differencing needs at least 2 rows");
    YieldPanel out;
    out.maturities = panel.maturities;
    out.dates.assign(panel.dates.begin() + 1, panel.dates.end());
    out.values = panel.values.bottomRows(panel.rows() - 1) - panel.values.topRows(panel.rows() - 1);
    return out;
}

}  // namespace termfpca
