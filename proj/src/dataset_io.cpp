#include "shiftmatch/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace shiftmatch {

std::string format_shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general);
    return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& tok, const std::string& origin, std::size_t line_no) {
    double v = 0.0;
    const char* begin = tok.data();
    const char* end = tok.data() + tok.size();
    // from_chars does not accept "inf"; the dataset format never contains it.
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw DataError(origin + ":" + std::to_string(line_no) + ": cannot parse number '" + tok + "'");
    }
    return v;
}

}  // namespace

CsvTable read_csv_table(std::istream& in, const std::string& origin) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(origin + ": empty file");
    const std::vector<std::string> header = split_line(line);

    CsvTable table;
    std::vector<int> x_cols;     // column index per coordinate, -1 = missing
    int y_col = -1, label_col = -1, w_col = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& name = header[c];
        if (name.size() >= 2 && name[0] == 'x') {
            int idx = 0;
            const auto res = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
            if (res.ec == std::errc{} && res.ptr == name.data() + name.size() && idx >= 1) {
                if (static_cast<std::size_t>(idx) > x_cols.size()) x_cols.resize(static_cast<std::size_t>(idx), -1);
                x_cols[static_cast<std::size_t>(idx - 1)] = static_cast<int>(c);
                continue;
            }
        }
        if (name == "y") y_col = static_cast<int>(c);
        else if (name == "label") label_col = static_cast<int>(c);
        else if (name == "w") w_col = static_cast<int>(c);
        else throw DataError(origin + ": unknown column '" + name + "'");
    }
    if (x_cols.empty()) throw DataError(origin + ": no x columns");
    for (std::size_t j = 0; j < x_cols.size(); ++j) {
        if (x_cols[j] < 0) throw DataError(origin + ": missing column x" + std::to_string(j + 1));
    }
    table.d = static_cast<int>(x_cols.size());

    std::vector<std::vector<double>> rows;
    std::vector<double> ys, labels;
    std::vector<int> ws;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> toks = split_line(line);
        if (toks.size() != header.size()) {
            throw DataError(origin + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(toks.size()));
        }
        std::vector<double> row(static_cast<std::size_t>(table.d));
        for (int j = 0; j < table.d; ++j) {
            row[static_cast<std::size_t>(j)] =
                parse_double(toks[static_cast<std::size_t>(x_cols[static_cast<std::size_t>(j)])], origin, line_no);
            if (!std::isfinite(row[static_cast<std::size_t>(j)])) {
                throw DataError(origin + ":" + std::to_string(line_no) + ": non-finite coordinate");
            }
        }
        rows.push_back(std::move(row));
        if (y_col >= 0) ys.push_back(parse_double(toks[static_cast<std::size_t>(y_col)], origin, line_no));
        if (label_col >= 0) labels.push_back(parse_double(toks[static_cast<std::size_t>(label_col)], origin, line_no));
        if (w_col >= 0) {
            const double v = parse_double(toks[static_cast<std::size_t>(w_col)], origin, line_no);
            if (v != 0.0 && v != 1.0) {
                throw DataError(origin + ":" + std::to_string(line_no) + ": w must be 0 or 1");
            }
            ws.push_back(static_cast<int>(v));
        }
    }
    if (rows.empty()) throw DataError(origin + ": no data rows");
    table.x.resize(static_cast<Eigen::Index>(rows.size()), table.d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int j = 0; j < table.d; ++j) {
            table.x(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
        }
    }
    if (y_col >= 0) table.y = std::move(ys);
    if (label_col >= 0) table.label = std::move(labels);
    if (w_col >= 0) table.w = std::move(ws);
    return table;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return read_csv_table(in, path);
}

void write_sample_csv(const LabeledSample& sample, std::ostream& out) {
    const int d = sample.x.dim();
    for (int j = 1; j <= d; ++j) out << 'x' << j << ',';
    out << "y,label\n";
    for (int i = 0; i < sample.x.size(); ++i) {
        for (int j = 0; j < d; ++j) out << format_shortest(sample.x.rows(i, j)) << ',';
        out << format_shortest(sample.y[static_cast<std::size_t>(i)]) << ','
            << format_shortest(sample.label[static_cast<std::size_t>(i)]) << '\n';
    }
}

void write_sample_csv_file(const LabeledSample& sample, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    write_sample_csv(sample, out);
}

void write_weights_csv(const std::vector<double>& weights, std::ostream& out) {
    out << "index,weight\n";
    for (std::size_t i = 0; i < weights.size(); ++i) out << i << ',' << format_shortest(weights[i]) << '\n';
}

AtePanel panel_from_table(const CsvTable& table, Norm norm) {
    if (!table.w) throw DataError("panel CSV requires a w column");
    if (!table.y) throw DataError("panel CSV requires a y column");
    AtePanel panel;
    panel.x = PointSet{table.x, norm};
    panel.w = *table.w;
    panel.y = *table.y;
    panel.validate();
    return panel;
}

}  // namespace shiftmatch
