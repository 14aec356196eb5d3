#include "lhalf/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace lhalf {
namespace {

[[noreturn]] void fail(std::string_view source, std::size_t line, std::size_t col,
                       const std::string& msg) {
    std::ostringstream os;
    os << source << ":" << line << ":" << col << ": " << msg;
    throw ParseError(os.str());
}

bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\r'; }

}  // namespace

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

DenseMatrix parse_matrix_csv(std::string_view text, std::string_view source) {
    std::vector<double> data;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        ++line_no;
        pos = eol + 1;

        bool blank = true;
        for (char c : line) blank = blank && is_blank(c);
        if (blank) {
            // Only trailing blank lines are tolerated.
            for (std::size_t rest = pos; rest < text.size(); ++rest) {
                if (!is_blank(text[rest]) && text[rest] != '\n')
                    fail(source, line_no, 1, "blank line inside data");
            }
            break;
        }

        std::size_t fields = 0;
        std::size_t fpos = 0;
        while (true) {
            std::size_t comma = line.find(',', fpos);
            const std::size_t fend = comma == std::string_view::npos ? line.size() : comma;
            std::size_t b = fpos;
            std::size_t e = fend;
            while (b < e && is_blank(line[b])) ++b;
            while (e > b && is_blank(line[e - 1])) --e;
            if (b == e) fail(source, line_no, fpos + 1, "empty field");
            double v = 0.0;
            const char* first = line.data() + b;
            const char* last = line.data() + e;
            auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec != std::errc() || ptr != last)
                fail(source, line_no, b + 1,
                     "cannot parse '" + std::string(first, last) + "' as a number");
            if (!std::isfinite(v)) fail(source, line_no, b + 1, "non-finite value");
            data.push_back(v);
            ++fields;
            if (comma == std::string_view::npos) break;
            fpos = comma + 1;
        }
        if (rows == 0) {
            cols = fields;
        } else if (fields != cols) {
            fail(source, line_no, 1,
                 "expected " + std::to_string(cols) + " fields, found " + std::to_string(fields));
        }
        ++rows;
    }
    if (rows == 0) fail(source, 1, 1, "no data");
    return DenseMatrix(rows, cols, std::move(data));
}

DenseVector parse_vector_csv(std::string_view text, std::string_view source) {
    DenseMatrix m = parse_matrix_csv(text, source);
    if (m.cols() != 1 && m.rows() != 1) {
        std::ostringstream os;
        os << source << ":1:1: expected a single column or a single row, found " << m.shape();
        throw ParseError(os.str());
    }
    auto e = m.entries();
    return DenseVector(std::vector<double>(e.begin(), e.end()));
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

DenseMatrix read_matrix_csv(const std::filesystem::path& path) {
    return parse_matrix_csv(read_text_file(path), path.string());
}

DenseVector read_vector_csv(const std::filesystem::path& path) {
    return parse_vector_csv(read_text_file(path), path.string());
}

void write_matrix_csv(const std::filesystem::path& path, const DenseMatrix& m) {
    std::string out;
    out.reserve(m.rows() * m.cols() * 24);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += format_number(m(i, j));
        }
        out += '\n';
    }
    write_text_file(path, out);
}

void write_vector_csv(const std::filesystem::path& path, const DenseVector& v) {
    std::string out;
    out.reserve(v.size() * 24);
    for (double x : v) {
        out += format_number(x);
        out += '\n';
    }
    write_text_file(path, out);
}

}  // namespace lhalf
