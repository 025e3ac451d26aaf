#include <fstream>
#include <sstream>

#include "cdma/errors.hpp"
#include "cdma/signatures.hpp"

namespace cdma {

namespace {

// next line that is neither blank nor a '#' comment
bool next_content_line(std::istream& in, std::string& line) {
    while (std::getline(in, line)) {
        const auto pos = line.find_first_not_of(" \t\r");
        if (pos == std::string::npos || line[pos] == '#') continue;
        return true;
    }
    return false;
}

}  // namespace

SignatureMatrix load_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open matrix file: " + path);

    std::string line;
    if (!next_content_line(in, line)) throw ParseError(path + ": missing header line");
    std::istringstream header(line);
    long m = 0, n = 0;
    if (!(header >> m >> n) || m < 1 || n < 1)
        throw ParseError(path + ": header must be two positive integers 'm n'");
    std::string junk;
    if (header >> junk) throw ParseError(path + ": trailing tokens in header");

    Eigen::MatrixXd a(m, n);
    for (long i = 0; i < m; ++i) {
        if (!next_content_line(in, line))
            throw DimensionMismatch(path + ": expected " + std::to_string(m) + " rows, got " +
                                    std::to_string(i));
        std::istringstream row(line);
        for (long j = 0; j < n; ++j) {
            if (!(row >> a(i, j)))
                throw DimensionMismatch(path + ": row " + std::to_string(i + 1) + " has fewer than " +
                                        std::to_string(n) + " entries");
        }
        if (row >> junk)
            throw DimensionMismatch(path + ": row " + std::to_string(i + 1) + " has more than " +
                                    std::to_string(n) + " entries");
    }
    return SignatureMatrix{std::move(a)};
}

void save_matrix(const SignatureMatrix& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open file for writing: " + path);
    out.precision(17);
    out << s.chips() << ' ' << s.users() << '\n';
    for (int i = 0; i < s.chips(); ++i) {
        for (int j = 0; j < s.users(); ++j) {
            if (j) out << ' ';
            out << s.entries(i, j);
        }
        out << '\n';
    }
    if (!out) throw ParseError("write failed: " + path);
}

}  // namespace cdma
