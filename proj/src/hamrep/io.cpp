#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <regex>
#include <sstream>

#include "eft/errors.hpp"
#include "eft/hamrep.hpp"

namespace eft::hamrep {

namespace {

double read_number(std::string text, int line) {
    std::replace(text.begin(), text.end(), 'D', 'E');
    std::replace(text.begin(), text.end(), 'd', 'e');
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(v))
        throw ParseError("cannot read number '" + text + "'", line);
    return v;
}

std::string upper(std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

using Quad = std::array<int, 4>;

Quad canonical(int p, int q, int r, int s) {
    if (p < q) std::swap(p, q);
    if (r < s) std::swap(r, s);
    if (std::make_pair(p, q) < std::make_pair(r, s)) {
        std::swap(p, r);
        std::swap(q, s);
    }
    return {p, q, r, s};
}

std::vector<double> split_csv_numbers(const std::string& text, int line) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(read_number(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1), line));
    }
    return out;
}

}  // namespace

IntegralTensors parse_integrals(std::istream& in, std::vector<std::string>* warnings) {
    std::string raw, header;
    int line = 0;
    bool in_header = false, header_done = false;
    while (!header_done && std::getline(in, raw)) {
        ++line;
        const std::string up = upper(raw);
        if (!in_header) {
            if (up.find_first_not_of(" \t\r") == std::string::npos) continue;
            if (up.find("&FCI") == std::string::npos) throw ParseError("expected '&FCI' header", line);
            in_header = true;
        }
        header += up + " ";
        const auto slash = up.find('/');
        if (slash != std::string::npos || up.find("&END") != std::string::npos) header_done = true;
    }
    if (!header_done) throw ParseError("unterminated or missing &FCI header", line);

    auto field = [&](const char* name) {
        std::smatch m;
        if (!std::regex_search(header, m, std::regex(std::string(name) + R"(\s*=\s*(\d+))")))
            throw ParseError(std::string("header lacks ") + name, 1);
        return std::stoi(m[1]);
    };
    const int n = field("NORB");
    const int nelec = field("NELEC");
    if (n < 1) throw ParseError("NORB must be positive", 1);

    IntegralTensors t(n, nelec);
    std::map<Quad, std::vector<double>> two;
    std::map<std::pair<int, int>, std::vector<double>> one;
    while (std::getline(in, raw)) {
        ++line;
        std::istringstream row(raw);
        std::vector<std::string> tok;
        for (std::string s; row >> s;) tok.push_back(s);
        if (tok.empty()) continue;
        if (tok.size() != 5) throw ParseError("expected 'value p q r s'", line);
        const double v = read_number(tok[0], line);
        int idx[4];
        for (int k = 0; k < 4; ++k) {
            const double x = read_number(tok[k + 1], line);
            if (x != std::floor(x) || x < 0 || x > n)
                throw ParseError("orbital index " + tok[k + 1] + " out of range 0.." + std::to_string(n), line);
            idx[k] = static_cast<int>(x);
        }
        const auto [p, q, r, s] = idx;
        if (p && q && r && s) {
            two[canonical(p - 1, q - 1, r - 1, s - 1)].push_back(v);
        } else if (p && q && !r && !s) {
            one[{std::max(p, q) - 1, std::min(p, q) - 1}].push_back(v);
        } else if (!p && !q && !r && !s) {
            t.e_nuc = v;
        } else if (p && !q && !r && !s) {
            continue;  // orbital energy, not needed
        } else {
            throw ParseError("unsupported index pattern", line);
        }
    }

    auto settle = [&](const std::vector<double>& vals, const std::string& what) {
        const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
        if (*hi - *lo > 1e-8 && warnings)
            warnings->push_back("symmetry partners of " + what + " disagree by " + std::to_string(*hi - *lo) +
                                "; averaged");
        double sum = 0.0;
        for (double x : vals) sum += x;
        return sum / static_cast<double>(vals.size());
    };
    for (const auto& [key, vals] : two) {
        const auto [p, q, r, s] = key;
        const double v = settle(vals, "g(" + std::to_string(p + 1) + std::to_string(q + 1) + "|" +
                                          std::to_string(r + 1) + std::to_string(s + 1) + ")");
        for (auto [a, b, c, d] : {Quad{p, q, r, s}, Quad{q, p, r, s}, Quad{p, q, s, r}, Quad{q, p, s, r},
                                  Quad{r, s, p, q}, Quad{s, r, p, q}, Quad{r, s, q, p}, Quad{s, r, q, p}})
            t.at(a, b, c, d) = v;
    }
    for (const auto& [key, vals] : one) {
        const double v = settle(vals, "h(" + std::to_string(key.first + 1) + "," + std::to_string(key.second + 1) + ")");
        t.h(key.first, key.second) = t.h(key.second, key.first) = v;
    }
    return t;
}

IntegralTensors load_integrals(const std::string& path, std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open integral file " + path);
    return parse_integrals(in, warnings);
}

void write_integrals(std::ostream& out, const IntegralTensors& t) {
    const int n = t.n;
    out << "&FCI NORB=" << n << ",NELEC=" << t.n_electrons << ",\n/\n" << std::setprecision(17);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q <= p; ++q)
            for (int r = 0; r < n; ++r)
                for (int s = 0; s <= r; ++s) {
                    if (std::make_pair(p, q) < std::make_pair(r, s)) continue;
                    const double v = t.at(p, q, r, s);
                    if (v != 0.0) out << v << ' ' << p + 1 << ' ' << q + 1 << ' ' << r + 1 << ' ' << s + 1 << '\n';
                }
    for (int p = 0; p < n; ++p)
        for (int q = 0; q <= p; ++q)
            if (t.h(p, q) != 0.0) out << t.h(p, q) << ' ' << p + 1 << ' ' << q + 1 << " 0 0\n";
    out << t.e_nuc << " 0 0 0 0\n";
}

ThcFactors parse_thc(std::istream& in) {
    int line = 0;
    auto next = [&](std::string& s) {
        while (std::getline(in, s)) {
            ++line;
            if (s.find_first_not_of(" \t\r") != std::string::npos) return true;
        }
        return false;
    };
    auto block = [&](const std::string& name) {
        std::string s;
        if (!next(s)) throw ParseError("missing " + name + " block", line);
        std::stringstream ss(s);
        std::string tag, rows_s, cols_s;
        std::getline(ss, tag, ',');
        std::getline(ss, rows_s, ',');
        std::getline(ss, cols_s, ',');
        if (tag != name) throw ParseError("expected '" + name + ",rows,cols' header", line);
        const double rows = read_number(rows_s, line), cols = read_number(cols_s, line);
        if (rows < 1 || cols < 1 || rows != std::floor(rows) || cols != std::floor(cols))
            throw ParseError("bad block dimensions", line);
        Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
        for (std::size_t i = 0; i < m.rows(); ++i) {
            if (!next(s)) throw ParseError(name + " block ends early", line);
            const auto vals = split_csv_numbers(s, line);
            if (vals.size() != m.cols()) throw ParseError(name + " row has the wrong length", line);
            for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = vals[j];
        }
        return m;
    };
    ThcFactors f;
    f.chi = block("chi");
    f.zeta = block("zeta");
    check_thc(f);
    return f;
}

ThcFactors load_thc(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open THC factor file " + path);
    return parse_thc(in);
}

void write_thc(std::ostream& out, const ThcFactors& f) {
    out << std::setprecision(17);
    auto block = [&](const char* name, const Matrix& m) {
        out << name << ',' << m.rows() << ',' << m.cols() << '\n';
        for (std::size_t i = 0; i < m.rows(); ++i) {
            for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
            out << '\n';
        }
    };
    block("chi", f.chi);
    block("zeta", f.zeta);
}

void write_df_csv(std::ostream& out, const DfFactors& f) {
    if (f.leaves.empty()) return;
    const std::size_t n = f.leaves.front().w.size();
    out << "leaf,sign,eigenvalue,k,W";
    for (std::size_t p = 0; p < n; ++p) out << ",U_" << p;
    out << '\n' << std::setprecision(17);
    for (std::size_t t = 0; t < f.leaves.size(); ++t) {
        const auto& leaf = f.leaves[t];
        for (std::size_t k = 0; k < n; ++k) {
            out << t << ',' << leaf.sign << ',' << leaf.eigenvalue << ',' << k << ',' << leaf.w[k];
            for (std::size_t p = 0; p < n; ++p) out << ',' << leaf.u(p, k);
            out << '\n';
        }
    }
}

}  // namespace eft::hamrep
