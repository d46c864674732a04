#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <regex>
#include <sstream>

#include "eft/errors.hpp"
#include "eft/spectrum.hpp"

namespace eft::spectrum {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text, int line, const std::string& what) {
    const std::string t = trim(text);
    if (t.empty()) throw ParseError("empty " + what, line);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v))
        throw ParseError("cannot read " + what + " from '" + t + "'", line);
    return v;
}

bool parse_bool(const std::string& text, int line) {
    const std::string t = trim(text);
    if (t == "true" || t == "1") return true;
    if (t == "false" || t == "0") return false;
    throw ParseError("expected true or false, got '" + t + "'", line);
}

}  // namespace

Spectrum parse_spectrum(std::istream& in, const std::string& source) {
    double shift = 0.0, scale = 1.0;
    bool normalized = true;
    std::vector<double> values, weights;

    static const std::regex pair_re(R"(\(\s*([^,()]+?)\s*,\s*([^,()]+?)\s*\))");
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string text = trim(raw);
        if (text.empty()) continue;
        if (text[0] == '#') {
            const auto eq = text.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = trim(text.substr(1, eq - 1));
            const std::string val = text.substr(eq + 1);
            if (key == "shift_hartree") shift = parse_double(val, line, "shift");
            else if (key == "scale_hartree") scale = parse_double(val, line, "scale");
            else if (key == "normalized") normalized = parse_bool(val, line);
            continue;
        }
        if (text.find('(') != std::string::npos) {
            std::size_t consumed = 0;
            for (auto it = std::sregex_iterator(text.begin(), text.end(), pair_re); it != std::sregex_iterator(); ++it) {
                values.push_back(parse_double((*it)[1], line, "eigenvalue"));
                weights.push_back(parse_double((*it)[2], line, "weight"));
                consumed += it->length();
            }
            std::string rest = std::regex_replace(text, pair_re, "");
            rest.erase(std::remove_if(rest.begin(), rest.end(), [](char c) { return c == ',' || c == ' ' || c == '\t'; }),
                       rest.end());
            if (consumed == 0 || !rest.empty()) throw ParseError("malformed (value, weight) row", line);
            continue;
        }
        const auto comma = text.find(',');
        if (comma == std::string::npos || text.find(',', comma + 1) != std::string::npos)
            throw ParseError("expected 'value,weight'", line);
        values.push_back(parse_double(text.substr(0, comma), line, "eigenvalue"));
        weights.push_back(parse_double(text.substr(comma + 1), line, "weight"));
    }

    if (values.empty()) throw ValidationError(source + ": no spectrum rows");
    if (!(scale > 0.0)) throw ValidationError(source + ": scale_hartree must be positive");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw ValidationError(source + ": negative weight");
        total += w;
    }
    if (total < 0.99 || total > 1.01) {
        std::ostringstream msg;
        msg << source << ": weights sum to " << total << ", outside [0.99, 1.01]";
        throw ValidationError(msg.str());
    }
    for (double& w : weights) w /= total;
    if (!normalized)
        for (double& v : values) v = (v - shift) / scale;
    // Renormalization may leave the sum a few ulps away from 1.
    double fixed = 0.0;
    for (double w : weights) fixed += w;
    weights.back() += 1.0 - fixed;
    if (weights.back() < 0.0) weights.back() = 0.0;
    return make_spectrum(values, weights, {shift, scale, false}, source);
}

Spectrum load_spectrum(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open spectrum file " + path);
    return parse_spectrum(in, path);
}

void write_spectrum(std::ostream& out, const Spectrum& s) {
    out << std::setprecision(17);
    if (s.transform.flipped) {
        out << "# shift_hartree=" << s.transform.shift << "\n# scale_hartree=" << s.transform.scale
            << "\n# normalized=true\n";
        for (std::size_t i = s.size(); i-- > 0;) out << 0.5 - s.values[i] << ',' << s.weights[i] << '\n';
        return;
    }
    out << "# shift_hartree=" << s.transform.shift << "\n# scale_hartree=" << s.transform.scale
        << "\n# normalized=true\n";
    for (std::size_t i = 0; i < s.size(); ++i) out << s.values[i] << ',' << s.weights[i] << '\n';
}

void write_moment_csv(std::ostream& out, const MomentTable& t) {
    out << "degree,value,shots,is_exact\n" << std::setprecision(17);
    for (const auto& [k, e] : t.entries) out << k << ',' << e.value << ',' << e.shots << ',' << (e.is_exact ? 1 : 0) << '\n';
}

MomentTable read_moment_csv(std::istream& in) {
    MomentTable t;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string text = trim(raw);
        if (text.empty()) continue;
        if (line == 1 && text == "degree,value,shots,is_exact") continue;
        std::vector<std::string> f;
        std::stringstream ss(text);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 4) throw ParseError("expected 4 moment columns", line);
        const double degree = parse_double(f[0], line, "degree");
        if (degree < 0 || degree != std::floor(degree)) throw ParseError("degree must be a non-negative integer", line);
        const double shots = parse_double(f[2], line, "shots");
        if (shots < 0 || shots != std::floor(shots)) throw ParseError("shots must be a non-negative integer", line);
        MomentEntry e;
        e.value = parse_double(f[1], line, "value");
        e.shots = static_cast<std::int64_t>(shots);
        e.is_exact = parse_bool(f[3], line);
        const auto k = static_cast<long long>(degree);
        t.entries[k] = e;
        t.max_degree = std::max(t.max_degree, k);
    }
    return t;
}

}  // namespace eft::spectrum
