#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "eft/cli.hpp"
#include "eft/errors.hpp"
#include "eft/qksd.hpp"

namespace eft::cli {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kKnownKeys = {
    "mode",         "spectrum_path", "synthesis",   "K",           "dk",
    "policy",       "target_err",    "n_trials",    "seed",        "p_success",
    "output_dir",   "jobs",          "m_total",     "m_cap",       "epsilon",
    "flip_margin",  "redraw_per_query", "amplification_aware", "spe_runs", "beta_erf",
    "grid_points",  "delta_radians", "x_points",    "integrals_path", "thc_path",
    "representations", "n_df",       "bliss"};

const std::set<std::string> kRepresentations = {"pauli", "df", "thc", "pauli-bliss", "df-bliss", "thc-bliss"};

bool needs_spectrum(const std::string& m) {
    return m == "qksd-sweep" || m == "qksd-budget" || m == "spe-run" || m == "overlap-analysis" ||
           m == "compare" || m == "acdf-curve";
}

bool needs_k(const std::string& m) {
    return m == "qksd-sweep" || m == "qksd-budget" || m == "overlap-analysis" || m == "compare" ||
           m == "spe-bound-curve";
}

bool is_stochastic(const std::string& m, const Json& doc) {
    return m == "qksd-sweep" || m == "qksd-budget" || m == "spe-run" || m == "compare" ||
           (m == "acdf-curve" && doc.contains("m_total"));
}

std::string resolve(const std::string& path, const std::string& base) {
    fs::path p(path);
    return p.is_absolute() ? p.string() : (fs::path(base) / p).lexically_normal().string();
}

class Checker {
public:
    Checker(const Json& doc, std::vector<std::string>& out) : doc_(doc), out_(out) {}

    void fail(const std::string& msg) { out_.push_back(msg); }

    bool number(const std::string& key, double lo, double hi, bool lo_open = true) {
        if (!doc_.contains(key)) return false;
        const auto& v = doc_[key];
        if (!v.is_number()) {
            fail(key + ": expected a number");
            return false;
        }
        double x = v.get<double>();
        if (!std::isfinite(x) || (lo_open ? x <= lo : x < lo) || x > hi) {
            std::ostringstream m;
            m << key << ": " << x << " outside " << (lo_open ? "(" : "[") << lo << ", " << hi << "]";
            fail(m.str());
            return false;
        }
        return true;
    }

    bool integer(const std::string& key, long long lo) {
        if (!doc_.contains(key)) return false;
        const auto& v = doc_[key];
        if (!v.is_number_integer()) {
            fail(key + ": expected an integer");
            return false;
        }
        if (v.is_number_unsigned() ? false : v.get<long long>() < lo) {
            fail(key + ": must be >= " + std::to_string(lo));
            return false;
        }
        return true;
    }

    bool boolean(const std::string& key) {
        if (!doc_.contains(key)) return false;
        if (!doc_[key].is_boolean()) {
            fail(key + ": expected true or false");
            return false;
        }
        return true;
    }

    bool string(const std::string& key) {
        if (!doc_.contains(key)) return false;
        if (!doc_[key].is_string() || doc_[key].get<std::string>().empty()) {
            fail(key + ": expected a non-empty string");
            return false;
        }
        return true;
    }

    void int_list(const std::string& key, long long lo) {
        if (!doc_.contains(key)) return;
        const auto& v = doc_[key];
        if (!v.is_array() || v.empty()) return fail(key + ": expected a non-empty list of integers");
        for (const auto& e : v)
            if (!e.is_number_integer() || e.get<long long>() < lo || e.get<long long>() > (1LL << 30))
                return fail(key + ": every entry must be an integer >= " + std::to_string(lo));
    }

    void positive_list(const std::string& key) {
        if (!doc_.contains(key)) return;
        const auto& v = doc_[key];
        if (!v.is_array() || v.empty()) return fail(key + ": expected a non-empty list of numbers");
        for (const auto& e : v)
            if (!e.is_number() || !(e.get<double>() > 0.0) || !std::isfinite(e.get<double>()))
                return fail(key + ": every entry must be a positive number");
    }

    void require(const std::string& key, const std::string& mode) {
        if (!doc_.contains(key)) fail(key + ": required for mode " + mode);
    }

private:
    const Json& doc_;
    std::vector<std::string>& out_;
};

void check_synthesis(const Json& s, std::vector<std::string>& out) {
    if (!s.is_object()) return out.push_back("synthesis: expected an object");
    Checker c(s, out);
    const std::string kind = s.value("kind", std::string{});
    auto list = [&](const char* key, bool positive) {
        if (!s.contains(key) || !s[key].is_array() || s[key].empty())
            return out.push_back(std::string("synthesis.") + key + ": expected a non-empty list of numbers");
        for (const auto& e : s[key])
            if (!e.is_number() || (positive && !(e.get<double>() >= 0.0)))
                return out.push_back(std::string("synthesis.") + key + ": invalid entry");
    };
    if (kind == "exponential") {
        list("energies", false);
        if (!s.contains("p0")) out.push_back("synthesis.p0: required");
        if (!s.contains("alpha")) out.push_back("synthesis.alpha: required");
        c.number("p0", 0.0, 1.0 - 1e-15);
        c.number("alpha", 0.0, 1e300);
    } else if (kind == "explicit") {
        list("values", false);
        list("weights", true);
        if (s.contains("values") && s.contains("weights") && s["values"].size() != s["weights"].size())
            out.push_back("synthesis: values and weights differ in length");
    } else {
        out.push_back("synthesis.kind: expected \"exponential\" or \"explicit\"");
    }
    if (!s.contains("scale")) out.push_back("synthesis.scale: required (Hartree)");
    c.number("scale", 0.0, 1e300);
    if (s.contains("shift") && !s["shift"].is_number()) out.push_back("synthesis.shift: expected a number");
    for (const auto& [k, v] : s.items())
        if (k != "kind" && k != "energies" && k != "p0" && k != "alpha" && k != "values" && k != "weights" &&
            k != "shift" && k != "scale")
            out.push_back("synthesis." + k + ": unknown field");
}

}  // namespace

std::vector<std::string> validate(const Json& doc, const std::string& base_dir) {
    std::vector<std::string> out;
    if (!doc.is_object()) return {"config: expected a JSON object"};
    Checker c(doc, out);

    std::string mode;
    if (!doc.contains("mode") || !doc["mode"].is_string()) {
        out.push_back("mode: required");
    } else {
        mode = doc["mode"].get<std::string>();
        if (std::find(kModes.begin(), kModes.end(), mode) == kModes.end()) {
            std::string allowed;
            for (const auto& m : kModes) allowed += (allowed.empty() ? "" : ", ") + m;
            out.push_back("mode: unknown mode \"" + mode + "\"; allowed: " + allowed);
            mode.clear();
        }
    }
    for (const auto& [k, v] : doc.items())
        if (!kKnownKeys.count(k)) out.push_back(k + ": unknown field");

    c.string("output_dir");
    c.integer("jobs", 1);
    if (doc.contains("seed") && !(doc["seed"].is_number_unsigned() || (doc["seed"].is_number_integer() &&
                                                                      doc["seed"].get<long long>() >= 0)))
        out.push_back("seed: expected a non-negative integer");
    c.integer("n_trials", 1);
    c.number("p_success", 0.0, 1.0 - 1e-15);
    c.number("target_err", 0.0, 1e300);
    c.integer("m_total", 1);
    c.number("m_cap", 1.0, 1e18);
    c.number("epsilon", 0.0, 0.5 - 1e-15, false);
    c.number("flip_margin", 0.0, 1e3, false);
    c.boolean("redraw_per_query");
    c.boolean("amplification_aware");
    c.integer("spe_runs", 1);
    c.integer("grid_points", 2);
    c.integer("x_points", 2);
    c.number("delta_radians", 0.0, std::numbers::pi / 4 - 1e-15);
    c.int_list("K", 1);
    c.int_list("dk", 1);
    c.positive_list("beta_erf");
    c.integer("n_df", 1);

    if (doc.contains("policy")) {
        auto check_one = [&](const Json& p) {
            if (!p.is_string()) return out.push_back("policy: expected a string or list of strings");
            try {
                qksd::Policy::parse(p.get<std::string>());
            } catch (const Error& e) {
                out.push_back(std::string("policy: ") + e.what());
            }
        };
        if (doc["policy"].is_array()) {
            if (doc["policy"].empty()) out.push_back("policy: list is empty");
            for (const auto& p : doc["policy"]) check_one(p);
        } else {
            check_one(doc["policy"]);
        }
    }

    if (doc.contains("spectrum_path") && doc.contains("synthesis"))
        out.push_back("spectrum_path and synthesis are mutually exclusive");
    if (c.string("spectrum_path") && !fs::exists(resolve(doc["spectrum_path"].get<std::string>(), base_dir)))
        out.push_back("spectrum_path: file not found: " + doc["spectrum_path"].get<std::string>());
    if (doc.contains("synthesis")) check_synthesis(doc["synthesis"], out);
    for (const char* key : {"integrals_path", "thc_path"})
        if (c.string(key) && !fs::exists(resolve(doc[key].get<std::string>(), base_dir)))
            out.push_back(std::string(key) + ": file not found: " + doc[key].get<std::string>());
    if (doc.contains("representations")) {
        const auto& r = doc["representations"];
        if (!r.is_array() || r.empty()) {
            out.push_back("representations: expected a non-empty list");
        } else {
            for (const auto& e : r)
                if (!e.is_string() || !kRepresentations.count(e.get<std::string>()))
                    out.push_back("representations: unknown entry " + e.dump() +
                                  "; allowed: pauli, df, thc, pauli-bliss, df-bliss, thc-bliss");
        }
    }
    if (doc.contains("bliss")) {
        const auto& b = doc["bliss"];
        if (!b.is_object()) {
            out.push_back("bliss: expected an object with alpha1 and alpha2");
        } else {
            for (const auto& [k, v] : b.items())
                if ((k != "alpha1" && k != "alpha2") || !v.is_number())
                    out.push_back("bliss." + k + ": expected alpha1 or alpha2 as numbers");
        }
    }

    if (mode.empty()) return out;
    if (needs_spectrum(mode) && !doc.contains("spectrum_path") && !doc.contains("synthesis"))
        out.push_back("spectrum_path or synthesis: required for mode " + mode);
    if (needs_k(mode)) c.require("K", mode);
    if (is_stochastic(mode, doc)) c.require("seed", mode);
    if (mode == "qksd-sweep") c.require("m_total", mode);
    if (mode == "qksd-budget" || mode == "spe-run") c.require("target_err", mode);
    if (mode == "spe-bound-curve") c.require("beta_erf", mode);
    if (mode == "acdf-curve") c.require("delta_radians", mode);
    if (mode == "norms") c.require("integrals_path", mode);
    return out;
}

ExperimentConfig parse_config(const Json& doc, const std::string& base_dir) {
    auto problems = validate(doc, base_dir);
    if (!problems.empty()) {
        std::string msg = "invalid config:";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw ConfigError(msg);
    }
    ExperimentConfig c;
    c.raw = doc;
    c.mode = doc["mode"].get<std::string>();
    if (doc.contains("spectrum_path")) c.spectrum_path = resolve(doc["spectrum_path"].get<std::string>(), base_dir);
    if (doc.contains("synthesis")) {
        const auto& s = doc["synthesis"];
        Synthesis y;
        y.kind = s["kind"].get<std::string>();
        y.energies = s.value("energies", std::vector<double>{});
        y.p0 = s.value("p0", 0.5);
        y.alpha = s.value("alpha", 0.1);
        y.values = s.value("values", std::vector<double>{});
        y.weights = s.value("weights", std::vector<double>{});
        y.shift = s.value("shift", 0.0);
        y.scale = s["scale"].get<double>();
        c.synthesis = y;
    }
    c.K = doc.value("K", std::vector<int>{});
    c.dk = doc.value("dk", std::vector<int>{1});
    if (doc.contains("policy")) {
        if (doc["policy"].is_array())
            c.policies = doc["policy"].get<std::vector<std::string>>();
        else
            c.policies = {doc["policy"].get<std::string>()};
    } else {
        c.policies = {"threshold:1e-8"};
    }
    if (doc.contains("target_err")) c.target_err = doc["target_err"].get<double>();
    c.n_trials = doc.value("n_trials", 100);
    if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
    c.p_success = doc.value("p_success", 0.99);
    c.output_dir = doc.value("output_dir", std::string("out"));
    c.jobs = doc.value("jobs", 1u);
    if (doc.contains("m_total")) c.m_total = doc["m_total"].get<std::int64_t>();
    c.m_cap = doc.value("m_cap", 1e12);
    c.epsilon = doc.value("epsilon", 0.0);
    c.flip_margin = doc.value("flip_margin", 1e-3);
    c.redraw_per_query = doc.value("redraw_per_query", false);
    c.amplification_aware = doc.value("amplification_aware", false);
    c.spe_runs = doc.value("spe_runs", 1);
    c.beta_erf = doc.value("beta_erf", std::vector<double>{});
    c.grid_points = doc.value("grid_points", 100000);
    if (doc.contains("delta_radians")) c.delta_radians = doc["delta_radians"].get<double>();
    c.x_points = doc.value("x_points", 2001);
    if (doc.contains("integrals_path")) c.integrals_path = resolve(doc["integrals_path"].get<std::string>(), base_dir);
    if (doc.contains("thc_path")) c.thc_path = resolve(doc["thc_path"].get<std::string>(), base_dir);
    c.representations =
        doc.value("representations", std::vector<std::string>{"pauli", "df", "thc", "thc-bliss"});
    if (doc.contains("n_df")) c.n_df = doc["n_df"].get<int>();
    if (doc.contains("bliss")) {
        const auto& b = doc["bliss"];
        c.bliss_alpha1 = b.value("alpha1", 0.0);
        c.bliss_alpha2 = b.value("alpha2", 0.0);
    }
    return c;
}

Json read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("config " + path + " is not valid JSON: " + e.what());
    }
}

Json apply_overrides(Json doc, const Overrides& o) {
    if (!doc.is_object()) return doc;
    if (o.output_dir) doc["output_dir"] = *o.output_dir;
    if (o.seed) doc["seed"] = *o.seed;
    if (o.jobs) doc["jobs"] = *o.jobs;
    return doc;
}

}  // namespace eft::cli
