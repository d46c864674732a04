#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <unistd.h>

#include "eft/cli.hpp"
#include "eft/errors.hpp"
#include "eft/hamrep.hpp"
#include "eft/numerics.hpp"
#include "eft/qksd.hpp"
#include "eft/spe.hpp"
#include "eft/spectrum.hpp"

namespace eft::cli {

namespace fs = std::filesystem;

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void write_file_atomic(const std::string& path, const std::string& body) {
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << body;
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
    }
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const IoError*>(&e)) return 4;
    if (dynamic_cast<const Error*>(&e)) return 3;
    return 3;
}

namespace {

// Rethrows the in-flight exception with ctx prefixed, keeping its type.
[[noreturn]] void rethrow_with(const std::string& ctx) {
    try {
        throw;
    } catch (const ParseError& e) {
        throw ParseError(ctx + ": " + e.what());
    } catch (const IoError& e) {
        throw IoError(ctx + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(ctx + ": " + e.what());
    } catch (const DomainError& e) {
        throw DomainError(ctx + ": " + e.what());
    } catch (const ContractError& e) {
        throw ContractError(ctx + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(ctx + ": " + e.what());
    } catch (const EmptySubspaceError& e) {
        throw EmptySubspaceError(ctx + ": " + e.what());
    } catch (const SearchError& e) {
        throw SearchError(ctx + ": " + e.what());
    } catch (const Error& e) {
        throw Error(ctx + ": " + e.what());
    }
}

template <typename F>
auto in_context(const std::string& ctx, F&& f) {
    try {
        return f();
    } catch (const Error&) {
        rethrow_with(ctx);
    }
}

std::uint64_t point_seed(std::uint64_t seed, std::uint64_t point) {
    numerics::RngStream s(seed, point);
    return s.next_u64();
}

Json lineage(std::uint64_t seed, std::uint64_t point, std::uint64_t derived, const std::string& streams) {
    return Json{{"seed", seed}, {"point", point}, {"point_seed", derived}, {"streams", streams}};
}

std::string utc_timestamp() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class Csv {
public:
    explicit Csv(const std::vector<std::string>& header) {
        for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
        out_ << '\n';
    }
    Csv& cell(const std::string& s) {
        out_ << (first_ ? "" : ",") << s;
        first_ = false;
        return *this;
    }
    Csv& cell(double x) { return cell(format_double(x)); }
    Csv& cell(long long x) { return cell(std::to_string(x)); }
    Csv& cell(int x) { return cell(std::to_string(x)); }
    void end() {
        out_ << '\n';
        first_ = true;
    }
    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
    bool first_ = true;
};

struct Output {
    fs::path dir;
    std::vector<std::string> files;

    void write(const std::string& name, const std::string& body) {
        auto p = (dir / name).string();
        write_file_atomic(p, body);
        files.push_back(p);
    }
};

spectrum::Spectrum load_input_spectrum(const ExperimentConfig& c) {
    if (c.spectrum_path) return spectrum::load_spectrum(*c.spectrum_path);
    const auto& y = *c.synthesis;
    if (y.kind == "exponential") return spectrum::synth_exponential(y.energies, y.p0, y.alpha, y.shift, y.scale, "synthetic");
    double sum = 0.0;
    for (double w : y.weights) sum += w;
    if (!(sum > 0.0)) throw ValidationError("synthesis weights sum to zero");
    auto w = y.weights;
    if (std::abs(sum - 1.0) > 0.01) throw ValidationError("synthesis weights sum to " + format_double(sum));
    for (double& x : w) x /= sum;
    return spectrum::make_spectrum(y.values, w, {y.shift, y.scale, false}, "explicit");
}

Json spectrum_summary(const spectrum::Spectrum& s) {
    return Json{{"label", s.label},
                {"states", s.size()},
                {"ground_energy_hartree", s.ground_energy()},
                {"ground_weight", s.ground_weight()},
                {"shift_hartree", s.transform.shift},
                {"scale_hartree", s.transform.scale},
                {"flipped", s.transform.flipped}};
}

std::array<double, 3> top3(const std::vector<double>& eigs_desc) {
    std::array<double, 3> out{std::nan(""), std::nan(""), std::nan("")};
    for (std::size_t i = 0; i < 3 && i < eigs_desc.size(); ++i) out[i] = eigs_desc[i];
    return out;
}

struct QksdPoint {
    int K = 0;
    int dk = 1;
    std::string policy;
};

std::vector<QksdPoint> qksd_points(const ExperimentConfig& c) {
    std::vector<QksdPoint> pts;
    for (const auto& p : c.policies)
        for (int dk : c.dk)
            for (int K : c.K) pts.push_back({K, dk, p});
    return pts;
}

std::string point_name(const QksdPoint& p) {
    return "K=" + std::to_string(p.K) + " dk=" + std::to_string(p.dk) + " policy=" + p.policy;
}

qksd::KrylovConfig krylov_config(const QksdPoint& p) { return {p.K, p.dk, qksd::Policy::parse(p.policy)}; }

std::vector<double> noiseless_overlap(const spectrum::Spectrum& s, const qksd::KrylovConfig& kc) {
    auto moments = spectrum::moment_table(s, spectrum::krylov_degrees(kc.k_dim, kc.dk));
    return qksd::solve(moments, kc, s.transform).overlap_eigs;
}

std::string gradient_csv(const qksd::TrialStats& st) {
    Csv csv({"degree", "g_k", "M_k"});
    for (const auto& [d, g] : st.gradient.g) {
        auto it = st.allocation.find(d);
        csv.cell(d).cell(g).cell(static_cast<long long>(it == st.allocation.end() ? 0 : it->second));
        csv.end();
    }
    return csv.str();
}

const std::vector<std::string> kQksdHeader = {"K", "dk", "policy", "m_total", "mean_abs_err", "rmse",
                                              "s1", "s2", "s3", "failed_trials"};

void qksd_row(Csv& csv, const QksdPoint& p, const qksd::TrialStats& st, const std::array<double, 3>& s3) {
    csv.cell(p.K).cell(p.dk).cell(p.policy).cell(static_cast<long long>(st.m_total)).cell(st.mean_abs_err)
        .cell(st.rmse).cell(s3[0]).cell(s3[1]).cell(s3[2]).cell(st.failed_trials);
    csv.end();
}

Json trial_record(const QksdPoint& p, const qksd::TrialStats& st, const std::array<double, 3>& s3) {
    Json unstable = Json::array();
    for (long long d : st.gradient.unstable) unstable.push_back(d);
    return Json{{"K", p.K},
                {"dk", p.dk},
                {"policy", p.policy},
                {"m_total", st.m_total},
                {"n_trials", st.n_trials},
                {"failed_trials", st.failed_trials},
                {"noiseless_energy_hartree", st.noiseless_energy},
                {"true_energy_hartree", st.true_energy},
                {"mean_abs_err_hartree", st.mean_abs_err},
                {"rmse_hartree", st.rmse},
                {"overlap_top3", {s3[0], s3[1], s3[2]}},
                {"kept_directions", st.gradient.kept},
                {"unstable_degrees", unstable}};
}

// Evaluates points in parallel; results land in config order.
template <typename T, typename F>
std::vector<T> for_points(std::size_t n, unsigned jobs, F&& body) {
    std::vector<T> out(n);
    numerics::parallel_for(n, jobs, [&](std::size_t i) { out[i] = body(i); });
    return out;
}

void run_qksd_sweep(const ExperimentConfig& c, Output& o, Json& records) {
    auto s = load_input_spectrum(c);
    auto pts = qksd_points(c);
    struct R {
        qksd::TrialStats st;
        std::array<double, 3> s3;
        std::uint64_t seed;
    };
    auto res = for_points<R>(pts.size(), c.jobs, [&](std::size_t i) {
        return in_context("qksd-sweep at " + point_name(pts[i]), [&] {
            auto kc = krylov_config(pts[i]);
            const auto seed = point_seed(*c.seed, i);
            return R{qksd::run_trials(s, kc, *c.m_total, c.n_trials, seed, 1), top3(noiseless_overlap(s, kc)), seed};
        });
    });
    Csv csv(kQksdHeader);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        qksd_row(csv, pts[i], res[i].st, res[i].s3);
        const std::string gname = "gradient_" + std::to_string(i) + ".csv";
        o.write(gname, gradient_csv(res[i].st));
        auto rec = trial_record(pts[i], res[i].st, res[i].s3);
        rec["gradient_file"] = gname;
        rec["lineage"] = lineage(*c.seed, i, res[i].seed, "trial t uses stream (point_seed, t)");
        records.push_back(rec);
    }
    o.write("qksd.csv", csv.str());
}

void run_qksd_budget(const ExperimentConfig& c, Output& o, Json& records) {
    auto s = load_input_spectrum(c);
    auto pts = qksd_points(c);
    struct R {
        qksd::BudgetResult b;
        std::array<double, 3> s3;
        std::uint64_t seed;
    };
    auto res = for_points<R>(pts.size(), c.jobs, [&](std::size_t i) {
        return in_context("qksd-budget at " + point_name(pts[i]), [&] {
            auto kc = krylov_config(pts[i]);
            qksd::BudgetOptions bo;
            bo.n_trials = c.n_trials;
            bo.seed = point_seed(*c.seed, i);
            bo.cap = c.m_cap;
            return R{qksd::find_shot_budget(s, kc, *c.target_err, bo), top3(noiseless_overlap(s, kc)), bo.seed};
        });
    });
    Csv csv(kQksdHeader);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto& b = res[i].b;
        qksd_row(csv, pts[i], b.stats, res[i].s3);
        const std::string gname = "gradient_" + std::to_string(i) + ".csv";
        o.write(gname, gradient_csv(b.stats));
        auto rec = trial_record(pts[i], b.stats, res[i].s3);
        rec["target_err_hartree"] = *c.target_err;
        rec["m_guess"] = b.m_guess;
        rec["smallest_kept_eig"] = b.smallest_kept_eig;
        Json probes = Json::array();
        for (const auto& [m, err] : b.probes) probes.push_back({m, err});
        rec["probes"] = probes;
        rec["gradient_file"] = gname;
        rec["lineage"] = lineage(*c.seed, i, res[i].seed, "every probed M reuses streams (point_seed, t)");
        records.push_back(rec);
    }
    o.write("qksd.csv", csv.str());
}

void run_overlap(const ExperimentConfig& c, Output& o, Json& records) {
    auto s = load_input_spectrum(c);
    auto rep = in_context("overlap-analysis", [&] { return qksd::overlap_analysis(s, c.K, c.dk); });
    Csv rows({"K", "dk", "k_dim", "s1", "s2", "s3"});
    for (const auto& r : rep.rows) {
        rows.cell(r.K).cell(r.dk).cell(r.k_dim).cell(r.s[0]).cell(r.s[1]).cell(r.s[2]);
        rows.end();
    }
    Csv slopes({"dk", "slope1", "slope2", "slope3"});
    for (const auto& sl : rep.slopes) {
        slopes.cell(sl.dk).cell(sl.slope[0]).cell(sl.slope[1]).cell(sl.slope[2]);
        slopes.end();
        records.push_back(Json{{"dk", sl.dk}, {"slopes", {sl.slope[0], sl.slope[1], sl.slope[2]}}});
    }
    o.write("overlap.csv", rows.str());
    o.write("overlap_slopes.csv", slopes.str());
}

spe::SpeOptions spe_options(const ExperimentConfig& c, std::uint64_t seed) {
    spe::SpeOptions opts;
    opts.p_success = c.p_success;
    opts.seed = seed;
    opts.epsilon = c.epsilon;
    opts.flip_margin = c.flip_margin;
    opts.redraw_per_query = c.redraw_per_query;
    opts.amplification_aware = c.amplification_aware;
    return opts;
}

Json spe_json(const spe::SpeReport& r) {
    return Json{{"K", r.K},
                {"M", r.M},
                {"beta_erf", r.beta_erf},
                {"eta", r.eta},
                {"delta_radians", r.delta_radians},
                {"x_star", r.x_star},
                {"e0_hartree", r.e0_hartree},
                {"amplification_factor", r.amplification_factor},
                {"success", r.success}};
}

void run_spe(const ExperimentConfig& c, Output& o, Json& records) {
    auto s = load_input_spectrum(c);
    const auto n = static_cast<std::size_t>(c.spe_runs);
    auto reps = for_points<spe::SpeReport>(n, c.jobs, [&](std::size_t i) {
        return in_context("spe-run " + std::to_string(i), [&] {
            return spe::spe_run(s, *c.target_err, spe_options(c, n == 1 ? *c.seed : point_seed(*c.seed, i)));
        });
    });
    Csv runs({"run", "seed", "x_star", "e0_hartree", "error_hartree", "queries", "success"});
    int ok = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = reps[i];
        const std::uint64_t seed = n == 1 ? *c.seed : point_seed(*c.seed, i);
        ok += r.success;
        runs.cell(static_cast<long long>(i)).cell(std::to_string(seed)).cell(r.x_star).cell(r.e0_hartree)
            .cell(r.error).cell(r.queries).cell(r.success ? "true" : "false");
        runs.end();
        auto rec = spe_json(r);
        rec["epsilon"] = r.epsilon;
        rec["one_norm"] = r.one_norm;
        rec["true_energy_hartree"] = r.true_energy;
        rec["error_hartree"] = r.error;
        rec["queries"] = r.queries;
        rec["lineage"] = lineage(*c.seed, i, seed, c.redraw_per_query ? "query q uses stream (run seed, 1 + q)"
                                                                       : "one noisy moment set from stream (run seed, 0)");
        records.push_back(rec);
    }
    o.write("spe_run.json", spe_json(reps.front()).dump(2) + "\n");
    if (n > 1) o.write("spe_runs.csv", runs.str());
    records.push_back(Json{{"success_rate", static_cast<double>(ok) / static_cast<double>(n)}, {"runs", n}});
}

// sup over a uniform y grid of |erf(sqrt(2 beta) y) - Q(y)|, with Q the
// truncated odd Chebyshev series behind the model.
double measured_sup_error(const spe::HeavisideModel& m, int points) {
    std::vector<double> c(2 * m.sine.size() + 1, 0.0);
    for (std::size_t j = 0; j < m.sine.size(); ++j) c[2 * j + 1] = (j % 2 ? -1.0 : 1.0) * m.sine[j];
    const double scale = std::sqrt(2.0 * m.beta_erf);
    double sup = 0.0;
    for (int i = 0; i < points; ++i) {
        const double y = -1.0 + 2.0 * i / (points - 1);
        double b1 = 0.0, b2 = 0.0;
        for (std::size_t k = c.size(); k-- > 1;) {
            const double b0 = 2.0 * y * b1 - b2 + c[k];
            b2 = b1;
            b1 = b0;
        }
        sup = std::max(sup, std::abs(std::erf(scale * y) - (y * b1 - b2 + c[0])));
    }
    return sup;
}

void run_bound_curve(const ExperimentConfig& c, Output& o, Json& records) {
    struct P {
        double beta;
        int K;
    };
    std::vector<P> pts;
    for (double b : c.beta_erf)
        for (int K : c.K) pts.push_back({b, K});
    struct R {
        double fresh, legacy, measured;
    };
    auto res = for_points<R>(pts.size(), c.jobs, [&](std::size_t i) {
        return in_context("spe-bound-curve at beta_erf=" + format_double(pts[i].beta) + " K=" + std::to_string(pts[i].K),
                          [&] {
                              auto m = spe::fourier_coefficients(pts[i].beta, pts[i].K);
                              return R{m.bound_new, m.bound_old, measured_sup_error(m, c.grid_points)};
                          });
    });
    Csv csv({"beta_erf", "K", "bound_new", "bound_old", "measured"});
    for (std::size_t i = 0; i < pts.size(); ++i) {
        csv.cell(pts[i].beta).cell(pts[i].K).cell(res[i].fresh).cell(res[i].legacy).cell(res[i].measured);
        csv.end();
        records.push_back(Json{{"beta_erf", pts[i].beta},
                               {"K", pts[i].K},
                               {"bound_new", res[i].fresh},
                               {"bound_old", res[i].legacy},
                               {"measured", res[i].measured},
                               {"bound_holds", res[i].measured <= res[i].fresh + 1e-13}});
    }
    o.write("bound_curve.csv", csv.str());
}

void run_acdf(const ExperimentConfig& c, Output& o, Json& records) {
    auto s0 = load_input_spectrum(c);
    auto s = s0.transform.flipped ? s0 : spectrum::flip_for_spe(s0, c.flip_margin);
    const double eta = 0.5 * s.ground_weight();
    const double eps = c.epsilon > 0.0 ? c.epsilon : eta / 8.0;
    const double delta = *c.delta_radians;
    auto [model, moments] = in_context("acdf-curve", [&] {
        auto p = spe::select_parameters(delta, eps);
        auto m = spe::fourier_coefficients(p.beta_erf, p.K);
        auto t = spectrum::moment_table(s, spe::spe_degrees(m));
        for (auto& [d, e] : t.entries) e.is_exact = d == 0;
        if (c.m_total) {
            numerics::RngStream stream(*c.seed, 0);
            t = spe::inject_spe_noise(m, t, static_cast<double>(*c.m_total), stream);
        }
        return std::pair{m, t};
    });
    const int n = c.x_points;
    std::vector<double> xs(n), vals(n);
    numerics::parallel_for(static_cast<std::size_t>(n), c.jobs, [&](std::size_t i) {
        xs[i] = -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(i) / (n - 1);
        vals[i] = spe::acdf_value(model, moments, xs[i]);
    });
    Csv est({"x", "value"}), exact({"x", "value"});
    for (int i = 0; i < n; ++i) {
        est.cell(xs[i]).cell(vals[i]);
        est.end();
        exact.cell(xs[i]).cell(spe::exact_acdf(s, xs[i]));
        exact.end();
    }
    o.write("acdf.csv", est.str());
    o.write("acdf_exact.csv", exact.str());
    Json rec{{"K", model.K},
             {"beta_erf", model.beta_erf},
             {"eta", eta},
             {"epsilon", eps},
             {"delta_radians", delta},
             {"one_norm", model.one_norm},
             {"ground_theta", std::acos(std::clamp(s.values[s.ground_index()], -1.0, 1.0))},
             {"noisy", c.m_total.has_value()}};
    if (c.m_total) {
        rec["m_total"] = *c.m_total;
        rec["lineage"] = lineage(*c.seed, 0, *c.seed, "one noisy moment set from stream (seed, 0)");
    }
    records.push_back(rec);
}

void run_norms(const ExperimentConfig& c, Output& o, Json& records) {
    auto t = hamrep::load_integrals(*c.integrals_path);
    const int n_df = c.n_df.value_or(5 * t.n);
    auto bliss_params = [&](const hamrep::IntegralTensors& x) {
        if (!c.bliss_alpha1 && !c.bliss_alpha2) return hamrep::bliss_center_one_body(x);
        hamrep::BlissParams p;
        p.alpha1 = c.bliss_alpha1.value_or(0.0);
        p.alpha2 = c.bliss_alpha2.value_or(0.0);
        p.beta_mat = Matrix(x.n, x.n);
        p.eta_particles = x.n_electrons;
        return p;
    };
    Csv csv({"representation", "lambda", "beta", "offset", "rank", "residual"});
    for (const auto& rep : c.representations) {
        in_context("norms for " + rep, [&] {
            const bool bliss = rep.size() > 6 && rep.compare(rep.size() - 6, 6, "-bliss") == 0;
            const std::string base = bliss ? rep.substr(0, rep.size() - 6) : rep;
            const auto x = bliss ? hamrep::bliss_transform(t, bliss_params(t)) : t;
            hamrep::NormShift ns;
            long long rank = 0;
            double residual = 0.0;
            if (base == "pauli") {
                ns = hamrep::pauli_norm_shift(x);
            } else if (base == "df") {
                auto f = hamrep::double_factorize(x, n_df);
                ns = hamrep::df_norm_shift(x, f);
                rank = static_cast<long long>(f.leaves.size());
                residual = f.residual;
            } else {
                hamrep::ThcFactors thc;
                if (c.thc_path && !bliss) {
                    thc = hamrep::load_thc(*c.thc_path);
                    auto g = hamrep::thc_reconstruct(thc);
                    if (g.size() != x.g.size()) throw ValidationError("THC factors do not match the orbital count");
                    double r2 = 0.0;
                    for (std::size_t i = 0; i < g.size(); ++i) r2 += (g[i] - x.g[i]) * (g[i] - x.g[i]);
                    residual = std::sqrt(r2);
                } else {
                    auto f = hamrep::double_factorize(x, n_df);
                    thc = hamrep::thc_from_df(f);
                    residual = f.residual;
                }
                ns = hamrep::thc_norm_shift(hamrep::one_body_spectrum(x), thc, x.e_nuc);
                rank = static_cast<long long>(thc.rank());
            }
            csv.cell(rep).cell(ns.lambda).cell(ns.beta).cell(ns.offset).cell(rank).cell(residual);
            csv.end();
            records.push_back(Json{{"representation", rep},
                                   {"lambda_hartree", ns.lambda},
                                   {"beta_hartree", ns.beta},
                                   {"offset_hartree", ns.offset},
                                   {"rank", rank},
                                   {"residual", residual}});
            return 0;
        });
    }
    o.write("norms.csv", csv.str());
}

void run_compare(const ExperimentConfig& c, Output& o, Json& records) {
    auto s = load_input_spectrum(c);
    const double target = c.target_err.value_or(1e-3);
    auto pts = qksd_points(c);
    auto budgets = for_points<qksd::BudgetResult>(pts.size(), c.jobs, [&](std::size_t i) {
        return in_context("compare (QKSD) at " + point_name(pts[i]), [&] {
            qksd::BudgetOptions bo;
            bo.n_trials = c.n_trials;
            bo.seed = point_seed(*c.seed, i);
            bo.cap = c.m_cap;
            return qksd::find_shot_budget(s, krylov_config(pts[i]), target, bo);
        });
    });

    // One SPE column per (policy, dk) group, aimed at the QKSD rmse at its largest K.
    struct Spe {
        double target;
        spe::SpePlan plan;
        spe::SpeReport first;
        int successes;
    };
    std::map<std::pair<std::string, int>, Spe> spe_by_group;
    const int k_max = *std::max_element(c.K.begin(), c.K.end());
    std::uint64_t group = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (pts[i].K != k_max) continue;
        const auto key = std::pair{pts[i].policy, pts[i].dk};
        if (spe_by_group.count(key)) continue;
        const double rmse = budgets[i].stats.rmse;
        const double spe_target = std::isfinite(rmse) ? std::max(target, rmse) : target;
        const auto base_seed = point_seed(*c.seed, (1ULL << 32) + group++);
        Spe sp{spe_target, {}, {}, 0};
        in_context("compare (SPE) for policy=" + pts[i].policy + " dk=" + std::to_string(pts[i].dk), [&] {
            sp.plan = spe::plan_spe(s, spe_target, spe_options(c, base_seed));
            auto reps = for_points<spe::SpeReport>(static_cast<std::size_t>(c.spe_runs), c.jobs, [&](std::size_t r) {
                return spe::spe_run(s, spe_target, spe_options(c, point_seed(base_seed, r)));
            });
            for (const auto& r : reps) sp.successes += r.success;
            sp.first = reps.front();
            return 0;
        });
        spe_by_group.emplace(key, sp);
    }

    Csv csv({"K", "dk", "policy", "qksd_max_degree", "qksd_M", "qksd_rmse", "qksd_mean_abs_err", "spe_target",
             "spe_K", "spe_max_degree", "spe_M", "spe_error", "spe_success_rate", "qpe_error_hartree"});
    const double p0 = s.ground_weight();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto& b = budgets[i];
        const auto& sp = spe_by_group.at({pts[i].policy, pts[i].dk});
        const auto kc = krylov_config(pts[i]);
        const long long qdeg = kc.max_degree();
        const double qpe = spectrum::qpe_backenvelope(qdeg, std::max<std::int64_t>(1, b.m_total), p0) *
                           std::abs(s.transform.scale);
        const double rate = static_cast<double>(sp.successes) / c.spe_runs;
        csv.cell(pts[i].K).cell(pts[i].dk).cell(pts[i].policy).cell(qdeg).cell(static_cast<long long>(b.m_total))
            .cell(b.stats.rmse).cell(b.stats.mean_abs_err).cell(sp.target).cell(sp.plan.params.K)
            .cell(2LL * sp.plan.params.K + 1).cell(static_cast<long long>(sp.plan.M)).cell(sp.first.error).cell(rate)
            .cell(qpe);
        csv.end();
        records.push_back(Json{{"K", pts[i].K},
                               {"dk", pts[i].dk},
                               {"policy", pts[i].policy},
                               {"qksd", {{"max_degree", qdeg},
                                         {"M", b.m_total},
                                         {"rmse_hartree", b.stats.rmse},
                                         {"mean_abs_err_hartree", b.stats.mean_abs_err},
                                         {"lineage", lineage(*c.seed, i, point_seed(*c.seed, i),
                                                             "trial t uses stream (point_seed, t)")}}},
                               {"spe", {{"target_hartree", sp.target},
                                        {"K", sp.plan.params.K},
                                        {"M", sp.plan.M},
                                        {"beta_erf", sp.plan.params.beta_erf},
                                        {"error_hartree", sp.first.error},
                                        {"success_rate", rate},
                                        {"runs", c.spe_runs}}},
                               {"qpe_error_hartree", qpe}});
    }
    o.write("compare.csv", csv.str());
}

}  // namespace

RunResult run(const ExperimentConfig& c) {
    Output o{fs::path(c.output_dir), {}};
    std::error_code ec;
    fs::create_directories(o.dir, ec);
    if (ec) throw IoError("cannot create output directory " + c.output_dir + ": " + ec.message());

    Json records = Json::array();
    Json report;
    report["mode"] = c.mode;
    report["config"] = c.raw;
    report["provenance"] = {{"artifact", "eft-spectra"}, {"artifact_version", kArtifactVersion},
                            {"timestamp", utc_timestamp()}};
    if (c.spectrum_path || c.synthesis) report["spectrum"] = spectrum_summary(load_input_spectrum(c));

    if (c.mode == "qksd-sweep") run_qksd_sweep(c, o, records);
    else if (c.mode == "qksd-budget") run_qksd_budget(c, o, records);
    else if (c.mode == "overlap-analysis") run_overlap(c, o, records);
    else if (c.mode == "spe-run") run_spe(c, o, records);
    else if (c.mode == "spe-bound-curve") run_bound_curve(c, o, records);
    else if (c.mode == "acdf-curve") run_acdf(c, o, records);
    else if (c.mode == "norms") run_norms(c, o, records);
    else if (c.mode == "compare") run_compare(c, o, records);
    else throw ConfigError("unknown mode " + c.mode);

    report["records"] = records;
    report["files"] = o.files;
    o.write("report.json", report.dump(2) + "\n");
    return {report, o.files};
}

}  // namespace eft::cli
