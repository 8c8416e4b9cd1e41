#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "finhardy/error.hpp"

namespace finhardy {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Short form for keys and summaries.
std::string short_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

class Output {
public:
    Output(const RunConfig& cfg, const std::string& dir) : cfg_(cfg), dir_(dir) { fs::create_directories(dir_); }

    std::string header() const {
        return "# config_hash=" + hex64(cfg_.hash) + " seed=" + std::to_string(cfg_.output.seed);
    }
    std::ofstream open(const std::string& name) const {
        std::ofstream f(fs::path(dir_) / name, std::ios::binary);
        if (!f) throw Error(ErrorKind::Io, "cannot write " + (fs::path(dir_) / name).string());
        f << header() << '\n';
        return f;
    }
    void field(const std::string& name, const ScalarField& f) const {
        if (!cfg_.output.dump_field) return;
        std::ofstream os(fs::path(dir_) / name, std::ios::binary);
        if (!os) throw Error(ErrorKind::Io, "cannot write " + (fs::path(dir_) / name).string());
        write_field_dump(os, f, header());
    }
    // Summary lines go both to the log and to summary.txt.
    void summary(std::ostream& log, const std::string& line) {
        log << line << '\n';
        lines_ += line + '\n';
        std::ofstream f = open("summary.txt");
        f << lines_;
    }

private:
    const RunConfig& cfg_;
    std::string dir_;
    std::string lines_;
};

struct Setup {
    NormEngine engine;
    GridPtr grid;
};

Setup setup(const RunConfig& cfg) {
    NormEngine e(cfg.norm, cfg.polar);
    if (e.dim() != domain_dim(cfg.domain))
        throw Error(ErrorKind::Validation, "norm: dimension " + std::to_string(e.dim()) + " differs from the domain's " +
                                               std::to_string(domain_dim(cfg.domain)));
    return {e, build_grid(cfg.domain, cfg.resolution)};
}

DistanceResult distance_for(const RunConfig& cfg, const Setup& s) {
    if (cfg.solver.distance_method == "bruteforce") return distance_bruteforce(s.grid, s.engine, cfg.solver.sweep.ridge_tau);
    return distance_sweep(s.grid, s.engine, cfg.solver.sweep);
}

std::string incenter_str(const GridDomain& g, std::size_t cell) {
    int c[3];
    g.coords(cell, c);
    std::string s;
    for (int k = 0; k < g.n; ++k) s += (k ? "," : "") + std::to_string(c[k]);
    return s;
}

std::string estimate_csv_header() { return "iterations,quotient,converged,h,cells"; }

void write_estimate(std::ofstream& f, const HardyEstimate& est) {
    f << estimate_csv_header() << '\n';
    for (std::size_t k = 0; k < est.history.size(); ++k)
        f << k << ',' << num(est.history[k]) << ',' << (k + 1 == est.history.size() && est.converged ? 1 : 0) << ','
          << num(est.h) << ',' << est.cells << '\n';
}

bool monotone(const std::vector<double>& h) {
    for (std::size_t k = 1; k < h.size(); ++k)
        if (h[k] > h[k - 1]) return false;
    return true;
}

int cmd_norm_check(const RunConfig& cfg, Output& out, std::ostream& log) {
    NormEngine e(cfg.norm, cfg.polar);
    const int n = e.dim();
    std::mt19937_64 rng(cfg.output.seed);
    std::normal_distribution<double> n01;
    const double tol_dual = cfg.polar == PolarMode::ClosedForm ? 1e-8 : 1e-5;
    double worst_dual = 0, worst_inv = 0;
    auto f = out.open("norm_check.csv");
    f << "index,polar,dual_defect,inverse_defect\n";
    for (int i = 0; i < cfg.solver.duality_points; ++i) {
        Vec x(n);
        for (int k = 0; k < n; ++k) x[k] = n01(rng);
        double fo = e.polar(x);
        Vec g = e.polar_grad(x);
        double dual = std::abs(e.eval(g) - 1.0);
        double inv = (fo * e.grad(g) - x).norm() / x.norm();
        worst_dual = std::max(worst_dual, dual);
        worst_inv = std::max(worst_inv, inv);
        f << i << ',' << num(fo) << ',' << num(dual) << ',' << num(inv) << '\n';
    }
    bool ok = worst_dual <= tol_dual && worst_inv <= 1e-6;
    out.summary(log, "norm=" + describe(cfg.norm) + " points=" + std::to_string(cfg.solver.duality_points) +
                         " max_dual_defect=" + short_num(worst_dual) + " max_inverse_defect=" + short_num(worst_inv) +
                         " alpha1=" + short_num(e.alpha1()) + " alpha2=" + short_num(e.alpha2()) +
                         " pass=" + (ok ? "true" : "false"));
    return ok ? kExitOk : kExitCheck;
}

int cmd_polar(const RunConfig& cfg, Output& out, std::ostream& log) {
    if (cfg.points.empty()) throw Error(ErrorKind::Validation, "norm.points: required by polar");
    NormEngine e(cfg.norm, cfg.polar);
    auto f = out.open("polar.csv");
    f << "point,polar,polar_grad\n";
    for (std::size_t i = 0; i < cfg.points.size(); ++i) {
        const Vec& x = cfg.points[i];
        if (x.size() != e.dim()) throw Error(ErrorKind::Validation, "norm.points: dimension differs from the norm");
        Vec g = e.polar_grad(x);
        std::string gs;
        for (int k = 0; k < g.size(); ++k) gs += (k ? " " : "") + num(g[k]);
        double fo = e.polar(x);
        f << i << ',' << num(fo) << ',' << gs << '\n';
        log << "polar[" << i << "]=" << short_num(fo) << '\n';
    }
    return kExitOk;
}

int cmd_distance(const RunConfig& cfg, Output& out, std::ostream& log) {
    Setup s = setup(cfg);
    const bool compare = cfg.solver.distance_method == "compare";
    DistanceResult r = compare ? distance_sweep(s.grid, s.engine, cfg.solver.sweep) : distance_for(cfg, s);
    out.field("distance.field", r.d);
    std::string line = "r_F=" + short_num(r.r_F) + " incenter=" + incenter_str(*s.grid, r.incenter) +
                       " residual_median=" + short_num(r.residual.median) +
                       " residual_p95=" + short_num(r.residual.p95);
    int code = kExitOk;
    if (compare) {
        DistanceResult bf = distance_bruteforce(s.grid, s.engine, cfg.solver.sweep.ridge_tau);
        out.field("distance_bruteforce.field", bf.d);
        double worst = 0;
        for (std::size_t i = 0; i < s.grid->size(); ++i)
            if (s.grid->inside[i]) worst = std::max(worst, std::abs(r.d[i] - bf.d[i]));
        line += " max_sweep_bf_over_h=" + short_num(worst / s.grid->h) +
                " residual_median_bf=" + short_num(bf.residual.median);
        if (worst > 3 * s.grid->h || r.residual.median > 0.05 || bf.residual.median > 0.05) code = kExitCheck;
    }
    out.summary(log, line);
    return code;
}

int cmd_superharmonic(const RunConfig& cfg, Output& out, std::ostream& log) {
    Setup s = setup(cfg);
    DistanceResult r = distance_for(cfg, s);
    SuperharmonicVerdict v = superharmonic_check(r.d, r.ridge, s.engine, cfg.solver.superharmonic);
    if (cfg.output.dump_field) out.field("laplacian.field", finsler_laplacian(r.d, s.engine));
    Vec w = s.grid->center(v.witness_cell);
    std::string ws;
    for (int k = 0; k < w.size(); ++k) ws += (k ? "," : "") + short_num(w[k]);
    out.summary(log, std::string("verdict=") + (v.verdict ? "true" : "false") + " mode=" + to_string(v.mode) +
                         " worst=" + short_num(v.worst_value) + " excluded=" + short_num(v.excluded_fraction) +
                         " tol=" + short_num(v.tol) + " witness=" + ws +
                         " low_confidence=" + (v.low_confidence ? "true" : "false"));
    if (cfg.solver.expect_superharmonic && *cfg.solver.expect_superharmonic != v.verdict) return kExitCheck;
    return kExitOk;
}

int cmd_hardy_estimate(const RunConfig& cfg, Output& out, std::ostream& log) {
    Setup s = setup(cfg);
    DistanceResult r = distance_for(cfg, s);
    HardyEstimate est = hardy_estimate(r.d, s.engine, cfg.solver.descent);
    auto f = out.open("hardy_estimate.csv");
    write_estimate(f, est);
    auto suite = random_sine_suite(r.d, cfg.sweep.suite_size, cfg.output.seed);
    auto fs_ = out.open("hardy_suite.csv");
    fs_ << "index,quotient\n";
    EnergyStencil st(s.grid);
    double qmin = INFINITY;
    for (std::size_t i = 0; i < suite.size(); ++i) {
        double q = hardy_quotient(st, suite[i], r.d, s.engine);
        qmin = std::min(qmin, q);
        fs_ << i << ',' << num(q) << '\n';
    }
    out.field("hardy_minimiser.field", est.u);
    bool ok = monotone(est.history);
    if (cfg.solver.expect_min) ok = ok && est.quotient >= *cfg.solver.expect_min;
    if (cfg.solver.expect_max) ok = ok && est.quotient <= *cfg.solver.expect_max;
    if (cfg.sweep.quotient_min) ok = ok && qmin >= *cfg.sweep.quotient_min;
    out.summary(log, "quotient=" + short_num(est.quotient) + " iterations=" + std::to_string(est.iterations) +
                         " converged=" + (est.converged ? "true" : "false") + " monotone=" +
                         (monotone(est.history) ? "true" : "false") + " suite_min=" + short_num(qmin) +
                         " pass=" + (ok ? "true" : "false"));
    return ok ? kExitOk : kExitCheck;
}

int cmd_lambda1(const RunConfig& cfg, Output& out, std::ostream& log) {
    Setup s = setup(cfg);
    HardyEstimate est = lambda1_estimate(s.grid, s.engine, cfg.solver.descent);
    DistanceResult r = distance_for(cfg, s);
    auto f = out.open("lambda1.csv");
    write_estimate(f, est);
    out.field("eigenfunction.field", est.u);
    double bound = 1.0 / (4.0 * r.r_F * r.r_F);
    bool ok = monotone(est.history) && est.quotient >= 0.9 * bound;
    if (cfg.solver.expect_min) ok = ok && est.quotient >= *cfg.solver.expect_min;
    if (cfg.solver.expect_max) ok = ok && est.quotient <= *cfg.solver.expect_max;
    out.summary(log, "lambda1=" + short_num(est.quotient) + " r_F=" + short_num(r.r_F) + " bound=" + short_num(bound) +
                         " iterations=" + std::to_string(est.iterations) + " pass=" + (ok ? "true" : "false"));
    return ok ? kExitOk : kExitCheck;
}

int cmd_deficit(const RunConfig& cfg, Output& out, std::ostream& log) {
    Setup s = setup(cfg);
    DistanceResult r = distance_for(cfg, s);
    const double D = M_E * r.r_F;
    auto suite = random_sine_suite(r.d, cfg.sweep.suite_size, cfg.output.seed);
    auto f = out.open("deficit.csv");
    f << "index,hardy_mass,deficit_logremainder,deficit_l2\n";
    double worst = INFINITY;
    for (std::size_t i = 0; i < suite.size(); ++i) {
        double m = hardy_mass(suite[i], r.d);
        double dl = deficit_logremainder(suite[i], r.d, s.engine, D);
        double d2 = deficit_l2(suite[i], r.d, s.engine, r.r_F);
        worst = std::min(worst, dl / m);
        f << i << ',' << num(m) << ',' << num(dl) << ',' << num(d2) << '\n';
    }
    double gap = log_dominance_gap(r.d, r.r_F);
    bool ok = gap <= 1e-10;
    if (cfg.sweep.deficit_tol) ok = ok && worst >= -*cfg.sweep.deficit_tol;
    out.summary(log, "min_relative_deficit=" + short_num(worst) + " dominance_gap=" + short_num(gap) +
                         " D=" + short_num(D) + " pass=" + (ok ? "true" : "false"));
    return ok ? kExitOk : kExitCheck;
}

ScalarField phi_for(const RunConfig& cfg, const Setup& s) { return cutoff_field(s.grid, s.engine, cfg.sweep.cutoff); }

int cmd_jbeta(const RunConfig& cfg, Output& out, std::ostream& log) {
    Setup s = setup(cfg);
    DistanceResult r = distance_for(cfg, s);
    require_resolution(cfg.sweep.epsilons, s.grid->h, r.r_F);
    ScalarField phi = phi_for(cfg, s);
    ProfileLayer layer;
    if (cfg.sweep.profile) layer = build_profile_layer(r.d, s.engine);
    auto fits = jbeta_scaling_sweep(r.d, phi, r.r_F, cfg.sweep.betas, cfg.sweep.epsilons,
                                    cfg.sweep.profile ? &layer : nullptr);
    auto f = out.open("jbeta_scaling.csv");
    f << "epsilon";
    for (const auto& fit : fits) f << ",J_" << short_num(fit.beta);
    f << '\n';
    for (std::size_t k = 0; k < cfg.sweep.epsilons.size(); ++k) {
        f << num(cfg.sweep.epsilons[k]);
        for (const auto& fit : fits) f << ',' << num(fit.J[k]);
        f << '\n';
    }
    auto g = out.open("jbeta_fits.csv");
    g << "beta,slope,max_ratio\n";
    bool ok = true;
    std::string line;
    for (const auto& fit : fits) {
        g << num(fit.beta) << ',' << num(fit.slope) << ',' << num(fit.max_ratio) << '\n';
        line += "beta=" + short_num(fit.beta) + ":slope=" + short_num(fit.slope) + ",ratio=" +
                short_num(fit.max_ratio) + " ";
        if (fit.beta > -1 && cfg.sweep.slope_tol) ok = ok && std::abs(fit.slope + 1 + fit.beta) <= *cfg.sweep.slope_tol;
        if (fit.beta < -1 && cfg.sweep.ratio_max) ok = ok && fit.max_ratio <= *cfg.sweep.ratio_max;
    }
    out.summary(log, line + "pass=" + (ok ? "true" : "false"));
    return ok ? kExitOk : kExitCheck;
}

int cmd_optimality(const RunConfig& cfg, Output& out, std::ostream& log) {
    Setup s = setup(cfg);
    DistanceResult r = distance_for(cfg, s);
    OptimalityOptions o{cfg.sweep.cutoff, cfg.sweep.profile};
    auto rows = optimality_sweep(r.d, s.engine, r.r_F, cfg.sweep.theta, cfg.sweep.epsilons, o);
    auto f = out.open("optimality_sweep.csv");
    f << "epsilon,theta,quotient_Ueps,energy,hardy_mass,Q";
    for (const auto& [beta, J] : rows.front().J_values) f << ",J_" << short_num(beta);
    f << ",D,A_est,ratio_g15,ratio_g2\n";
    for (const auto& row : rows) {
        f << num(row.epsilon) << ',' << num(row.theta) << ',' << num(row.quotient_Ueps) << ',' << num(row.energy)
          << ',' << num(row.hardy_mass) << ',' << num(row.Q);
        for (const auto& [beta, J] : row.J_values) f << ',' << num(J);
        f << ',' << num(row.D) << ',' << num(row.A_est) << ',' << num(row.ratio_g15) << ',' << num(row.ratio_g2)
          << '\n';
    }
    const auto& first = rows.front();
    const auto& last = rows.back();
    bool ok = true;
    if (cfg.sweep.a_est_max) {
        for (std::size_t k = 1; k < rows.size(); ++k) ok = ok && rows[k].A_est <= rows[k - 1].A_est;
        ok = ok && last.A_est <= *cfg.sweep.a_est_max;
    }
    if (cfg.sweep.g15_factor) ok = ok && last.ratio_g15 <= *cfg.sweep.g15_factor * first.ratio_g15;
    if (cfg.sweep.g2_lo)
        for (const auto& row : rows) ok = ok && row.ratio_g2 >= *cfg.sweep.g2_lo && row.ratio_g2 <= *cfg.sweep.g2_hi;
    out.summary(log, "A_est_first=" + short_num(first.A_est) + " A_est_last=" + short_num(last.A_est) +
                         " ratio_g15_first=" + short_num(first.ratio_g15) + " ratio_g15_last=" +
                         short_num(last.ratio_g15) + " ratio_g2_first=" + short_num(first.ratio_g2) +
                         " ratio_g2_last=" + short_num(last.ratio_g2) + " pass=" + (ok ? "true" : "false"));
    return ok ? kExitOk : kExitCheck;
}

int cmd_torus(const RunConfig& cfg, Output& out, std::ostream& log) {
    const TorusSpec* t = std::get_if<TorusSpec>(&cfg.domain.shape);
    if (!t) throw Error(ErrorKind::Validation, "domain.kind: torus-oracle needs a torus");
    Setup s = setup(cfg);
    out.field("torus_distance.field", torus_distance_oracle(*t, s.grid, s.engine));
    out.field("torus_laplacian.field", torus_laplacian_oracle(*t, s.grid, s.engine));
    auto f = out.open("torus_curvature.csv");
    f << "theta,H,H_numeric\n";
    bool ok = true;
    std::vector<double> thetas = {0.0, M_PI};
    for (int k = 0; k < 8; ++k) thetas.push_back(2 * M_PI * (k + 0.5) / 8);
    for (double th : thetas) {
        double a = torus_mean_curvature(*t, th), b = torus_mean_curvature_numeric(*t, th);
        ok = ok && std::abs(a - b) <= 0.05 * std::abs(a);
        f << num(th) << ',' << num(a) << ',' << num(b) << '\n';
    }
    out.summary(log, "H(0)=" + short_num(torus_mean_curvature(*t, 0.0)) +
                         " H(pi)=" + short_num(torus_mean_curvature(*t, M_PI)) +
                         " numeric_agreement=" + (ok ? "true" : "false"));
    return ok ? kExitOk : kExitCheck;
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
    static const std::vector<std::string> names = {"norm-check",    "polar",          "distance",
                                                   "superharmonic", "hardy-estimate", "lambda1",
                                                   "deficit",       "optimality-sweep", "jbeta-scaling",
                                                   "torus-oracle",  "repro-all"};
    return names;
}

int run_subcommand(const std::string& name, const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
    Output out(cfg, out_dir);
    if (name == "norm-check") return cmd_norm_check(cfg, out, log);
    if (name == "polar") return cmd_polar(cfg, out, log);
    if (name == "distance") return cmd_distance(cfg, out, log);
    if (name == "superharmonic") return cmd_superharmonic(cfg, out, log);
    if (name == "hardy-estimate") return cmd_hardy_estimate(cfg, out, log);
    if (name == "lambda1") return cmd_lambda1(cfg, out, log);
    if (name == "deficit") return cmd_deficit(cfg, out, log);
    if (name == "optimality-sweep") return cmd_optimality(cfg, out, log);
    if (name == "jbeta-scaling") return cmd_jbeta(cfg, out, log);
    if (name == "torus-oracle") return cmd_torus(cfg, out, log);
    throw Error(ErrorKind::InvalidArgument, "unknown subcommand '" + name + "'");
}

int repro_all(const std::string& config_dir, const std::string& out_dir, std::optional<std::uint64_t> seed,
              std::ostream& log) {
    if (!fs::is_directory(config_dir)) throw Error(ErrorKind::Io, config_dir + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(config_dir))
        if (e.path().extension() == ".conf") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error(ErrorKind::Io, "no .conf files in " + config_dir);
    int worst = kExitOk;
    for (const auto& p : files) {
        RunConfig cfg = load_config(p.string());
        if (seed) cfg.output.seed = *seed;
        if (cfg.output.subcommand.empty() || cfg.output.subcommand == "repro-all")
            throw Error(ErrorKind::Validation, p.string() + ": output.subcommand must name a subcommand");
        log << "== " << p.stem().string() << " (" << cfg.output.subcommand << ")\n";
        int code = run_subcommand(cfg.output.subcommand, cfg, (fs::path(out_dir) / p.stem()).string(), log);
        log << "exit=" << code << '\n';
        worst = std::max(worst, code);
    }
    return worst;
}

}  // namespace finhardy
