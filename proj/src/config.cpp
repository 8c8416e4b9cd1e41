#include "finhardy/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "finhardy/error.hpp"

namespace finhardy {

namespace {

struct KeyDoc {
    const char* key;
    const char* def;
    const char* help;
};

const KeyDoc kKeys[] = {
    {"domain.kind", "box", "box | slab | wulff | torus | polytope"},
    {"domain.dim", "2", "dimension of the default box"},
    {"domain.lo", "0,...", "box lower corner / polytope bounding box"},
    {"domain.hi", "1,...", "box upper corner / polytope bounding box"},
    {"domain.normal", "1,0", "slab normal"},
    {"domain.width", "1", "slab width"},
    {"domain.window", "1", "slab window half-width"},
    {"domain.center", "0,...", "Wulff ball centre"},
    {"domain.radius", "1", "Wulff ball radius"},
    {"domain.shape_weights", "", "Wulff ball shape as diag weights (default: the [norm] descriptor)"},
    {"domain.R", "2.5", "torus major radius"},
    {"domain.r", "1", "torus minor radius"},
    {"domain.a", "1", "torus axial stretch"},
    {"domain.faces", "", "polytope half-spaces a.x <= b as 'a1,a2,b; ...'"},
    {"domain.bbox_lo", "", "explicit grid window (lower corner)"},
    {"domain.bbox_hi", "", "explicit grid window (upper corner)"},
    {"domain.sample_margin", "", "keep boundary samples this far outside the window"},
    {"domain.resolution", "64", "cells per unit length"},
    {"norm.kind", "euclidean", "euclidean | diag | quadratic | pnorm"},
    {"norm.dim", "domain dimension", "dimension for euclidean / pnorm"},
    {"norm.weights", "", "diag weights w1,w2,..."},
    {"norm.p", "2", "p-norm exponent (> 1)"},
    {"norm.matrix", "", "quadratic form, row-major"},
    {"norm.polar", "closed", "closed | numeric"},
    {"norm.points", "", "points for `polar`, 'x1,x2; y1,y2; ...'"},
    {"solver.distance", "sweep", "sweep | bruteforce | compare (distance: sweep checked against brute force)"},
    {"solver.tol_factor", "1e-6", "sweep stops when the max update < tol_factor * h"},
    {"solver.max_rounds", "500", "sweep round cap"},
    {"solver.ridge_tau", "0.2", "ridge detection threshold"},
    {"solver.max_iters", "2000", "descent iteration cap"},
    {"solver.descent_tol", "1e-6", "descent stops at relative decrease below this"},
    {"solver.mode", "distributional", "superharmonic mode: distributional | pointwise"},
    {"solver.superharmonic_tol", "-1", "negative: mode default"},
    {"solver.min_bumps", "200", "minimum number of test bumps"},
    {"solver.expect", "", "superharmonic: expected verdict (true | false)"},
    {"solver.expect_min", "", "hardy-estimate / lambda1: lower bound on the estimate"},
    {"solver.expect_max", "", "hardy-estimate / lambda1: upper bound on the estimate"},
    {"solver.duality_points", "1000", "norm-check: random points"},
    {"sweep.theta", "0.75", "U_eps exponent, in (1/2, 1)"},
    {"sweep.epsilons", "0.2,0.1,0.05,0.025", "epsilon list"},
    {"sweep.betas", "0,0.5,1,-1.5", "beta list for jbeta-scaling"},
    {"sweep.cutoff", "global", "global | local"},
    {"sweep.cutoff_x0", "", "local cutoff centre (boundary point)"},
    {"sweep.cutoff_delta", "", "local cutoff radius"},
    {"sweep.quadrature", "profile", "profile | midpoint"},
    {"sweep.suite_size", "50", "random sine test functions"},
    {"sweep.slope_tol", "", "jbeta-scaling: |slope + 1 + beta| bound for beta > -1"},
    {"sweep.ratio_max", "", "jbeta-scaling: max/min J bound for beta < -1"},
    {"sweep.a_est_max", "", "optimality-sweep: A_est bound at the last epsilon (and non-increasing)"},
    {"sweep.g15_factor", "", "optimality-sweep: ratio_g15(last) <= factor * ratio_g15(first)"},
    {"sweep.g2_band", "", "optimality-sweep: 'lo,hi' band for ratio_g2"},
    {"sweep.deficit_tol", "", "deficit: deficit >= -tol * hardy_mass"},
    {"sweep.quotient_min", "", "hardy-estimate: sine-suite quotients >= this"},
    {"output.dir", "out", "output directory (--out overrides)"},
    {"output.seed", "1", "seed (--seed overrides)"},
    {"output.subcommand", "", "subcommand run by repro-all"},
    {"output.dump_field", "true", "write field dumps"},
};

bool known_key(const std::string& k) {
    for (const auto& d : kKeys)
        if (k == d.key) return true;
    return false;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void invalid(const std::string& key, const std::string& why) {
    throw Error(ErrorKind::Validation, key + ": " + why);
}

class Reader {
public:
    explicit Reader(const std::map<std::string, std::string>& raw) : raw_(raw) {}

    bool has(const std::string& k) const { return raw_.count(k) > 0; }
    std::string str(const std::string& k, const std::string& def) const {
        auto it = raw_.find(k);
        return it == raw_.end() ? def : it->second;
    }
    double num(const std::string& k, double def) const {
        auto it = raw_.find(k);
        return it == raw_.end() ? def : to_double(k, it->second);
    }
    std::optional<double> opt(const std::string& k) const {
        auto it = raw_.find(k);
        if (it == raw_.end()) return std::nullopt;
        return to_double(k, it->second);
    }
    long integer(const std::string& k, long def) const {
        auto it = raw_.find(k);
        if (it == raw_.end()) return def;
        char* end = nullptr;
        errno = 0;
        long v = std::strtol(it->second.c_str(), &end, 10);
        if (errno || end == it->second.c_str() || *end != '\0') invalid(k, "expected an integer, got '" + it->second + "'");
        return v;
    }
    bool flag(const std::string& k, bool def) const {
        auto it = raw_.find(k);
        if (it == raw_.end()) return def;
        if (it->second == "true") return true;
        if (it->second == "false") return false;
        invalid(k, "expected true or false, got '" + it->second + "'");
    }
    std::vector<double> list(const std::string& k, const std::vector<double>& def) const {
        auto it = raw_.find(k);
        return it == raw_.end() ? def : parse_list(k, it->second);
    }
    Vec vec(const std::string& k, const Vec& def) const {
        auto it = raw_.find(k);
        if (it == raw_.end()) return def;
        return to_vec(k, parse_list(k, it->second));
    }
    std::vector<std::vector<double>> groups(const std::string& k) const {
        std::vector<std::vector<double>> out;
        auto it = raw_.find(k);
        if (it == raw_.end()) return out;
        std::stringstream ss(it->second);
        std::string part;
        while (std::getline(ss, part, ';'))
            if (!trim(part).empty()) out.push_back(parse_list(k, trim(part)));
        return out;
    }
    static Vec to_vec(const std::string& k, const std::vector<double>& v) {
        if (v.empty() || v.size() > 3) invalid(k, "expected 1 to 3 components");
        Vec x(static_cast<int>(v.size()));
        for (std::size_t i = 0; i < v.size(); ++i) x[static_cast<int>(i)] = v[i];
        return x;
    }

private:
    static double to_double(const std::string& k, const std::string& s) {
        char* end = nullptr;
        errno = 0;
        double v = std::strtod(s.c_str(), &end);
        if (errno || end == s.c_str() || *end != '\0') invalid(k, "expected a number, got '" + s + "'");
        return v;
    }
    static std::vector<double> parse_list(const std::string& k, const std::string& s) {
        std::vector<double> out;
        std::stringstream ss(s);
        std::string part;
        while (std::getline(ss, part, ',')) out.push_back(to_double(k, trim(part)));
        if (out.empty()) invalid(k, "empty list");
        return out;
    }
    const std::map<std::string, std::string>& raw_;
};

Vec filled(int n, double v) { return Vec::Constant(n, v); }

int infer_dim(const Reader& r, const std::string& kind) {
    if (kind == "torus") return 3;
    const char* key = kind == "slab" ? "domain.normal" : kind == "wulff" ? "domain.center" : "domain.lo";
    if (r.has(key)) return static_cast<int>(r.vec(key, Vec()).size());
    return static_cast<int>(r.integer("domain.dim", 2));
}

NormDescriptor read_norm(const Reader& r, int dim) {
    std::string kind = r.str("norm.kind", "euclidean");
    int ndim = static_cast<int>(r.integer("norm.dim", dim));
    NormDescriptor d;
    if (kind == "euclidean") {
        d = Euclidean{ndim};
    } else if (kind == "diag") {
        if (!r.has("norm.weights")) invalid("norm.weights", "required for a diag norm");
        d = DiagQuadratic{r.list("norm.weights", {})};
    } else if (kind == "quadratic") {
        auto m = r.list("norm.matrix", {});
        int n = 0;
        while (n * n < static_cast<int>(m.size())) ++n;
        if (n * n != static_cast<int>(m.size()) || n < 1 || n > 3) invalid("norm.matrix", "expected 1, 4 or 9 entries");
        Mat A(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = m[static_cast<std::size_t>(i * n + j)];
        d = Quadratic{A};
    } else if (kind == "pnorm") {
        double p = r.num("norm.p", 2.0);
        if (!(p > 1.0)) invalid("norm.p", "p must exceed 1");
        d = PNorm{p, ndim};
    } else {
        invalid("norm.kind", "unknown norm '" + kind + "'");
    }
    try {
        validate_descriptor(d);
    } catch (const Error& e) {
        invalid("norm", e.what());
    }
    return d;
}

DomainSpec read_domain(const Reader& r, const NormDescriptor& norm, int dim) {
    std::string kind = r.str("domain.kind", "box");
    DomainSpec spec;
    if (kind == "box") {
        spec.shape = BoxSpec{r.vec("domain.lo", filled(dim, 0.0)), r.vec("domain.hi", filled(dim, 1.0))};
    } else if (kind == "slab") {
        spec.shape = SlabSpec{r.vec("domain.normal", make_vec({1, 0})), r.num("domain.width", 1.0),
                              r.num("domain.window", 1.0)};
    } else if (kind == "wulff") {
        NormDescriptor shape = norm;
        if (r.has("domain.shape_weights")) shape = DiagQuadratic{r.list("domain.shape_weights", {})};
        spec.shape = WulffBallSpec{r.vec("domain.center", filled(dim, 0.0)), r.num("domain.radius", 1.0), shape};
    } else if (kind == "torus") {
        TorusSpec t{r.num("domain.R", 2.5), r.num("domain.r", 1.0), r.num("domain.a", 1.0)};
        if (!(t.r > 0)) invalid("domain.r", "must be positive");
        if (!(t.R > t.r)) invalid("domain.R", "R > r required");
        if (!(t.a > 0)) invalid("domain.a", "must be positive");
        spec.shape = t;
    } else if (kind == "polytope") {
        PolytopeSpec p;
        for (const auto& f : r.groups("domain.faces")) {
            if (f.size() < 2) invalid("domain.faces", "each face needs a normal and an offset");
            std::vector<double> a(f.begin(), f.end() - 1);
            p.faces.push_back({Reader::to_vec("domain.faces", a), f.back()});
        }
        p.lo = r.vec("domain.lo", filled(dim, 0.0));
        p.hi = r.vec("domain.hi", filled(dim, 1.0));
        spec.shape = p;
    } else {
        invalid("domain.kind", "unknown domain '" + kind + "'");
    }
    if (r.has("domain.bbox_lo")) spec.bbox_lo = r.vec("domain.bbox_lo", Vec());
    if (r.has("domain.bbox_hi")) spec.bbox_hi = r.vec("domain.bbox_hi", Vec());
    if (r.has("domain.sample_margin")) spec.sample_margin = r.num("domain.sample_margin", 0.0);
    try {
        validate_domain(spec);
    } catch (const Error& e) {
        invalid("domain", e.what());
    }
    return spec;
}

void positive(const std::string& key, double v) {
    if (!(v > 0)) invalid(key, "must be positive");
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

std::string config_reference() {
    std::ostringstream os;
    std::string section;
    for (const auto& d : kKeys) {
        std::string key = d.key;
        std::string sec = key.substr(0, key.find('.'));
        if (sec != section) {
            os << "[" << sec << "]\n";
            section = sec;
        }
        os << "  " << std::left << std::setw(18) << key.substr(key.find('.') + 1) << " default: "
           << std::setw(20) << (*d.def ? d.def : "(unset)") << " " << d.help << "\n";
    }
    return os.str();
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto fail = [&](const std::string& why) {
            throw Error(ErrorKind::Parse, "line " + std::to_string(lineno) + ": " + why);
        };
        if (line.front() == '[') {
            if (line.back() != ']') fail("unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "domain" && section != "norm" && section != "solver" && section != "sweep" &&
                section != "output")
                fail("unknown section [" + section + "]");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) fail("expected key = value");
        std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.empty()) fail("missing key");
        if (value.empty()) fail("missing value for '" + key + "'");
        std::string full = key.find('.') != std::string::npos ? key : section + "." + key;
        if (key.find('.') == std::string::npos && section.empty()) fail("key '" + key + "' outside a section");
        if (!known_key(full)) fail("unknown key '" + full + "'");
        if (cfg.raw.count(full)) fail("duplicate key '" + full + "'");
        cfg.raw[full] = value;
    }

    std::string canon;
    for (const auto& [k, v] : cfg.raw) canon += k + "=" + v + "\n";
    cfg.hash = fnv1a64(canon);

    Reader r(cfg.raw);
    std::string kind = r.str("domain.kind", "box");
    int dim = infer_dim(r, kind);
    if (dim < 1 || dim > 3) invalid("domain.dim", "must be 1, 2 or 3");
    cfg.norm = read_norm(r, dim);
    cfg.domain = read_domain(r, cfg.norm, dim);
    cfg.resolution = r.num("domain.resolution", 64);
    positive("domain.resolution", cfg.resolution);

    std::string polar = r.str("norm.polar", "closed");
    if (polar != "closed" && polar != "numeric") invalid("norm.polar", "expected closed or numeric");
    cfg.polar = polar == "closed" ? PolarMode::ClosedForm : PolarMode::Numeric;
    for (const auto& p : r.groups("norm.points")) cfg.points.push_back(Reader::to_vec("norm.points", p));

    SolverConfig& s = cfg.solver;
    s.distance_method = r.str("solver.distance", "sweep");
    if (s.distance_method != "sweep" && s.distance_method != "bruteforce" && s.distance_method != "compare")
        invalid("solver.distance", "expected sweep, bruteforce or compare");
    s.sweep.tol_factor = r.num("solver.tol_factor", s.sweep.tol_factor);
    positive("solver.tol_factor", s.sweep.tol_factor);
    s.sweep.max_rounds = static_cast<int>(r.integer("solver.max_rounds", s.sweep.max_rounds));
    positive("solver.max_rounds", s.sweep.max_rounds);
    s.sweep.ridge_tau = r.num("solver.ridge_tau", s.sweep.ridge_tau);
    positive("solver.ridge_tau", s.sweep.ridge_tau);
    s.descent.max_iters = static_cast<int>(r.integer("solver.max_iters", s.descent.max_iters));
    positive("solver.max_iters", s.descent.max_iters);
    s.descent.tol = r.num("solver.descent_tol", s.descent.tol);
    positive("solver.descent_tol", s.descent.tol);
    std::string mode = r.str("solver.mode", "distributional");
    if (mode != "distributional" && mode != "pointwise") invalid("solver.mode", "expected distributional or pointwise");
    s.superharmonic.mode = mode == "pointwise" ? SuperharmonicMode::Pointwise : SuperharmonicMode::Distributional;
    s.superharmonic.tol = r.num("solver.superharmonic_tol", -1.0);
    long bumps = r.integer("solver.min_bumps", 200);
    positive("solver.min_bumps", static_cast<double>(bumps));
    s.superharmonic.min_bumps = static_cast<std::size_t>(bumps);
    if (r.has("solver.expect")) s.expect_superharmonic = r.flag("solver.expect", true);
    s.expect_min = r.opt("solver.expect_min");
    s.expect_max = r.opt("solver.expect_max");
    s.duality_points = static_cast<int>(r.integer("solver.duality_points", 1000));
    positive("solver.duality_points", s.duality_points);

    SweepConfig& w = cfg.sweep;
    w.theta = r.num("sweep.theta", w.theta);
    w.epsilons = r.list("sweep.epsilons", w.epsilons);
    for (double e : w.epsilons) positive("sweep.epsilons", e);
    w.betas = r.list("sweep.betas", w.betas);
    std::string cutoff = r.str("sweep.cutoff", "global");
    if (cutoff == "local") {
        w.cutoff.kind = Cutoff::Local;
        if (!r.has("sweep.cutoff_x0")) invalid("sweep.cutoff_x0", "required for a local cutoff");
        w.cutoff.x0 = r.vec("sweep.cutoff_x0", Vec());
        w.cutoff.delta = r.num("sweep.cutoff_delta", 0.0);
        positive("sweep.cutoff_delta", w.cutoff.delta);
        if (w.cutoff.x0.size() != dim) invalid("sweep.cutoff_x0", "dimension differs from the domain");
    } else if (cutoff != "global") {
        invalid("sweep.cutoff", "expected global or local");
    }
    std::string quad = r.str("sweep.quadrature", "profile");
    if (quad != "profile" && quad != "midpoint") invalid("sweep.quadrature", "expected profile or midpoint");
    w.profile = quad == "profile";
    w.suite_size = static_cast<int>(r.integer("sweep.suite_size", w.suite_size));
    positive("sweep.suite_size", w.suite_size);
    w.slope_tol = r.opt("sweep.slope_tol");
    w.ratio_max = r.opt("sweep.ratio_max");
    w.a_est_max = r.opt("sweep.a_est_max");
    w.g15_factor = r.opt("sweep.g15_factor");
    if (r.has("sweep.g2_band")) {
        auto band = r.list("sweep.g2_band", {});
        if (band.size() != 2 || !(band[0] <= band[1])) invalid("sweep.g2_band", "expected lo,hi with lo <= hi");
        w.g2_lo = band[0];
        w.g2_hi = band[1];
    }
    w.deficit_tol = r.opt("sweep.deficit_tol");
    w.quotient_min = r.opt("sweep.quotient_min");

    cfg.output.dir = r.str("output.dir", "out");
    long seed = r.integer("output.seed", 1);
    if (seed < 0) invalid("output.seed", "must be nonnegative");
    cfg.output.seed = static_cast<std::uint64_t>(seed);
    cfg.output.subcommand = r.str("output.subcommand", "");
    cfg.output.dump_field = r.flag("output.dump_field", true);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace finhardy
