#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "finhardy/domain.hpp"
#include "finhardy/hardy.hpp"
#include "finhardy/norm.hpp"
#include "finhardy/operators.hpp"

namespace finhardy {

struct SolverConfig {
    std::string distance_method = "sweep";  // sweep | bruteforce | compare
    SweepOptions sweep;
    DescentOptions descent;
    SuperharmonicOptions superharmonic;
    std::optional<bool> expect_superharmonic;
    std::optional<double> expect_min, expect_max;  // bounds on the estimated quotient
    int duality_points = 1000;
};

struct SweepConfig {
    double theta = 0.75;
    std::vector<double> epsilons = {0.2, 0.1, 0.05, 0.025};
    std::vector<double> betas = {0.0, 0.5, 1.0, -1.5};
    Cutoff cutoff;
    bool profile = true;
    int suite_size = 50;
    // checks applied when present
    std::optional<double> slope_tol;   // |slope + 1 + beta| for beta > -1
    std::optional<double> ratio_max;   // max/min J for beta < -1
    std::optional<double> a_est_max;   // A_est at the smallest epsilon
    std::optional<double> g15_factor;  // ratio_g15(last) <= factor * ratio_g15(first)
    std::optional<double> g2_lo, g2_hi;
    std::optional<double> deficit_tol;  // deficit >= -tol * hardy_mass
    std::optional<double> quotient_min; // sine-suite quotients >= quotient_min
};

struct OutputConfig {
    std::string dir = "out";
    std::uint64_t seed = 1;
    std::string subcommand;  // used by repro-all
    bool dump_field = true;
};

struct RunConfig {
    DomainSpec domain;
    double resolution = 64;
    NormDescriptor norm = Euclidean{2};
    PolarMode polar = PolarMode::ClosedForm;
    std::vector<Vec> points;  // for `polar`
    SolverConfig solver;
    SweepConfig sweep;
    OutputConfig output;
    std::map<std::string, std::string> raw;  // canonical key -> value as written
    std::uint64_t hash = 0;
};

// Parses the flat `key = value` grammar. Throws Error(Parse) with a line number or Error(Validation) naming the
// key.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Every accepted key with its default, one per line.
std::string config_reference();

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

}  // namespace finhardy
