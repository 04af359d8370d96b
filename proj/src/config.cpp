#include "polymer/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace polymer {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<double> parse_list(const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty())
            continue;
        char* end = nullptr;
        const double v = std::strtod(item.c_str(), &end);
        if (end == item.c_str() || *end != '\0')
            throw std::invalid_argument("config: bad list item '" + item + "'");
        out.push_back(v);
    }
    return out;
}

long parse_long(const std::string& value) {
    char* end = nullptr;
    const long v = std::strtol(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        throw std::invalid_argument("config: bad integer '" + value + "'");
    return v;
}

double parse_double(const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
        throw std::invalid_argument("config: bad number '" + value + "'");
    return v;
}

const std::set<std::string> kExperiments = {
    "partition", "free-energy", "field-sup", "scaling",
    "upsilon",   "disorder",    "overlap",   "c0-pipeline"};

} // namespace

void ExperimentConfig::apply_override(const std::string& key, const std::string& value) {
    if (key == "experiment")
        experiment = value;
    else if (key == "d")
        d = static_cast<int>(parse_long(value));
    else if (key == "beta")
        beta = parse_list(value);
    else if (key == "t")
        t = parse_list(value);
    else if (key == "k_per_unit_time")
        k_per_unit_time = static_cast<int>(parse_long(value));
    else if (key == "n_env")
        n_env = static_cast<int>(parse_long(value));
    else if (key == "n_paths")
        n_paths = parse_long(value);
    else if (key == "n_samples")
        n_samples = parse_long(value);
    else if (key == "quad_samples")
        quad_samples = static_cast<int>(parse_long(value));
    else if (key == "n_max")
        n_max = static_cast<int>(parse_long(value));
    else if (key == "r")
        r = parse_list(value);
    else if (key == "rho")
        rho = parse_list(value);
    else if (key == "varrho")
        varrho = parse_list(value);
    else if (key == "seed")
        seed = static_cast<std::uint64_t>(std::strtoull(value.c_str(), nullptr, 10));
    else if (key == "output_dir")
        output_dir = value;
    else if (key == "worker_count")
        worker_count = static_cast<int>(parse_long(value));
    else if (key == "n_bases")
        n_bases = static_cast<int>(parse_long(value));
    else if (key == "theta")
        theta = parse_double(value);
    else if (key == "proposal_rate")
        proposal_rate = parse_double(value);
    else
        throw std::invalid_argument("config: unknown key '" + key + "'");
}

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
    ExperimentConfig config;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#')
            continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        config.apply_override(trim(stripped.substr(0, eq)),
                              trim(stripped.substr(eq + 1)));
    }
    return config;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
}

std::vector<Diagnostic> validate(const ExperimentConfig& c) {
    std::vector<Diagnostic> out;
    auto fatal = [&](const std::string& m) { out.push_back({true, m}); };
    auto warn = [&](const std::string& m) { out.push_back({false, m}); };

    if (!kExperiments.count(c.experiment))
        fatal("unknown experiment '" + c.experiment + "'");
    if (c.d < 1)
        fatal("d must be >= 1");
    if (c.beta.empty())
        fatal("beta list is empty");
    if (c.t.empty())
        fatal("t list is empty");
    if (c.r.empty())
        fatal("r list is empty");
    if (c.rho.empty())
        fatal("rho list is empty");
    if (c.varrho.empty())
        fatal("varrho list is empty");
    if (c.n_env < 2)
        fatal("n_env must be >= 2");
    if (c.worker_count < 1)
        fatal("worker_count must be >= 1");
    for (double b : c.beta)
        if (b < 0.0)
            fatal("beta must be >= 0");
    for (double tv : c.t)
        if (tv <= 0.0)
            fatal("t must be positive");

    if (c.experiment == "field-sup" || c.experiment == "scaling" ||
        c.experiment == "c0-pipeline") {
        for (double rv : c.r) {
            for (double tv : c.t) {
                const int K = static_cast<int>(
                    std::lround(c.k_per_unit_time * tv * std::max(1.0, rv)));
                const long budget = static_cast<long>(std::floor(rv * tv + 1e-9));
                const double sites = std::pow(2.0 * budget + 1.0, c.d);
                const double states = static_cast<double>(K) * sites * (budget + 1);
                if (states > 1e9)
                    fatal("field-sup at r=" + std::to_string(rv) + ", t=" +
                          std::to_string(tv) + " needs about " +
                          std::to_string(states) + " DP states, above the 1e9 cap");
            }
        }
    }
    if (c.experiment == "partition" || c.experiment == "free-energy") {
        for (double tv : c.t) {
            const double lambda = 2.0 * c.d * tv;
            // Poisson tail above n_max for the series mode forecast
            double pmf = std::exp(-lambda), cdf = pmf;
            for (int k = 1; k <= c.n_max; ++k) {
                pmf *= lambda / k;
                cdf += pmf;
            }
            if (1.0 - cdf > 1e-8)
                warn("series truncation at t=" + std::to_string(tv) + ", n_max=" +
                     std::to_string(c.n_max) + ": Poisson tail " +
                     std::to_string(1.0 - cdf) + " above 1e-8");
        }
    }
    if (c.experiment == "disorder") {
        for (double b : c.beta)
            if (b * b >= 4.0 * c.d)
                warn("beta=" + std::to_string(b) + " has beta^2 >= 4d=" +
                     std::to_string(4 * c.d) +
                     "; local-time MGF bound unavailable");
    }
    return out;
}

} // namespace polymer
