#include "polymer/env.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "polymer/rng.hpp"

namespace polymer {

EnvironmentSheet::EnvironmentSheet(int dimension, std::uint64_t master_seed)
    : d_(dimension), seed_(master_seed) {
    if (dimension < 1)
        throw std::invalid_argument("EnvironmentSheet: dimension must be >= 1");
}

SiteTimeline& EnvironmentSheet::timeline(const Site& site) {
    if (static_cast<int>(site.size()) != d_)
        throw std::invalid_argument("EnvironmentSheet: site dimension mismatch");
    auto [it, inserted] = timelines_.try_emplace(site);
    if (inserted)
        it->second.points.emplace(0.0, 0.0);
    return it->second;
}

double EnvironmentSheet::next_normal(const Site& site, SiteTimeline& tl) {
    const std::uint64_t key = site_stream_key(seed_, site);
    return counter_normal(key, tl.next_ordinal++);
}

double EnvironmentSheet::value_at(const Site& site, double t) {
    if (t < 0.0)
        throw std::domain_error("EnvironmentSheet::value_at: negative time");
    SiteTimeline& tl = timeline(site);
    if (t == 0.0)
        return 0.0;

    auto it = tl.points.lower_bound(t);
    if (it != tl.points.end() && it->first == t)
        return it->second;

    if (it == tl.points.end()) {
        // extend past the last recorded point
        const auto& last = *tl.points.rbegin();
        const double v = last.second +
                         std::sqrt(t - last.first) * next_normal(site, tl);
        tl.points.emplace(t, v);
        return v;
    }

    // Brownian bridge between the two recorded neighbors
    const auto& [t2, v2] = *it;
    const auto& [t1, v1] = *std::prev(it);
    const double mean = v1 + (v2 - v1) * (t - t1) / (t2 - t1);
    const double var = (t - t1) * (t2 - t) / (t2 - t1);
    const double v = mean + std::sqrt(var) * next_normal(site, tl);
    tl.points.emplace(t, v);
    return v;
}

double EnvironmentSheet::increment(const Site& site, double t1, double t2) {
    if (t1 < 0.0 || t1 > t2)
        throw std::domain_error("EnvironmentSheet::increment: need 0 <= t1 <= t2");
    if (t1 == t2) {
        value_at(site, t1);
        return 0.0;
    }
    const double v1 = value_at(site, t1);
    const double v2 = value_at(site, t2);
    return v2 - v1;
}

std::string EnvironmentSheet::snapshot() const {
    std::ostringstream out;
    out << "POLYENV 1\n";
    out << "d " << d_ << "\n";
    out << "seed " << seed_ << "\n";
    out << "sites " << timelines_.size() << "\n";
    char buf[64];
    for (const auto& [site, tl] : timelines_) {
        out << "site";
        for (int c : site)
            out << ' ' << c;
        out << ' ' << tl.points.size() << ' ' << tl.next_ordinal << "\n";
        for (const auto& [t, v] : tl.points) {
            std::snprintf(buf, sizeof buf, "p %a %a\n", t, v);
            out << buf;
        }
    }
    return out.str();
}

namespace {

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& line) {
    throw std::runtime_error("EnvironmentSheet::restore: malformed record at line " +
                             std::to_string(line_no) + ": '" + line + "'");
}

} // namespace

EnvironmentSheet EnvironmentSheet::restore(const std::string& blob) {
    std::istringstream in(blob);
    std::string line;
    std::size_t line_no = 0;

    auto next_line = [&]() {
        if (!std::getline(in, line))
            parse_fail(line_no + 1, "<eof>");
        ++line_no;
    };

    next_line();
    if (line != "POLYENV 1")
        parse_fail(line_no, line);

    int d = 0;
    std::uint64_t seed = 0;
    std::size_t n_sites = 0;
    next_line();
    if (std::sscanf(line.c_str(), "d %d", &d) != 1 || d < 1)
        parse_fail(line_no, line);
    next_line();
    if (std::sscanf(line.c_str(), "seed %llu",
                    reinterpret_cast<unsigned long long*>(&seed)) != 1)
        parse_fail(line_no, line);
    next_line();
    unsigned long long ns = 0;
    if (std::sscanf(line.c_str(), "sites %llu", &ns) != 1)
        parse_fail(line_no, line);
    n_sites = ns;

    EnvironmentSheet sheet(d, seed);
    for (std::size_t i = 0; i < n_sites; ++i) {
        next_line();
        std::istringstream hdr(line);
        std::string tag;
        hdr >> tag;
        if (tag != "site")
            parse_fail(line_no, line);
        Site site(d);
        for (int k = 0; k < d; ++k)
            if (!(hdr >> site[k]))
                parse_fail(line_no, line);
        std::size_t n_points = 0;
        std::uint64_t ordinal = 0;
        if (!(hdr >> n_points >> ordinal))
            parse_fail(line_no, line);

        SiteTimeline tl;
        tl.next_ordinal = ordinal;
        for (std::size_t p = 0; p < n_points; ++p) {
            next_line();
            if (line.size() < 2 || line[0] != 'p' || line[1] != ' ')
                parse_fail(line_no, line);
            char* end = nullptr;
            const char* s = line.c_str() + 2;
            const double t = std::strtod(s, &end);
            if (end == s)
                parse_fail(line_no, line);
            s = end;
            const double v = std::strtod(s, &end);
            if (end == s)
                parse_fail(line_no, line);
            tl.points.emplace(t, v);
        }
        sheet.timelines_[site] = std::move(tl);
    }
    return sheet;
}

} // namespace polymer
