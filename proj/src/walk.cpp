#include "polymer/walk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace polymer {

const Site& JumpPath::position_at(double s) const {
    // at a jump time the walk is already at the new position
    const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), s);
    return positions[static_cast<std::size_t>(it - jump_times.begin())];
}

void JumpPath::validate() const {
    if (horizon <= 0.0)
        throw std::invalid_argument("JumpPath: horizon must be positive");
    if (positions.size() != jump_times.size() + 1)
        throw std::invalid_argument("JumpPath: positions/jump_times length mismatch");
    if (positions[0] != start)
        throw std::invalid_argument("JumpPath: positions[0] != start");
    double prev = 0.0;
    for (double s : jump_times) {
        if (s <= 0.0 || s > horizon || s < prev)
            throw std::invalid_argument("JumpPath: jump times must be nondecreasing in (0, t]");
        prev = s;
    }
    const int d = dimension();
    for (std::size_t j = 1; j < positions.size(); ++j) {
        if (static_cast<int>(positions[j].size()) != d)
            throw std::invalid_argument("JumpPath: position dimension mismatch");
        int l1 = 0;
        for (int k = 0; k < d; ++k)
            l1 += std::abs(positions[j][k] - positions[j - 1][k]);
        if (l1 != 1)
            throw std::invalid_argument("JumpPath: step is not nearest-neighbor");
    }
}

std::string JumpPath::serialize() const {
    std::ostringstream out;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%a", horizon);
    out << "(" << buf << ", (";
    for (std::size_t k = 0; k < start.size(); ++k)
        out << (k ? " " : "") << start[k];
    out << "),";
    for (std::size_t j = 0; j < jump_times.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%a", jump_times[j]);
        out << " (" << buf << ", (";
        const Site& x = positions[j + 1];
        for (std::size_t k = 0; k < x.size(); ++k)
            out << (k ? " " : "") << x[k];
        out << "))";
    }
    out << ")";
    return out.str();
}

namespace {

struct RecordScanner {
    const std::string& s;
    std::size_t i = 0;

    [[noreturn]] void fail(const std::string& why) const {
        throw std::runtime_error("JumpPath::parse: " + why + " at position " +
                                 std::to_string(i));
    }
    void skip_soft() {
        while (i < s.size() && (s[i] == ' ' || s[i] == ',' || s[i] == '\t'))
            ++i;
    }
    void expect(char c) {
        skip_soft();
        if (i >= s.size() || s[i] != c)
            fail(std::string("expected '") + c + "'");
        ++i;
    }
    bool peek_is(char c) {
        skip_soft();
        return i < s.size() && s[i] == c;
    }
    double number() {
        skip_soft();
        char* end = nullptr;
        const double v = std::strtod(s.c_str() + i, &end);
        if (end == s.c_str() + i)
            fail("expected a number");
        i = static_cast<std::size_t>(end - s.c_str());
        return v;
    }
    Site coords() {
        expect('(');
        Site x;
        while (!peek_is(')'))
            x.push_back(static_cast<int>(number()));
        expect(')');
        return x;
    }
};

} // namespace

JumpPath JumpPath::parse(const std::string& record) {
    RecordScanner sc{record};
    JumpPath p;
    sc.expect('(');
    p.horizon = sc.number();
    p.start = sc.coords();
    p.positions.push_back(p.start);
    while (!sc.peek_is(')')) {
        sc.expect('(');
        p.jump_times.push_back(sc.number());
        p.positions.push_back(sc.coords());
        sc.expect(')');
    }
    sc.expect(')');
    p.validate();
    return p;
}

namespace {

JumpPath sample_with_rate(Rng& rng, int d, double t, double rate) {
    if (d < 1)
        throw std::invalid_argument("sample_path: d must be >= 1");
    if (t <= 0.0)
        throw std::invalid_argument("sample_path: t must be positive");
    JumpPath p;
    p.horizon = t;
    p.start.assign(d, 0);
    p.positions.push_back(p.start);
    double s = rng.exponential(rate);
    while (s < t) {
        const int dir = rng.uniform_int(2 * d);
        Site x = p.positions.back();
        x[dir / 2] += (dir % 2) ? 1 : -1;
        p.jump_times.push_back(s);
        p.positions.push_back(std::move(x));
        s += rng.exponential(rate);
    }
    return p;
}

} // namespace

JumpPath sample_path(Rng& rng, int d, double t, double rate) {
    return sample_with_rate(rng, d, t, rate < 0.0 ? 2.0 * d : rate);
}

JumpPath difference_walk_sampler(Rng& rng, int d, double t) {
    return sample_with_rate(rng, d, t, 4.0 * d);
}

std::vector<std::vector<Site>> enumerate_discrete_paths(int d, int n) {
    if (d < 1 || n < 0)
        throw std::invalid_argument("enumerate_discrete_paths: need d >= 1, n >= 0");
    double count = std::pow(2.0 * d, n);
    if (count > 1e7)
        throw std::length_error("enumerate_discrete_paths: (2d)^n exceeds 10^7");

    std::vector<std::vector<Site>> out;
    out.reserve(static_cast<std::size_t>(count));
    std::vector<Site> current;
    current.push_back(Site(d, 0));
    // DFS over direction choices, directions ordered (axis, -/+)
    std::vector<int> dirs(n, 0);
    int depth = 0;
    while (true) {
        if (depth == n) {
            out.push_back(current);
            if (n == 0)
                break;
            --depth;
            current.pop_back();
            while (depth >= 0 && dirs[depth] == 2 * d - 1) {
                dirs[depth] = 0;
                --depth;
                if (depth >= 0)
                    current.pop_back();
            }
            if (depth < 0)
                break;
            ++dirs[depth];
        } else {
            Site x = current.back();
            x[dirs[depth] / 2] += (dirs[depth] % 2) ? 1 : -1;
            current.push_back(std::move(x));
            ++depth;
        }
    }
    return out;
}

double intersection_time(const JumpPath& p1, const JumpPath& p2) {
    if (p1.horizon != p2.horizon)
        throw std::domain_error("intersection_time: horizon mismatch");
    if (p1.dimension() != p2.dimension())
        throw std::domain_error("intersection_time: dimension mismatch");

    // merged breakpoints
    std::vector<double> cuts;
    cuts.reserve(p1.jump_times.size() + p2.jump_times.size() + 2);
    cuts.push_back(0.0);
    cuts.insert(cuts.end(), p1.jump_times.begin(), p1.jump_times.end());
    cuts.insert(cuts.end(), p2.jump_times.begin(), p2.jump_times.end());
    cuts.push_back(p1.horizon);
    std::sort(cuts.begin(), cuts.end());

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        if (b <= a || a >= p1.horizon)
            continue;
        if (p1.position_at(a) == p2.position_at(a))
            total += b - a;
    }
    return total;
}

double occupation_time(const JumpPath& p, const Site& site) {
    double total = 0.0;
    double prev = 0.0;
    for (std::size_t j = 0; j < p.positions.size(); ++j) {
        const double next = (j < p.jump_times.size()) ? p.jump_times[j] : p.horizon;
        if (p.positions[j] == site)
            total += next - prev;
        prev = next;
    }
    return total;
}

double simplex_volume(int n, double t) {
    if (n < 0 || t <= 0.0)
        throw std::invalid_argument("simplex_volume: need n >= 0, t > 0");
    long double v = 1.0L;
    for (int i = 1; i <= n; ++i)
        v *= static_cast<long double>(t) / i;
    return static_cast<double>(v);
}

} // namespace polymer
