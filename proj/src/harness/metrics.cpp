#include "jpo/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace jpo::harness {

bool losses_equal(double a, double b, double rel_tol, double floor) {
    if (a == b) return true;
    if (std::isnan(a) || std::isnan(b)) return false;
    if (std::abs(a) <= floor && std::abs(b) <= floor) return true;
    return std::abs(a - b) <= rel_tol * std::max(std::abs(a), std::abs(b));
}

double fraction_better(const std::vector<double>& method, const std::vector<double>& reference, double rel_tol,
                       double floor) {
    if (method.size() != reference.size()) throw std::invalid_argument("fraction_better: loss lists differ in length");
    if (method.empty()) throw std::invalid_argument("fraction_better: empty loss lists");
    double better = 0, equal = 0;
    for (std::size_t i = 0; i < method.size(); ++i) {
        const double a = method[i], b = reference[i];
        if (losses_equal(a, b, rel_tol, floor))
            ++equal;
        else if (!std::isnan(a) && (std::isnan(b) || a < b))
            ++better;
    }
    const double n = static_cast<double>(method.size());
    return better / n + equal / (2 * n);
}

ErrorBar errorbar(const std::vector<double>& f, std::size_t n) {
    if (f.empty()) throw std::invalid_argument("errorbar: need at least one seed");
    if (n == 0) throw std::invalid_argument("errorbar: data set size must be positive");
    ErrorBar e;
    if (std::all_of(f.begin(), f.end(), [&](double v) { return v == f.front(); })) {
        e.mean = f.front();
        return e;
    }
    for (double v : f) e.mean += v;
    e.mean /= static_cast<double>(f.size());
    double ss = 0;
    for (double v : f) ss += (v - e.mean) * (v - e.mean);
    e.bar = std::sqrt(ss) / static_cast<double>(n);
    return e;
}

ImprovementSplit improvement_split(const std::vector<double>& pre, const std::vector<double>& post,
                                   const std::vector<double>& initial) {
    if (pre.size() != post.size() || pre.size() != initial.size())
        throw std::invalid_argument("improvement_split: loss lists differ in length");
    ImprovementSplit s;
    double sum = 0;
    for (std::size_t i = 0; i < pre.size(); ++i) {
        const double total = initial[i] - post[i];
        if (!(total > 0) || !std::isfinite(total) || !std::isfinite(pre[i])) {
            ++s.excluded;
            continue;
        }
        sum += std::clamp((initial[i] - pre[i]) / total, 0.0, 1.0);
        ++s.used;
    }
    s.fraction = s.used ? sum / static_cast<double>(s.used) : 0.0;
    return s;
}

}  // namespace jpo::harness
