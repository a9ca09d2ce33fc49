#include "jpo/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace jpo::ad {

double evaluate(const ScalarFn& f, std::span<const double> point) {
    Tape tape;
    Value x = tape.constant(std::vector<double>(point.begin(), point.end()), {point.size()});
    return f(tape, x).item();
}

std::vector<double> gradient(const ScalarFn& f, std::span<const double> point) {
    Tape tape;
    Value x = tape.variable(std::vector<double>(point.begin(), point.end()), {point.size()});
    Value y = f(tape, x);
    return tape.backward(y).of(x);
}

double check_gradient(const ScalarFn& f, std::span<const double> point, double step) {
    const std::vector<double> ad = gradient(f, point);
    std::vector<double> probe(point.begin(), point.end());
    double worst = 0.0;
    for (std::size_t i = 0; i < probe.size(); ++i) {
        const double x0 = probe[i];
        probe[i] = x0 + step;
        const double fp = evaluate(f, probe);
        probe[i] = x0 - step;
        const double fm = evaluate(f, probe);
        probe[i] = x0;
        const double fd = (fp - fm) / (2.0 * step);
        const double err = std::abs(ad[i] - fd) / (std::abs(ad[i]) + std::abs(fd) + 1e-12);
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace jpo::ad
