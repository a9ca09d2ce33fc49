#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "jpo/methods/methods.hpp"

namespace jpo::methods {

const char* method_name(MethodKind m) {
    switch (m) {
        case MethodKind::jpo: return "jpo";
        case MethodKind::supervised: return "supervised";
        case MethodKind::neural_adjoint: return "neural-adjoint";
        case MethodKind::bfgs: return "bfgs";
        case MethodKind::gd: return "gd";
    }
    return "?";
}

MethodKind parse_method(const std::string& s) {
    if (s == "jpo") return MethodKind::jpo;
    if (s == "supervised") return MethodKind::supervised;
    if (s == "neural-adjoint" || s == "neural_adjoint" || s == "adjoint") return MethodKind::neural_adjoint;
    if (s == "bfgs") return MethodKind::bfgs;
    if (s == "gd") return MethodKind::gd;
    throw std::invalid_argument("unknown method '" + s + "' (expected jpo, supervised, neural-adjoint, bfgs or gd)");
}

std::vector<double> MethodResult::outcome_loss() const {
    if (refinement) return refinement->loss;
    return method == MethodKind::supervised ? final_loss : best_loss;
}

const std::vector<std::vector<double>>& MethodResult::refine_start() const {
    return method == MethodKind::supervised ? final : best;
}

namespace {
// NaN and +inf both count as worse than any finite loss
bool better(double a, double b) {
    if (std::isnan(a)) return false;
    if (std::isnan(b)) return true;
    return a < b;
}
}  // namespace

void MethodResult::log(std::size_t iter, const std::vector<std::vector<double>>& xs, const std::vector<double>& losses) {
    if (xs.size() != losses.size()) throw std::invalid_argument("MethodResult::log: estimate and loss counts differ");
    if (!history.empty() && xs.size() != history.front().size())
        throw std::invalid_argument("MethodResult::log: example count changed between entries");
    iteration.push_back(iter);
    history.push_back(xs);
    history_loss.push_back(losses);
    if (best.empty()) {
        best = xs;
        best_loss = losses;
    } else {
        for (std::size_t i = 0; i < xs.size(); ++i)
            if (better(losses[i], best_loss[i])) best[i] = xs[i], best_loss[i] = losses[i];
    }
    final = xs;
    final_loss = losses;
}

namespace {

NamedArray flatten3(std::string name, const std::vector<std::vector<std::vector<double>>>& v) {
    NamedArray a;
    a.name = std::move(name);
    const std::size_t k = v.size(), n = k ? v[0].size() : 0, d = n ? v[0][0].size() : 0;
    a.dims = {k, n, d};
    a.data.reserve(k * n * d);
    for (const auto& rows : v)
        for (const auto& r : rows) a.data.insert(a.data.end(), r.begin(), r.end());
    return a;
}

std::vector<std::vector<std::vector<double>>> unflatten3(const NamedArray& a) {
    if (a.dims.size() != 3) throw std::runtime_error("container: history array '" + a.name + "' must be rank 3");
    const std::size_t k = a.dims[0], n = a.dims[1], d = a.dims[2];
    std::vector<std::vector<std::vector<double>>> v(k, std::vector<std::vector<double>>(n));
    for (std::size_t e = 0; e < k; ++e)
        for (std::size_t i = 0; i < n; ++i) {
            const auto* p = a.data.data() + (e * n + i) * d;
            v[e][i].assign(p, p + d);
        }
    return v;
}

template <typename T>
std::vector<double> as_doubles(const std::vector<T>& v) {
    return std::vector<double>(v.begin(), v.end());
}

}  // namespace

Container MethodResult::to_container() const {
    Container c;
    c.kind = PayloadKind::method_result;
    c.family = static_cast<std::uint32_t>(family);
    c.n = size();
    c.seed = seed;
    c.hash = static_cast<std::uint64_t>(method);
    c.add("iteration", {iteration.size()}, as_doubles(iteration));
    c.arrays.push_back(flatten3("history", history));
    c.arrays.push_back(pack_rows("history_loss", history_loss));
    c.arrays.push_back(pack_rows("best", best));
    c.add("best_loss", {best_loss.size()}, best_loss);
    c.arrays.push_back(pack_rows("final", final));
    c.add("final_loss", {final_loss.size()}, final_loss);
    c.add("learning_rate", {1}, {learning_rate});
    if (refinement) {
        c.arrays.push_back(pack_rows("refined", refinement->x));
        c.add("refined_loss", {refinement->loss.size()}, refinement->loss);
        c.add("refined_iterations", {refinement->iterations.size()}, as_doubles(refinement->iterations));
        std::vector<double> reason;
        for (auto r : refinement->reason) reason.push_back(static_cast<double>(r));
        c.add("refined_reason", {reason.size()}, reason);
        c.add("refined_start_loss", {refinement->start_loss.size()}, refinement->start_loss);
    }
    return c;
}

MethodResult MethodResult::from_container(const Container& c) {
    if (c.kind != PayloadKind::method_result) throw std::runtime_error("container does not hold a method result");
    MethodResult r;
    r.method = static_cast<MethodKind>(c.hash);
    (void)method_name(r.method);
    r.family = static_cast<prob::Family>(c.family);
    r.seed = c.seed;
    for (double v : c.get("iteration").data) r.iteration.push_back(static_cast<std::size_t>(v));
    r.history = unflatten3(c.get("history"));
    r.history_loss = unpack_rows(c.get("history_loss"));
    r.best = unpack_rows(c.get("best"));
    r.best_loss = c.get("best_loss").data;
    r.final = unpack_rows(c.get("final"));
    r.final_loss = c.get("final_loss").data;
    r.learning_rate = c.get("learning_rate").data.at(0);
    if (c.has("refined")) {
        Refinement f;
        f.x = unpack_rows(c.get("refined"));
        f.loss = c.get("refined_loss").data;
        for (double v : c.get("refined_iterations").data) f.iterations.push_back(static_cast<std::size_t>(v));
        for (double v : c.get("refined_reason").data) f.reason.push_back(static_cast<opt::Termination>(static_cast<int>(v)));
        f.start_loss = c.get("refined_start_loss").data;
        r.refinement = std::move(f);
    }
    if (r.final_loss.size() != c.n) throw std::runtime_error("container: example count mismatch");
    return r;
}

std::string MethodResult::csv_digest() const {
    std::string out = "example,iteration,loss";
    const std::size_t d = final.empty() ? 0 : final[0].size();
    for (std::size_t j = 0; j < d; ++j) out += ",x" + std::to_string(j);
    out += '\n';
    char buf[64];
    auto row = [&](std::size_t i, long long it, double loss, const std::vector<double>& x) {
        out += std::to_string(i) + ',' + std::to_string(it);
        std::snprintf(buf, sizeof buf, ",%.17g", loss);
        out += buf;
        for (double v : x) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            out += buf;
        }
        out += '\n';
    };
    for (std::size_t i = 0; i < size(); ++i) {
        for (std::size_t k = 0; k < history.size(); ++k)
            row(i, static_cast<long long>(iteration[k]), history_loss[k][i], history[k][i]);
        if (refinement) row(i, -1, refinement->loss[i], refinement->x[i]);
    }
    return out;
}

}  // namespace jpo::methods
