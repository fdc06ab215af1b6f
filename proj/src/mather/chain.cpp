#include "matherlab/mather/mather.hpp"

#include <algorithm>

namespace matherlab::mather {

ChainClass chain_class(const weakkam::ActionKernel& K, double c, std::vector<std::pair<double, double>> support,
                       double delta_prime, int cover) {
    weakkam::WeakKamOptions wo;
    wo.cover = cover;
    auto um = weakkam::solve_weak_kam(K, c, weakkam::Direction::backward, wo);
    auto up = weakkam::solve_weak_kam(K, c, weakkam::Direction::forward, wo);
    ChainClass out;
    out.c = c;
    out.alpha = um.alpha;
    out.support = std::move(support);
    out.delta_prime = delta_prime;
    const bool periodic = K.slices() > 1;
    const auto& fm = periodic ? um.extended : um.u;
    const auto& fp = periodic ? up.extended : up.u;
    int anchor = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < fm.size(); ++i)
        if (fm[i] - fp[i] < best) {
            best = fm[i] - fp[i];
            anchor = i;
        }
    out.barrier = weakkam::barrier(fm, fp, anchor, 2 * std::max(um.grid_tol(), 1e-12));
    out.section = periodic ? 0 : -1;
    out.aubry = weakkam::aubry_classes(K, um).mask;
    return out;
}

TransitionChainReport chain_assemble(const std::vector<ChainClass>& path, double alpha_tol) {
    TransitionChainReport r;
    if (path.empty()) return r;
    double lo = path[0].alpha, hi = lo;
    for (const auto& p : path) {
        lo = std::min(lo, p.alpha);
        hi = std::max(hi, p.alpha);
    }
    r.alpha_spread = hi - lo;
    if (r.alpha_spread > alpha_tol)
        throw DomainError("chain_assemble: classes lie on different alpha levels (spread " +
                          std::to_string(r.alpha_spread) + ")");
    for (const auto& p : path) {
        ChainVerdict v;
        v.c = p.c;
        v.section = weakkam::mane_section_analysis(p.barrier, p.section, p.delta_prime, &p.aubry);
        v.h1 = v.section.totally_disconnected;
        const auto& g = p.barrier.B.grid;
        const int n = g.n[0];
        const double h = g.spacing(0);
        bool any = false, inside = false;
        for (int i = 0; i < n; ++i) {
            int idx = g.dims() == 1 || p.section < 0 ? i : g.flat({i, p.section});
            if (!p.barrier.argmin[idx]) continue;
            any = true;
            double x = i * h;
            for (const auto& [a, b] : p.support) {
                double xa = x;
                while (xa < a) xa += g.length[0];
                if (xa <= b) inside = true;
            }
        }
        v.h2 = !p.support.empty() && any && !inside;
        r.classes.push_back(v);
    }
    for (const auto& v : r.classes) {
        if (!v.passes()) break;
        r.chain.push_back(static_cast<int>(r.chain.size()));
    }
    r.complete = r.chain.size() == r.classes.size();
    return r;
}

nlohmann::json to_json(const TransitionChainReport& r) {
    nlohmann::json j;
    j["alpha_spread"] = r.alpha_spread;
    j["complete"] = r.complete;
    j["chain"] = r.chain;
    j["classes"] = nlohmann::json::array();
    for (const auto& v : r.classes)
        j["classes"].push_back(
            {{"c", v.c}, {"h1", v.h1}, {"h2", v.h2}, {"passes", v.passes()}, {"section", weakkam::to_json(v.section)}});
    return j;
}

}  // namespace matherlab::mather
