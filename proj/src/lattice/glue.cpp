#include <algorithm>
#include <deque>

#include "semitoric/lattice.hpp"

namespace semitoric::lattice {
namespace {

bool shares_points(const Labelling& a, const Labelling& b, const Labelling& c) {
    for (const auto& [idx, l] : a.assignment)
        if (b.assignment.count(idx) && c.assignment.count(idx)) return true;
    return false;
}

// Transition from chart `from` into chart `to`, or nullopt when the overlap is too small.
std::optional<ChartTransition> try_transition(const PointCloud& cloud, const Labelling& from, const Labelling& to) {
    try {
        return transition(cloud, from, to);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::TooSparse) return std::nullopt;
        throw;
    }
}

}  // namespace

GlobalLabelling glue_global(const std::map<int, PointCloud>& clouds, const std::vector<ChartInput>& charts) {
    if (charts.empty()) throw Error(ErrorKind::Config, "no charts to glue");
    GlobalLabelling out;
    out.charts = charts;
    const std::size_t m = charts.size();
    std::map<std::pair<std::size_t, std::size_t>, TransitionFamily> families;

    for (const auto& [k, cloud] : clouds) {
        std::vector<const Labelling*> labs(m, nullptr);
        for (std::size_t c = 0; c < m; ++c) {
            const auto it = charts[c].by_k.find(k);
            if (it != charts[c].by_k.end()) labs[c] = &it->second;
        }
        if (!labs[0]) continue;

        // Pairwise transitions on every overlap.
        std::map<std::pair<std::size_t, std::size_t>, ChartTransition> pair_t;
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b) {
                if (a == b || !labs[a] || !labs[b]) continue;
                if (const auto t = try_transition(cloud, *labs[a], *labs[b])) pair_t.emplace(std::pair{a, b}, *t);
            }
        for (const auto& [key, t] : pair_t) {
            if (key.first > key.second) continue;
            auto [it, fresh] = families.try_emplace(key);
            TransitionFamily& fam = it->second;
            if (fresh) {
                fam.from = key.first;
                fam.to = key.second;
                fam.a = t.a;
            } else if (fam.a != t.a) {
                throw Error(ErrorKind::Inconsistent, "transition matrix changes with k");
            }
            fam.kappa_by_k[k] = t.kappa;
        }

        // Cocycle condition on triple overlaps.
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b)
                for (std::size_t c = 0; c < m; ++c) {
                    if (a == b || b == c || a == c) continue;
                    const auto ab = pair_t.find({a, b}), bc = pair_t.find({b, c}), ac = pair_t.find({a, c});
                    if (ab == pair_t.end() || bc == pair_t.end() || ac == pair_t.end()) continue;
                    if (!shares_points(*labs[a], *labs[b], *labs[c])) continue;
                    if (!(bc->second.compose(ab->second) == ac->second))
                        throw Error(ErrorKind::CocycleViolation, "transitions do not compose on a triple overlap");
                }

        // Propagate the frame of chart 0 along chains of overlaps.
        std::vector<std::optional<IntAffine>> to_global(m);
        to_global[0] = IntAffine{};
        std::deque<std::size_t> queue{0};
        while (!queue.empty()) {
            const std::size_t a = queue.front();
            queue.pop_front();
            for (std::size_t b = 0; b < m; ++b) {
                if (to_global[b]) continue;
                const auto it = pair_t.find({b, a});
                if (it == pair_t.end()) continue;
                to_global[b] = to_global[a]->compose(it->second);
                queue.push_back(b);
            }
        }

        Labelling global;
        global.kind = LabelKind::Regular;
        std::map<std::size_t, std::size_t> owner;
        for (std::size_t c = 0; c < m; ++c) {
            if (!labs[c] || !to_global[c]) continue;
            for (const auto& [idx, lab] : labs[c]->assignment) {
                const Label g = to_global[c]->apply(lab);
                const auto [it, fresh] = global.assignment.emplace(idx, g);
                if (fresh) {
                    owner[idx] = c;
                    continue;
                }
                if (it->second == g) continue;
                const std::size_t other = owner[idx];
                bool triple = false;
                for (std::size_t t = 0; t < m && !triple; ++t)
                    if (t != c && t != other && labs[t]) triple = shares_points(*labs[c], *labs[other], *labs[t]);
                throw Error(triple ? ErrorKind::CocycleViolation : ErrorKind::NonSimplyConnected,
                            "charts disagree after gluing");
            }
        }
        std::vector<PhiSample> phi;
        const double h = cloud.hbar();
        for (const auto& [idx, lab] : global.assignment)
            phi.push_back({idx, cloud.points[idx], {h * lab.j, h * lab.l}});
        out.phi_samples[k] = std::move(phi);
        out.global[k] = std::move(global);
    }
    for (auto& [key, fam] : families) out.transitions.push_back(fam);
    return out;
}

}  // namespace semitoric::lattice
