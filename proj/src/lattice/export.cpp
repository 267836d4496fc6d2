#include <ostream>

#include "json.hpp"
#include "semitoric/lattice.hpp"
#include "semitoric/models.hpp"

namespace semitoric::lattice {
namespace {

nlohmann::json shape_json(const Shape& s) {
    if (const auto* b = std::get_if<Ball>(&s))
        return {{"ball", {{"center", {b->center.x, b->center.y}}, {"radius", b->radius}}}};
    const Rect& r = std::get<Rect>(s);
    auto bound = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    return {{"rect", {{"x", {bound(r.xs.lo), bound(r.xs.hi)}}, {"y", {bound(r.ys.lo), bound(r.ys.hi)}}}}};
}

}  // namespace

void write_labelling_csv(std::ostream& out, const PointCloud& cloud, const Labelling& labelling) {
    out << "k,x,y,j,l\n";
    for (const auto& [idx, lab] : labelling.assignment) {
        const Point2 p = cloud.points.at(idx);
        out << cloud.k << ',' << models::format_double(p.x) << ',' << models::format_double(p.y) << ',' << lab.j
            << ',' << lab.l << '\n';
    }
}

void write_global_json(std::ostream& out, const GlobalLabelling& global) {
    nlohmann::json doc;
    doc["charts"] = nlohmann::json::array();
    for (const ChartInput& c : global.charts) {
        nlohmann::json chart;
        nlohmann::json holes = nlohmann::json::array();
        for (const Shape& h : c.region.holes) holes.push_back(shape_json(h));
        chart["region"] = {{"base", shape_json(c.region.base)}, {"holes", holes}};
        nlohmann::json labels = nlohmann::json::object();
        for (const auto& [k, lab] : c.by_k) {
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& [idx, l] : lab.assignment) rows.push_back({idx, l.j, l.l});
            labels[std::to_string(k)] = rows;
        }
        chart["labels"] = labels;
        doc["charts"].push_back(chart);
    }
    doc["transitions"] = nlohmann::json::array();
    for (const TransitionFamily& t : global.transitions) {
        nlohmann::json kappa = nlohmann::json::object();
        for (const auto& [k, v] : t.kappa_by_k) kappa[std::to_string(k)] = {v[0], v[1]};
        doc["transitions"].push_back(
            {{"pair", {t.from, t.to}}, {"A", {{t.a[0][0], t.a[0][1]}, {t.a[1][0], t.a[1][1]}}}, {"kappa", kappa}});
    }
    doc["nu_freedom"] = global.nu_freedom;
    out << doc.dump(1) << '\n';
}

}  // namespace semitoric::lattice
