#pragma once

#include <array>
#include <compare>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "semitoric/common.hpp"

namespace semitoric::lattice {

struct Ball {
    Point2 center;
    double radius = 0.0;
};

using Shape = std::variant<Rect, Ball>;

// A rectangle or ball with optional excluded shapes.
struct Region {
    Shape base = Rect::everything();
    std::vector<Shape> holes;

    // Signed distance to the boundary, positive inside.
    double depth(Point2 p) const;
    bool contains(Point2 p) const { return depth(p) >= 0.0; }
};

struct Label {
    int j = 0;
    int l = 0;
    friend auto operator<=>(const Label&, const Label&) = default;
};

struct LabelHash {
    std::size_t operator()(const Label& a) const noexcept {
        return std::hash<long long>{}((static_cast<long long>(a.j) << 32) ^ static_cast<unsigned>(a.l));
    }
};

struct PointCloud {
    int k = 1;
    std::vector<Point2> points;
    Region region;

    double hbar() const { return hbar_of(k); }
};

// Smallest pairwise distance in the cloud (infinity for fewer than two points).
double min_separation(const PointCloud& cloud);

enum class LabelKind { Regular, HalfLattice };

struct Labelling {
    std::map<std::size_t, Label> assignment;
    LabelKind kind = LabelKind::Regular;

    std::optional<Label> find(std::size_t index) const;
    std::unordered_map<Label, std::size_t, LabelHash> inverse() const;
};

struct AffineBasis {
    std::size_t lam00 = 0;
    std::size_t lam10 = 0;
    std::size_t lam01 = 0;
};

// Integer affine map x -> A x + kappa on labels.
struct IntAffine {
    std::array<std::array<long long, 2>, 2> a{{{1, 0}, {0, 1}}};
    std::array<long long, 2> kappa{0, 0};

    long long det() const { return a[0][0] * a[1][1] - a[0][1] * a[1][0]; }
    Label apply(Label x) const;
    IntAffine compose(const IntAffine& inner) const;  // this o inner
    IntAffine inverse() const;                        // requires det = +-1
    friend bool operator==(const IntAffine&, const IntAffine&) = default;
};

using ChartTransition = IntAffine;

// Uniform grid hash for radius and nearest-neighbour queries.
class SpatialIndex {
public:
    SpatialIndex(std::span<const Point2> points, double cell);
    // Indices within distance r of p, sorted by distance then index.
    std::vector<std::size_t> within(Point2 p, double r) const;
    // Nearest point; ties broken lexicographically on (x, y).
    std::size_t nearest(Point2 p) const;
    std::size_t size() const { return points_.size(); }

private:
    std::vector<Point2> points_;
    double cell_;
    std::map<std::pair<long long, long long>, std::vector<std::size_t>> buckets_;
    double extent_ = 0.0;
};

// Ground-truth chart: the lattice is (g0 + hbar g1)(hbar zeta) for zeta in Z^2 (or Z x N when half).
struct ChartSpec {
    std::function<Point2(Point2)> g0;
    std::function<Point2(Point2)> g1;
    Rect domain;
    bool half = false;

    // Checks orientation and injectivity of g0 on a grid over the domain; throws InjectivityFailure.
    void validate(int grid = 40) const;
};

struct SynthLattice {
    PointCloud cloud;
    std::vector<Label> truth;

    Labelling truth_labelling() const;
};

SynthLattice synth_lattice(const ChartSpec& chart, int k);

ChartSpec identity_chart(bool half = false);
// Orientation-preserving quadratic chart near a linear map on the unit square. Draws are rejected until the
// singular values of its Jacobian stay within a factor 1.3 of each other over the domain.
ChartSpec random_regular_chart(std::mt19937_64& rng);
// Half-lattice chart whose first component is J and whose second increases with the second coordinate, with the
// same rejection rule.
ChartSpec random_half_chart(std::mt19937_64& rng);

struct SynthCheck {
    std::size_t points = 0;
    std::size_t labelled = 0;
    std::size_t mislabelled = 0;  // points whose label differs from the single transition applied to the truth
    IntAffine transition;
    Labelling labelling;
};

// Labels the synthetic lattice of the chart at k (regular charts seeded at g0(1/2, 1/2), half charts at
// g0(1/2, 0)) and compares with the ground truth. Half charts only admit horizontal integer shifts.
SynthCheck check_synthetic_labelling(const ChartSpec& chart, int k);

enum class BasisMode {
    Reduced,    // shortest and next-shortest independent vectors
    Semitoric,  // first vector one column to the right, second vector straight up
};

AffineBasis select_affine_basis(const PointCloud& cloud, Point2 c, BasisMode mode = BasisMode::Reduced);

struct TransportOptions {
    double rho_factor = 0.4;      // search radius as a fraction of the shortest basis vector
    double shrink_factor = 3.0;   // coverage is asserted at depth >= shrink_factor * longest basis vector
    bool check_coverage = true;
};

Labelling label_regular(const PointCloud& cloud, const AffineBasis& basis, const Region& region,
                        const TransportOptions& options = {});

struct HalfLatticeResult {
    Labelling labelling;
    AffineBasis basis;
};

// Five-step half-lattice labelling seeded at the point nearest c; labels restricted to l >= 0.
HalfLatticeResult label_half_lattice(const PointCloud& cloud, Point2 c, const Region& b0,
                                     const TransportOptions& options = {});

// Labels a cloud whose points sit on vertical columns one hbar apart: points are grouped into strips of
// width hbar^{3/2}, j = round((x - x_ref) / hbar) and l counts points upward from the bottom of each column.
Labelling label_semitoric_columns(const PointCloud& cloud, double x_ref);

// Per-column extremal points of the largest-k cloud, sorted by x.
std::vector<Point2> detect_boundary(std::span<const PointCloud> clouds, bool lower = true, double strip_factor = 1.0);

// Unique (A, kappa) with lab2 = A lab1 + kappa on the common points of the overlap.
ChartTransition transition(const PointCloud& cloud, const Labelling& lab1, const Labelling& lab2,
                           const Region& overlap = {});

// Seeding by tracking across k: each cloud is seeded at the point nearest the previous lam00.
std::vector<Labelling> label_family_regular(std::span<const PointCloud> clouds, Point2 c, const Region& region,
                                            BasisMode mode = BasisMode::Reduced, const TransportOptions& options = {});

struct ChartInput {
    Region region;
    std::map<int, Labelling> by_k;
};

struct TransitionFamily {
    std::size_t from = 0;
    std::size_t to = 0;
    std::array<std::array<long long, 2>, 2> a{};
    std::map<int, std::array<long long, 2>> kappa_by_k;
};

struct PhiSample {
    std::size_t index = 0;
    Point2 point;
    Point2 phi;
};

struct GlobalLabelling {
    std::vector<ChartInput> charts;
    std::vector<TransitionFamily> transitions;
    std::map<int, Labelling> global;  // labels in the frame of chart 0
    std::map<int, std::vector<PhiSample>> phi_samples;
    std::string nu_freedom = "global integer translation nu_hbar is undetermined; compare modulo translation";
};

GlobalLabelling glue_global(const std::map<int, PointCloud>& clouds, const std::vector<ChartInput>& charts);

void write_labelling_csv(std::ostream& out, const PointCloud& cloud, const Labelling& labelling);
void write_global_json(std::ostream& out, const GlobalLabelling& global);

}  // namespace semitoric::lattice
