#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace semitoric {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Point2 a, Point2 b) = default;
};

inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }

// Lexicographic order on (x, y), used for deterministic tie-breaking.
inline bool lex_less(Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); }

struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    bool contains(double v) const { return v >= lo && v <= hi; }
    bool empty() const { return !(lo <= hi); }
    bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
};

struct Rect {
    Interval xs;
    Interval ys;

    static Rect everything() { return {}; }
    bool contains(Point2 p) const { return xs.contains(p.x) && ys.contains(p.y); }
};

// Per-k scale conventions: hbar = 1/k.
inline double hbar_of(int k) { return 1.0 / static_cast<double>(k); }

// Central numerical tolerances shared by every module.
struct Tolerances {
    double same_j_rel = 1e-12;
    double eig_rel = 1e-13;
    double commutator = 1e-10;
    double oracle_match = 1e-9;
    int max_ql_iterations = 60;
    int bisection_max_steps = 200;
};

inline const Tolerances& tolerances() {
    static const Tolerances t{};
    return t;
}

enum class ErrorKind {
    Config,
    Io,
    DimensionMismatch,
    EmptyWindow,
    NumericalFailure,
    CommutatorViolation,
    InjectivityFailure,
    TooSparse,
    AmbiguousNeighbor,
    Disconnected,
    EmptyStrip,
    Inconsistent,
    CocycleViolation,
    NonSimplyConnected,
    MissingNeighbor,
    SignError,
    ActionDiscontinuity,
    WindowTooNarrow,
    NoPeak,
    IllConditioned,
    DuplicateMu,
    EdgeFitFailure,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

// Process exit code for a failure class: 2 configuration, 3 numerical, 4 labelling.
int exit_code(ErrorKind kind);

}  // namespace semitoric
