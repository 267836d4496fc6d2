#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semitoric/common.hpp"
#include "semitoric/lattice.hpp"
#include "semitoric/models.hpp"

namespace semitoric::invariants {

using lattice::Label;

// ---------------------------------------------------------------------------
// Labelled spectra

struct Column {
    int j = 0;
    std::map<int, Point2> points;  // keyed by l
};

// Joint eigenvalues indexed by their integer labels, stored column by column.
struct LabelledSpectrum {
    int k = 1;
    std::vector<Column> columns;  // ascending j

    double hbar() const { return hbar_of(k); }
    const Column* column(int j) const;
    std::optional<Point2> at(Label label) const;
    std::size_t size() const;
};

using SpectrumFamily = std::vector<LabelledSpectrum>;  // ascending k

LabelledSpectrum from_labelling(const lattice::PointCloud& cloud, const lattice::Labelling& labelling);

// New labels lambda'_{j,l} = lambda_{j,l+n j}: a point labelled (j, l) becomes (j, l - n j).
LabelledSpectrum relabel_shear(const LabelledSpectrum& spectrum, int n);

lattice::PointCloud to_cloud(const models::JointSpectrum& spectrum);

// Model spectrum over a J-window, labelled by vertical columns counted from the bottom, j = 0 at x_ref.
LabelledSpectrum labelled_model_spectrum(const models::ModelSpec& model, int k, Interval x_window, double x_ref,
                                         const models::SpectrumOptions& options = {});

// ---------------------------------------------------------------------------
// Spacing functionals

// ratio_a1_a2 is a1/a2 = (E_{j,l} - E_{j+1,l}) / hbar, so that a1 = ratio_a1_a2 * a2.
struct A1A2Sample {
    Point2 c;
    int k = 0;
    double ratio_a1_a2 = 0.0;
    double a2 = 0.0;
    double a1 = 0.0;
};

// Spacings read directly at the anchor label (j, l).
A1A2Sample spacings_to_a1a2(const LabelledSpectrum& spectrum, Label anchor);

// Spacings interpolated to an arbitrary regular value c: samples along each column are interpolated in y to c.y,
// then across the nearest columns in x to c.x.
A1A2Sample probe_a1a2(const LabelledSpectrum& spectrum, Point2 c);

// ---------------------------------------------------------------------------
// Limits

struct LimitEstimate {
    double value = 0.0;
    double last = 0.0;   // value at the smallest hbar
    double order = 0.0;  // log-log regression slope of |sample - value| against hbar
    std::vector<std::pair<double, double>> samples;  // (hbar, value)
};

// Least-squares polynomial in hbar of the given degree; the constant term is the hbar -> 0 estimate.
LimitEstimate richardson(std::span<const double> hbars, std::span<const double> values, int degree = 1);

// Slope of the least-squares line through (log a, log e).
double convergence_slope(std::span<const double> abscissae, std::span<const double> errors);

struct DoubleLimit {
    double value = 0.0;
    std::vector<std::pair<double, LimitEstimate>> per_x;  // decreasing x
    double x_fit_residual = 0.0;
};

// Fits A + B x ln x through per-x estimates (one x returns its value).
DoubleLimit x_limit(std::vector<std::pair<double, LimitEstimate>> per_x);

// ---------------------------------------------------------------------------
// Eliasson jet, sigma_1, twisting number, S_{0,1}

struct FrJet {
    std::map<std::pair<int, int>, double> derivs;  // (i, j) -> d_x^i d_y^j f_r(0)

    double get(int i, int j) const;
    double slope_s0() const { return -get(1, 0) / get(0, 1); }
    int order() const;
};

struct GradientResult {
    double dx = 0.0;
    double dy = 0.0;
    double s0 = 0.0;
    DoubleLimit dx_limit;
    DoubleLimit dy_limit;
    double error_budget = 0.0;  // x ln x + hbar at the finest probe
};

GradientResult recover_fr_gradient(const SpectrumFamily& family, Point2 focus, std::span<const double> x_schedule,
                                   double mu);

struct Sigma1Result {
    DoubleLimit limit;
    int corrected_jumps = 0;
};

Sigma1Result recover_sigma1(const SpectrumFamily& family, Point2 focus, double s0, std::span<const double> x_schedule);

struct Twisting {
    int p = 0;
    double sigma1_p = 0.0;  // sigma1_0 - p
};

// p = floor(sigma1_0), except that values within snap of an integer are rounded to that integer.
Twisting twisting_number(double sigma1_0, double snap = 0.0);

std::pair<Twisting, LabelledSpectrum> twisting_and_privileged(double sigma1_0, const LabelledSpectrum& spectrum,
                                                              double snap = 0.0);

DoubleLimit recover_S01(const SpectrumFamily& family, Point2 focus, double s0, double dy_fr,
                        std::span<const double> x_schedule);

// ---------------------------------------------------------------------------
// Counting: height invariant and Duistermaat-Heckman profile

enum class Side { Below, Above };

// (hbar^2 / 2w) times the number of points with |x - x0| <= w on the chosen side of y0, where the half-width
// w = c hbar^delta is snapped down to the nearest half-integer multiple of hbar.
double scaled_strip_count(const lattice::PointCloud& cloud, double delta, double c_width, double x0,
                          std::optional<double> y0 = std::nullopt, Side side = Side::Below);

LimitEstimate height_invariant(std::span<const lattice::PointCloud> clouds, double delta, double c_width,
                               Point2 focus, Side side = Side::Below);

struct KinkFit {
    std::vector<double> kinks;
    std::vector<double> coefficients;  // a, b, then one hinge slope change per kink
    double rss = 0.0;

    double operator()(double x) const;
};

// Continuous piecewise-linear least-squares fit with up to max_kinks breakpoints found by exhaustive search;
// an extra kink is kept only if it lowers the residual by more than accept_ratio.
KinkFit fit_piecewise_linear(std::span<const double> xs, std::span<const double> ys, int max_kinks = 3,
                             double accept_ratio = 4.0, std::size_t max_candidates = 60);

struct DHProfile {
    std::vector<std::pair<double, double>> samples;  // (x, rho)
    double delta = 0.0;
    double c_width = 0.0;
    std::vector<double> kinks;
    double fit_residual = 0.0;
};

DHProfile dh_profile(const lattice::PointCloud& cloud, double delta, double c_width, std::span<const double> x_grid);

// ---------------------------------------------------------------------------
// Focus-focus value

struct FocusCandidate {
    double candidate = 0.0;
    bool focus_focus = false;
    Point2 value;
    double log_coefficient = 0.0;  // C in a2 ~ A + C ln|y - y0|
    double peak = 0.0;
};

// Searches the columns within `search` of x_candidate for an interior logarithmic peak of hbar/(E_{l+1} - E_l).
// Throws NoPeak when the spacing profile has no such peak.
FocusCandidate classify_candidate(const LabelledSpectrum& spectrum, double x_candidate, double search = 0.2);

// Classifies every candidate; those without a peak are reported as elliptic-elliptic.
std::vector<FocusCandidate> locate_focus_focus(const LabelledSpectrum& spectrum, std::span<const double> candidates,
                                               double search = 0.2);

struct FocusRefinement {
    Point2 value;
    LimitEstimate y0;  // per-k ordinates and their hbar -> 0 extrapolation
};

// Classifies the focus-focus value again on every spectrum of the family and extrapolates its ordinate in hbar.
FocusRefinement refine_focus(const SpectrumFamily& family, Point2 focus, double search = 0.2);

// ---------------------------------------------------------------------------
// Taylor series

using SeriesCoeffs = std::map<std::pair<int, int>, double>;  // (l, m) -> S_{l,m}

struct TaylorInvariant {
    double sigma1_0 = 0.0;
    int twisting_p = 0;
    SeriesCoeffs s_coeffs;
    double sigma2_0 = 0.0;
};

struct GMuExpansion {
    double mu = 1.0;
    std::vector<std::pair<double, double>> x_samples;  // (x, g) after hbar -> 0
    std::vector<double> c;
    std::vector<double> d;
};

// g_mu(x) = a1(x, mu x) + mu a2(x, mu x), offsets taken from the focus-focus value.
GMuExpansion g_mu_sample(const SpectrumFamily& family, Point2 focus, double mu, std::span<const double> x_schedule);

struct LogFit {
    double c = 0.0;
    double d = 0.0;
    double condition = 0.0;
};

// Weighted least squares for (c_n, d_n) on {x^n, x^n ln x}, after removing the known lower orders stored in exp,
// with `nuisance` further orders fitted and discarded.
LogFit fit_log_expansion(const GMuExpansion& exp, int n, int nuisance = 1, double max_condition = 1e8);

// Row of the order-n jet system: d_n(mu) = row . (d_y^{n+1} f_r, d_x d_y^n f_r, ..., d_x^{n+1} f_r).
std::vector<double> jet_system_row(int n, double mu);

// Solves for (d_y^{n+1} f_r, ..., d_x^{n+1} f_r) from d_n at n+2 distinct mu values.
std::vector<double> solve_jet_order(int n, std::span<const double> mus, std::span<const double> d_values);

void insert_jet_order(FrJet& jet, int n, std::span<const double> solution);

// Coefficients c_n(mu), d_n(mu) for n <= order of the expansion of g_mu, with sigma_i(c) = d_i S(c).
std::pair<std::vector<double>, std::vector<double>> g_mu_coefficients(const FrJet& jet, const SeriesCoeffs& s,
                                                                      double mu, int order);

// Matrix A_n of the order-n Taylor system: c_n(mu_i) = c~_n(mu_i) + sum_m A_n[i][m] S_{n+1-m, m}.
std::vector<std::vector<double>> taylor_system(int n, std::span<const double> mus, const FrJet& jet);

// (n+1)^{n+2} (d_y f_r)^{n+2} prod_{i<j} (mu_j - mu_i).
double taylor_determinant_formula(int n, std::span<const double> mus, double dy_fr);

double determinant(std::vector<std::vector<double>> m);

struct TaylorSolve {
    SeriesCoeffs coeffs;  // S_{l,m} with l + m = n + 1
    double condition = 0.0;
};

TaylorSolve solve_taylor_order(int n, std::span<const double> mus, std::span<const double> c_values,
                               const FrJet& jet, const SeriesCoeffs& known, double max_condition = 1e8);

// Spin-oscillator fast path: d_x d_y f_r(0) = -pi (g - c0 - d0 ln x) / (mu x ln x) after hbar -> 0.
struct SpinDxDy {
    double dxdy = 0.0;
    double g = 0.0;
    double c0 = 0.0;
    double d0 = 0.0;
    LimitEstimate g_limit;
};

SpinDxDy spinosc_dxdy(const SpectrumFamily& family, Point2 focus, double mu, double x, const FrJet& jet,
                      const SeriesCoeffs& known);

// S_{1,1} = (1/3)(c1/mu - dxdy (5 ln 2/pi - 1/(2 pi) - ln(1 + 4 mu^2)/(2 pi))).
double spinosc_S11(double c1, double mu, double dxdy);

// c1 = (g - c0 - d0 ln x - d1 x ln x) / x.
double spinosc_c1(double g, double x, double c0, double d0, double d1);

// ---------------------------------------------------------------------------
// Polygon

struct ConvexPolygon {
    std::vector<Point2> vertices;  // counter-clockwise

    bool contains(Point2 p) const;
    double distance(Point2 p) const;  // zero inside
    ConvexPolygon clip_x(Interval xs) const;
    // Points on a grid of the given spacing inside the polygon, plus its boundary sampled at the same spacing.
    std::vector<Point2> sample(double step) const;
};

struct PolygonEstimate {
    std::vector<Point2> cloud;  // hbar * labels
    std::vector<Point2> fitted_vertices;
    bool translation_freedom = true;
    KinkFit lower;
    KinkFit upper;
    double offset = 0.0;  // u - x for every labelled point
};

struct PolygonOptions {
    Interval strip;
    std::vector<double> cuts;         // focus-focus abscissae, cut upward
    std::vector<lattice::Ball> holes; // excluded neighbourhoods in (x, y)
    double epsilon = 0.0;
    int max_kinks = 3;
};

PolygonEstimate polygon_recover(const lattice::PointCloud& cloud, const lattice::Labelling& labelling,
                                const PolygonOptions& options);

struct HausdorffResult {
    double distance = 0.0;
    Point2 translation;
};

// Two-sided Hausdorff distance between a + t and b; when optimize is set, t minimises it.
HausdorffResult hausdorff(std::span<const Point2> a, std::span<const Point2> b, bool optimize_translation = false,
                          double search_radius = 0.0);

// Distance between a recovered polygon and a reference one, modulo translation. Reference samples inside
// any of the holes are dropped; vertex_error is the largest distance from a fitted vertex to the nearest
// reference vertex after translation.
struct PolygonComparison {
    double hausdorff = 0.0;
    Point2 translation;
    double vertex_error = 0.0;
    std::size_t cloud_points = 0;
    std::size_t reference_points = 0;
};

PolygonComparison compare_polygon(const PolygonEstimate& estimate, const ConvexPolygon& reference, Interval strip,
                                  std::span<const lattice::Shape> reference_holes, double step,
                                  double search_radius = 0.2);

// ---------------------------------------------------------------------------
// End-to-end pipeline

// Lower-order invariants fed into the second-order formulas: the exact closed forms, or the values this
// pipeline recovered.
enum class LowerOrderSource { Reference, Recovered };

const char* to_string(LowerOrderSource source);

struct PipelineConfig {
    models::ModelSpec model = models::ModelSpec::spin_oscillator();
    std::vector<int> k_list{300, 350, 400, 450, 500};
    int k_locate = 200;
    std::vector<double> x_schedule{0.01};
    std::vector<double> mu_list{2.0};
    std::vector<double> dxdy_mu{1.0};
    double delta = 0.4;
    double c_width = 1.0;
    double dh_delta = 0.25;
    double twist_snap = 0.05;
    LowerOrderSource second_order_inputs = LowerOrderSource::Reference;
    int threads = 0;
};

struct ReferenceValues {
    std::optional<Point2> focus;
    std::optional<double> dx, dy, sigma1_p, S01, S00, dxdy, S11;
    std::function<double(double)> rho;
    std::optional<ConvexPolygon> polygon;
};

// Closed-form values for the default spin-oscillator and coupled angular momenta; empty for other parameters.
ReferenceValues reference_values(const models::ModelSpec& model);

// J-range scanned when locating critical abscissae.
Interval model_window(const models::ModelSpec& model);

struct Location {
    LabelledSpectrum spectrum;  // column-labelled spectrum over the model window
    DHProfile dh;
    std::vector<FocusCandidate> candidates;
    std::optional<Point2> focus;  // first candidate classified as focus-focus
};

// DH profile at one k, its kinks as candidates, then classification of each candidate.
Location locate_critical(const models::ModelSpec& model, int k, double dh_delta, double c_width,
                         const models::SpectrumOptions& options = {});

struct FigureRow {
    double abscissa = 0.0;
    double estimate = 0.0;
    std::optional<double> theory;
};

struct InvariantReport {
    std::string model;
    Point2 focus;
    std::vector<FocusCandidate> candidates;
    LimitEstimate focus_y0;
    FrJet jet;
    TaylorInvariant taylor;
    double sigma1_p = 0.0;
    std::string second_order_inputs;
    std::map<std::string, double> convergence_slopes;
    std::map<std::string, double> condition_numbers;
    std::map<std::string, double> checks;  // consistency diagnostics
    std::map<std::string, std::vector<FigureRow>> figures;
};

InvariantReport run_invariants(const PipelineConfig& config);

void write_report_json(std::ostream& out, const InvariantReport& report);
void write_figure_csv(std::ostream& out, const std::vector<FigureRow>& rows);

struct PolygonConfig {
    models::ModelSpec model = models::ModelSpec::spin_oscillator();
    int k = 25;
    Interval strip{-0.8, 2.0};
    double epsilon = 0.0;  // zero selects hbar^{1/2}
    int k_locate = 200;
    double dh_delta = 0.25;
    int threads = 0;
};

struct PolygonRun {
    lattice::PointCloud cloud;
    lattice::Labelling labelling;
    PolygonOptions options;
    PolygonEstimate estimate;
    std::optional<PolygonComparison> comparison;
};

// Locates the critical values, labels the spectrum away from them and recovers the polygon; compares with the
// reference polygon when one is known.
PolygonRun run_polygon(const PolygonConfig& config);

void write_polygon_csv(std::ostream& out, const PolygonRun& run);
void write_polygon_json(std::ostream& out, const PolygonRun& run);

}  // namespace semitoric::invariants
