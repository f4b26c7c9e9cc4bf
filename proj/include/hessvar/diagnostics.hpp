#pragma once
// Oscillation and integrability diagnostics of matrix fields (typically D^2 u):
// mean oscillation, BMO modulus, Campanato decay, reverse-Hoelder constants,
// the higher-integrability exponent, the singular-set surrogate, Hoelder
// seminorms and the iteration-lemma checker.
//
// |.| is the Frobenius norm throughout; averages are plain node means, i.e.
// integrals divided by the discrete measure h^n * #nodes.

#include <cstdint>
#include <string>
#include <vector>

#include "hessvar/grid.hpp"

namespace hessvar {

/// (1/|B|) int_B |f - f_B|^p.
double mean_oscillation(const SymMatField& f, const Ball& ball, double p);

/// Average of f over a ball.
SymMat ball_average(const SymMatField& f, const Ball& ball);

struct BmoResult {
  double omega = 0.0;
  Ball ball;  ///< attaining ball
  std::size_t balls = 0;
};
BmoResult bmo_modulus(const SymMatField& f, const BallFamily& family);

struct JohnNirenbergResult {
  double p = 1.0;
  /// max over the family of osc_p^{1/p} / omega
  double cbar = 0.0;
  double omega = 0.0;
  Ball ball;
  bool degenerate = false;
  std::string verdict;
};
JohnNirenbergResult john_nirenberg_ratio(const SymMatField& f, const BallFamily& family, double p);

struct OscillationCurve {
  Index center{0, 0, 0};
  double p = 1.0;
  std::vector<double> radii;       ///< strictly decreasing
  std::vector<double> values;      ///< normalized osc_p
  std::vector<double> integrals;   ///< un-normalized int_B |f - f_B|^p
};

struct DecayFit {
  double slope = 0.0;
  double constant = 0.0;  ///< exp(intercept)
  double residual = 0.0;  ///< RMS of the log-log residuals
  int points = 0;
  bool degenerate = false;
};

/// Least-squares fit of log y = log c + slope log x; degenerate when some y <= 0.
DecayFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

struct CampanatoResult {
  OscillationCurve curve;
  DecayFit fit;  ///< fit of the un-normalized integrals against the radius
};
CampanatoResult campanato_decay(const SymMatField& f, const Index& center, std::vector<double> radii,
                                double p);

/// 2n / (n + 2).
double gehring_exponent(int n);

struct ReverseHolderEntry {
  Index center{0, 0, 0};
  double scale = 0.0;
  /// (mean |f|^2 on B_s)^{1/2} / (mean |f|^pbar on B_2s)^{1/pbar}
  double constant = 0.0;
  bool degenerate = false;
};
struct ReverseHolderResult {
  double pbar = 1.0;
  std::vector<ReverseHolderEntry> entries;
  double max_constant = 0.0;
  bool any_degenerate = false;
};
ReverseHolderResult reverse_holder_check(const SymMatField& f, const std::vector<Index>& centers,
                                         const std::vector<double>& scales);

struct P0Options {
  std::vector<double> scan;  ///< empty: 2.1, 2.2, ..., 4.0
  double k_max = 10.0;
};
struct P0Estimate {
  double p0 = 0.0;
  bool certified = false;
  std::vector<double> scan;
  /// K_p = max over pairs rho <= r of (mean |f|^p on B_rho)^{1/p} / (mean |f|^2 on B_r)^{1/2}
  std::vector<double> constants;
  double k_max = 0.0;
  std::string verdict;
};
/// Largest scanned p whose K_p (and every smaller scanned p's) stays <= k_max.
P0Estimate fit_p0(const SymMatField& f, const Index& center, std::vector<double> radii,
                  const P0Options& options = {});

struct SingularMask {
  GridGeometry geometry;
  std::vector<std::uint8_t> mask;     ///< 1 = singular
  std::vector<std::uint8_t> defined;  ///< 1 where the test balls fit and f is valid
  double p0 = 2.0;
  std::vector<double> radii;
  double tau = 0.0;
  std::size_t count = 0;
};
/// Marks x when min over the two smallest radii of r^{-n} int_{B_r(x)} |f - f_B|^p0 exceeds tau.
SingularMask singular_set(const SymMatField& f, double p0, std::vector<double> radii, double tau);

struct BoxDimension {
  double dimension = 0.0;
  bool empty = true;
  std::vector<double> box_sizes;
  std::vector<double> counts;
};
/// Upper box-counting dimension of the mask at this resolution (dyadic boxes
/// of 1, 2, 4, ... nodes).
BoxDimension box_counting_dimension(const SingularMask& mask);

struct HolderEstimate {
  double alpha = 0.5;
  double seminorm = 0.0;
  std::size_t pairs = 0;
  std::uint64_t seed = 0;
  Index x{0, 0, 0};
  Index y{0, 0, 0};
};
/// max |f(x) - f(y)| / |x - y|^alpha over deterministic stratified pairs
/// (antipodal, nearest-neighbour, seeded random) in the concentric box of
/// `region_fraction` times the interior half-width.
HolderEstimate holder_seminorm(const SymMatField& f, double alpha, std::size_t pair_budget,
                               std::uint64_t seed = 0, double region_fraction = 0.75);

struct IterationLemmaInput {
  std::vector<double> radii;  ///< sample radii (any order)
  std::vector<double> phi;    ///< phi at each radius
  double A = 1.0;
  double kappa = 1.0;
  double gamma = 0.5;
  double B = 0.0;
  double beta = 0.0;
};
struct IterationLemmaResult {
  double theta = 0.0;
  double epsilon = 0.0;   ///< smallest epsilon making the hypothesis hold on every pair
  double epsilon0 = 0.0;  ///< theta^kappa
  bool hypothesis_ok = false;
  double c = 0.0;         ///< smallest constant in the conclusion over the pairs
  std::size_t pairs = 0;
  std::string verdict;
};
/// Pairs are (tau, r) with tau <= theta r among the samples;
/// theta = (2A)^{-2/kappa} when beta = 0, else (2A)^{-1/(kappa-gamma)}.
IterationLemmaResult iteration_lemma_check(const IterationLemmaInput& input);

}  // namespace hessvar
