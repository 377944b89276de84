#pragma once

#include "bbci/geom.hpp"
#include "bbci/nefpart.hpp"
#include "bbci/potentials.hpp"
#include "bbci/subdiv.hpp"
#include "bbci/tropical.hpp"

#include <Eigen/Dense>

#include <complex>
#include <map>
#include <memory>
#include <vector>

namespace bbci {

struct ProfileSpline;

/**
 * Smooth chi with chi = 1 on [0, inf), chi = 0 on (-inf, -2] and g = chi e^x convex. On [-2, 0] the second
 * derivative is g''(t) = e^t (s(t) + a B((t - c) / b)) with s a smooth step over [-smooth_width, 0] and B the
 * standard bump; a and b are solved so that g(0) = g'(0) = 1. g is a quintic Hermite spline through g, g', g''.
 */
struct CutoffProfile {
    double smooth_width = 0.5;
    double bump_center = -1.3;
    double bump_amplitude = 0;
    double bump_width = 0;
    std::vector<double> nodes;  // uniform on [-2, 0]
    std::vector<double> g;
    std::vector<double> dg;
    std::shared_ptr<const ProfileSpline> spline;

    /// w(t) = s(t) + a B((t - c) / b), so g'' = e^t w on [-2, 0].
    double weight(double t) const;
    /// g = chi e^x with derivatives; e^x past 0.
    double g_value(double x, double* d1 = nullptr, double* d2 = nullptr) const;
    double chi(double x, double* d1 = nullptr, double* d2 = nullptr) const;
    double operator()(double x) const { return chi(x); }
};

/// Throws MomentSolveFailed, ConvexityViolated.
CutoffProfile build_profile(int intervals = 2000);
/// Built once and shared.
const CutoffProfile& default_profile();

/// Cut-offs chi_{alpha,beta} = prod over Nbhd(alpha) of chi(beta (l_alpha - l_alpha') + sqrt(beta) + K).
struct CutoffFamily {
    const CutoffProfile* profile = nullptr;
    HeightFunction h;                         // points of the factor, the origin included
    std::vector<std::vector<double>> points;  // h.points as doubles
    std::vector<double> heights;
    std::vector<std::vector<int>> nbhd;       // triangulation edge graph
    std::vector<std::vector<double>> K;       // K[a][k] for nbhd[a][k]
    double beta = 1;

    int size() const { return static_cast<int>(points.size()); }
    double l(int a, const double* u) const;
    double legendre(const double* u) const;
    double max_K() const;
};

/**
 * Centred rule: K_{alpha,0} = 0 and K elsewhere. With centred = false every constant is K. Throws NotTriangulation
 * when h does not triangulate its points.
 */
CutoffFamily cutoff_family(const HeightFunction& h, double beta, double K, bool centred = true,
                           const CutoffProfile& profile = default_profile());

/// Throws OutsideNeighbourhood when a2 is not adjacent to a.
double chi_pair(const CutoffFamily& fam, int a, int a2, const std::vector<double>& u);
/// Product over the neighbours; grad and hess (either may be null) are with respect to u.
double chi_vertex(const CutoffFamily& fam, int a, const double* u, Eigen::VectorXd* grad = nullptr,
                  Eigen::MatrixXd* hess = nullptr);
inline double chi_vertex(const CutoffFamily& fam, int a, const std::vector<double>& u)
{
    return chi_vertex(fam, a, u.data());
}

struct CompatibilityCertificate {
    int samples = 0;
    int condition3_violations = 0;  // chi != 1 although L_h <= l_alpha + beta^{-1/2}
    int localising_violations = 0;  // chi != 0 although L_h >= l_alpha + beta^{-1/2} + C' / beta
    double C_prime = 0;             // 2 + max K
    double max_grad = 0;            // sup |d chi| in rho = beta u coordinates
    bool ok() const { return condition3_violations == 0 && localising_violations == 0; }
};

/// Half the samples are uniform in a box, half sit near pair thresholds.
CompatibilityCertificate certify_family(const CutoffFamily& fam, int samples = 1000, unsigned seed = 17);

/// A summand of a tailored polynomial; its cut-off is a weighted sum of family cut-offs.
struct TailoredTerm {
    QVec alpha;
    std::vector<double> a;
    double h = 0;
    double c = 0;
    std::vector<std::pair<int, int>> sources;  // (family, point index)
    std::vector<double> weights;
};

struct TailoredFactor {
    std::vector<TailoredTerm> terms;
    int origin = -1;
    double c0() const { return terms[static_cast<size_t>(origin)].c; }
};

/// Coefficients keyed by (0-based factor, lattice point); missing entries give -1 at the origin and 1 elsewhere.
using CoefficientMap = std::map<std::pair<int, QVec>, double>;

struct TailoredSystem {
    int n = 0;
    double beta = 1;
    double K = 0;               // 2 + log|c_{0,tot}| - min log|c_{alpha,tot}|
    bool centred = true;
    std::vector<HeightFunction> heights;  // h_j on the lattice points of nabla_j
    std::vector<CutoffFamily> families;   // per h_j
    std::vector<TailoredFactor> factors;  // one per polynomial, grouped or not
    HeightFunction total;                 // h on every point

    int r() const { return static_cast<int>(factors.size()); }
    double c0_tot() const;
};

/**
 * Tailored system from the dual nef partition and a centred height on the points of conv(nabla_1 u ... u nabla_r).
 * With centred = false every pair constant is 0. Throws SignConventionViolated, NotTriangulation.
 */
TailoredSystem tailored_system(const NefPartition& nef_dual, const HeightFunction& h, double beta,
                               const CoefficientMap& c = {}, bool centred = true);
/// Same from factor heights and coefficients aligned with their points.
TailoredSystem tailored_system(const std::vector<HeightFunction>& heights, const std::vector<std::vector<double>>& c,
                               double beta, bool centred = true);
/// Copy with another beta; K does not depend on beta.
TailoredSystem with_beta(const TailoredSystem& sys, double beta);

/// Tailored cut-off of term t of factor j.
double term_chi(const TailoredSystem& sys, int j, int t, const double* u, Eigen::VectorXd* grad = nullptr,
                Eigen::MatrixXd* hess = nullptr);
/// Ftilde_alpha = chi_alpha |c_alpha| e^{beta l_alpha}.
double term_modulus(const TailoredSystem& sys, int j, int t, const double* u, Eigen::VectorXd* grad = nullptr,
                    Eigen::MatrixXd* hess = nullptr);

/// G_j = sum of Ftilde over the nonzero terms, with its derivatives.
double G_factor(const TailoredSystem& sys, int j, const std::vector<double>& u, Eigen::VectorXd* grad = nullptr,
                Eigen::MatrixXd* hess = nullptr);
double G_total(const TailoredSystem& sys, const std::vector<double>& u, Eigen::VectorXd* grad = nullptr,
               Eigen::MatrixXd* hess = nullptr);

struct BoundaryResiduals {
    std::vector<double> factors;  // G_j - |c_{0,j}|
    double total = 0;             // G_tot - |c_{0,tot}|
};

/// Throws SignConventionViolated.
BoundaryResiduals boundary_residuals(const TailoredSystem& sys, const std::vector<double>& u);

/// Root of G = |c_0| on the ray through dir (factor j, or the total system for j = -1). Throws NoRoot.
std::vector<double> ray_sample(const TailoredSystem& sys, const std::vector<double>& dir, int j = -1);

/// Damped Newton for all G_j = |c_{0,j}| in the transverse slice of the tropical cell at seed. Throws NewtonDiverged.
std::vector<double> ci_newton_sample(const TailoredSystem& sys, const std::vector<double>& seed);
/// Same with the slice spanned by the columns of B.
std::vector<double> ci_newton_sample(const TailoredSystem& sys, const std::vector<double>& seed,
                                     const Eigen::MatrixXd& B);

/// Bounded cells of the tropical complete intersection of the families, as vertex lists with their slices.
struct CiCell {
    std::vector<std::vector<double>> vertices;
    Eigen::MatrixXd slice;       // orthonormal basis of the normal space
    CellLabel label;
    int dim = 0;
    TropCell cell;
};

std::vector<CiCell> bounded_ci_cells(const TailoredSystem& sys);

/// Distance from u to the boundary of C_{0,trop,tot} = {l_alpha <= 0}.
double distance_to_tropical_boundary(const TailoredSystem& sys, const std::vector<double>& u);

/// Minimal eigenvalue of the Hessian of G_tot.
double min_hessian_eigenvalue(const TailoredSystem& sys, const std::vector<double>& u);

/// Random points of V = {L_h <= K / beta}.
std::vector<std::vector<double>> v_samples(const TailoredSystem& sys, int count, unsigned seed);

struct BetaRow {
    double beta = 0;
    int v_samples = 0;
    double min_eig = 0;
    int boundary_samples = 0;
    double max_dist = 0;   // max distance of tot-ray samples to the tropical boundary
    double diag_dist = 0;  // distance along (1, ..., 1)
};

struct LimitReport {
    std::vector<BetaRow> rows;
    double min_eig = 0;
    double slope = 0;  // of log max_dist against log beta
    bool convex = false;
    bool rate_ok = false;
};

/// Throws ConvexityFailed, RateOutOfBand when strict.
LimitReport convexity_and_limit_report(const TailoredSystem& sys, const std::vector<double>& betas, int samples = 500,
                                       unsigned seed = 7, bool strict = true);

/// Cut-offs restricted to the faces P^sigma_j of a stratum, with inherited constants.
struct TruncatedCutoffs {
    int cone = 0;
    std::vector<std::vector<int>> members;  // per family: point indices in P^sigma_j
    std::vector<CutoffFamily> families;     // restricted families, same K

    /// chi^sigma for point a of family j (original index); 0 outside P^sigma_j.
    double chi(int j, int a, const std::vector<double>& u) const;
};

/// Throws EmptyStratum, NotARefinement.
TruncatedCutoffs truncated_cutoffs(const TailoredSystem& sys, const Fan& fan, int cone);

/**
 * Grouped polynomials f^P_i = sum over j in P_i of f_j. Terms keep the cut-offs of their family; the origin takes
 * the |c_{0,j}|-weighted mean. Throws BadPartition.
 */
TailoredSystem grouped_system(const TailoredSystem& sys, const IndexPartition& part);

struct PositiveLocusPoint {
    std::vector<double> u;
    std::vector<double> theta;
};

/**
 * Points of the boundary of the tailored complete intersection. A fraction of the seeds is moved into the
 * transition layer of a random pair cut-off before the Newton projection; theta lies in 2 pi Z^n.
 */
std::vector<PositiveLocusPoint> positive_locus_samples(const TailoredSystem& sys, int count, unsigned seed,
                                                       double transition_fraction = 0.5);

/// det of the Gram matrix of the rows normalised in the metric with inverse Hinv.
double normalized_gram_det(const std::vector<Eigen::VectorXcd>& rows, const Eigen::MatrixXd& Hinv);

struct DefectSample {
    std::vector<double> u;
    double ratio = 0;      // max_j |dbar f_j| / F_j
    double gram_det = 0;
};

struct DefectReport {
    std::vector<DefectSample> samples;
    double max_ratio = 0;
    double min_det = 1;
};

/// Throws SampleOffLocus.
DefectReport analytic_defects(const TailoredSystem& sys, const PotentialEvaluator& ev,
                              const std::vector<PositiveLocusPoint>& z);

struct DefectDecay {
    std::vector<double> betas;
    std::vector<double> max_ratio;
    double slope = 0;  // of log max_ratio against sqrt(beta)
    double min_det = 1;
};

DefectDecay defect_decay(const TailoredSystem& sys, const PotentialEvaluator& ev, const std::vector<double>& betas,
                         int samples = 50, unsigned seed = 23);

}  // namespace bbci
