#pragma once

#include "bbci/geom.hpp"
#include "bbci/tropical.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace bbci {

/// psi(x) = (x - x0)^T g (x - x0)
struct QuadraticForm {
    std::vector<double> center;
    Eigen::MatrixXd g;

    static QuadraticForm identity(int n);
};

struct TentedPotentialSpec {
    RationalPolytope P;                           // 0 in the interior
    std::vector<std::vector<double>> tent_points; // per face of face_lattice(P), empty = barycentres
    double eps1 = 0.05;
    double eps2 = 0.05;
    double eps3 = 0.01;
    QuadraticForm psi;
    std::optional<QVec> center;                   // potential centred at c
};

/// Checks margins, positivity and Cholesky of g; fills missing tent points and psi. Throws NotInRelativeInterior,
/// ConvexityFailed.
TentedPotentialSpec validated(TentedPotentialSpec spec);

/// Maximal chain F_0 < F_1 < ... < F_{n-1} of proper faces and the linear function nu_C on cone(S_C).
struct ChainFunctional {
    std::vector<int> faces;  // indices into the face lattice, by dimension
    std::vector<double> nu;
};

struct PL1 {
    std::vector<ChainFunctional> chains;
    std::vector<std::vector<double>> tent_points;  // u_F, indexed like the face lattice
    std::vector<int> tent_dims;                    // dim F, -1 for faces that carry no tent

    double operator()(const double* x) const;
};

/// Throws SingularChainSystem, NotConvexForThisEpsilon.
PL1 phi1_build(const TentedPotentialSpec& spec);

/// q(t) = N int_0^max(t,0) exp(-1/s) ds with q(1) = 1; d1, d2 receive q' and q''.
double q_cut(double t, double* d1 = nullptr, double* d2 = nullptr);
/// q_eps(x) = q(x - 1 + eps) / eps.
double q_eps(double eps, double x, double* d1 = nullptr, double* d2 = nullptr);

struct PotentialValue {
    double phi = 0;
    std::vector<double> grad;  // Phi(x) = d phi(x)
};

/**
 * Degree-2 homogeneous potential. Tented mode: phi(x) = lambda with phi3(x / sqrt(lambda)) = 1, where
 * phi3 = sum_C q_eps2(<nu_C, .>) + eps3 psi. Quadratic mode: phi(x) = (x - c)^T g (x - c).
 */
class PotentialEvaluator {
public:
    explicit PotentialEvaluator(TentedPotentialSpec spec);
    static PotentialEvaluator quadratic(const RationalPolytope& P, Eigen::MatrixXd g, std::optional<QVec> center = {});

    int dim() const { return n_; }
    bool is_quadratic() const { return quadratic_; }
    const TentedPotentialSpec& spec() const { return spec_; }
    const PL1& phi1() const { return phi1_; }
    const std::vector<double>& center() const { return c_; }

    double phi2(const std::vector<double>& y) const;
    /// phi3 with analytic gradient and Hessian (either may be null).
    double phi3(const std::vector<double>& y, std::vector<double>* grad = nullptr, Eigen::MatrixXd* hess = nullptr) const;

    /// phi and Phi. Throws RootBracketFailed.
    PotentialValue eval(const std::vector<double>& x) const;
    double operator()(const std::vector<double>& x) const { return eval(x).phi; }
    /// Symmetrised central differences of Phi.
    Eigen::MatrixXd hessian(const std::vector<double>& x, double h = 1e-5) const;

private:
    PotentialEvaluator() = default;

    TentedPotentialSpec spec_;
    PL1 phi1_;
    int n_ = 0;
    bool quadratic_ = false;
    std::vector<double> c_;
};

/**
 * Radial comparison of V2 = {phi2 <= 1} with V1 = {phi1 <= 1}: along each random ray the boundary of V2 sits at
 * ratio t2 / t1 of the boundary of V1. Every summand of phi2 is at most 1 on V2, so the ratio is bounded by
 * 1 - eps2 + q^{-1}(eps2), which exceeds 1 since a convex q has q(eps2) < eps2.
 */
struct SublevelSandwich {
    double inner_min = 0;    // smallest ratio, at least 1 - eps2
    double outer_max = 0;    // largest ratio
    double outer_bound = 0;  // 1 - eps2 + q^{-1}(eps2)
    int rays = 0;
};

SublevelSandwich sublevel_sandwich(const PotentialEvaluator& ev, int rays = 1000, unsigned seed = 3);

struct FaceAdaptedness {
    int face = 0;                    // index into face_lattice(P)
    int dim = 0;
    std::vector<double> minimizer;   // of phi over aff(F)
    double margin = 0;               // smallest slack of the facets not containing F, at the minimizer
    std::vector<double> cone_coords; // Phi(minimizer) in the facet normals of F
    bool interior = false;           // margin > 1e-6
    bool in_cone = false;            // Phi(minimizer) in sigma
    int star_failures = 0;           // grid points of F with Phi outside st(sigma)
    double drift = 0;                // |u_F - minimizer| for tented potentials
    std::string witness;

    bool ok() const { return interior && in_cone && star_failures == 0; }
};

struct AdaptedReport {
    std::vector<FaceAdaptedness> faces;
    bool adapted() const;
    double max_drift() const;
};

/// Throws NotSimplePolytope.
AdaptedReport check_adapted(const PotentialEvaluator& ev, int grid = 24, unsigned seed = 5);
/// Throws MinimizerOnBoundary with the first failing face.
void require_adapted(const AdaptedReport& report);

/// Minimizer of phi on {x : A x = b} by Newton in an orthonormal chart, started at x0.
std::vector<double> minimize_on_affine(const PotentialEvaluator& ev, const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                       const std::vector<double>& x0, double tol = 1e-9);

struct AutoTuneResult {
    double eps1 = 0, eps2 = 0, eps3 = 0;
    int halvings = 0;
    AdaptedReport report;
};

/// Halves (eps1, eps2, eps3) until check_adapted passes. Throws MinimizerOnBoundary below the 1e-4 floor.
AutoTuneResult auto_tune(TentedPotentialSpec spec, double floor = 1e-4);

struct StrongConvexity {
    double m0 = 0;  // smallest Hessian eigenvalue on the sphere sample
    double m1 = 0;  // smallest phi on the sphere sample
    double m = 0;   // 0.9 min(m0, m1), or the requested value
    int sphere_points = 0;
    int pairs = 0;
    double worst_pair = 0;  // min of phi(y) - phi(x) - <Phi(x), y - x> - m/2 |y - x|^2
};

/// Certifies m on random pairs. Pass m > 0 to certify a given constant instead. Throws NonConvexDetected.
StrongConvexity strong_convexity_constant(const PotentialEvaluator& ev, double m = 0, int pairs = 1000,
                                          unsigned seed = 11);

struct AdaptedBoundReport {
    std::vector<int> T;              // lattice point indices of the hypersurface factor
    std::vector<double> u_T;         // minimizer of phi over C_Tbar
    std::vector<double> t;           // d phi(u_T) = sum t_i alpha_i
    double residual = 0;
    double c = 0;                    // min t_i
    double m = 0;
    int samples = 0;
    double worst_slack = 0;          // min of lhs - rhs over the samples
    bool holds = false;
};

/**
 * Checks <d phi(u), u - u_T> >= m |u - u_T|^2 + c d_aff(u, C_Tbar) on random u with l_alpha(u) >= 0 for alpha in T.
 * C_0 is the region of the origin of the hypersurface, Tbar = T + {0}, d_aff uses the tropical parameterisation.
 * Throws MinimizerNotInterior (also when the least-squares residual exceeds 1e-7), NegativeWeight.
 */
AdaptedBoundReport adapted_bound_check(const PotentialEvaluator& ev, const TropicalCellComplex& hypersurface,
                                       const std::vector<int>& T, double m, int samples = 1000, unsigned seed = 13);

/// Simplices T of the hypersurface with C_Tbar a proper face of C_0 (labels containing the origin).
std::vector<std::vector<int>> boundary_simplices(const TropicalCellComplex& hypersurface);

}  // namespace bbci
