#pragma once

#include "bbci/fan_skeleton.hpp"

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <vector>

namespace bbci {

/// Double-precision copy of a simplicial fan with full-dimensional maximal cones, for fast star evaluations.
class FanGeometry {
public:
    explicit FanGeometry(const Fan& fan);

    int dim() const { return n_; }
    int num_rays() const { return static_cast<int>(rays_.size()); }
    const std::vector<double>& ray(int k) const { return rays_[static_cast<size_t>(k)]; }
    const Fan& fan() const { return fan_; }
    /// Largest gradient norm of any h^rho.
    double lipschitz() const { return lipschitz_; }

    /// Maximal cone containing x (-1 outside the support); coords gets the cone coordinates.
    int locate(const double* x, double* coords = nullptr) const;
    /// h^rho(x), with the gradient on the located cone.
    double star(int ray, const double* x, double* grad = nullptr) const;
    /// Smallest distance from x to a facet hyperplane of its maximal cone, 0 outside the support.
    double depth(const double* x) const;
    /// True when every maximal cone containing the ray is separated from the ball B(x, r) by a facet hyperplane.
    bool ball_misses_star(int ray, const double* x, double r) const;

    /**
     * Values of coordinate k at which the line {x_0..x_{k-1} fixed} meets the fan non-transversally: the
     * vertices of {lambda >= 0 : (W lambda)_{<k} = fixed} over all cones.
     */
    void breakpoints(int k, const double* fixed, std::vector<double>& out) const;

private:
    struct Cone {
        std::vector<int> rays;
        Eigen::MatrixXd dual;      // row i: dual functional of rays[i]
        Eigen::VectorXd row_norm;
    };
    struct Basic {
        int k = 0;                 // number of fixed coordinates
        Eigen::MatrixXd solve;     // lambda = solve * fixed
        Eigen::MatrixXd lhs;       // rows < k of the ray columns, for the residual check
        Eigen::RowVectorXd value;  // row k of the ray columns
    };

    Fan fan_;
    int n_ = 0;
    std::vector<std::vector<double>> rays_;
    std::vector<Cone> cones_;
    std::vector<std::vector<Basic>> basics_;  // per k
    double lipschitz_ = 0;
};

struct PLStarFunction {
    std::shared_ptr<const FanGeometry> geometry;
    int ray = 0;
};

struct PLValue {
    double value = 0;
    std::vector<double> gradient;
    int cone = -1;  // maximal cone used, -1 off the support
};

PLValue pl_star_eval(const PLStarFunction& f, const std::vector<double>& u);

/**
 * Nested Gauss-Legendre rule on the ball. Each chord is mapped by v = R tanh(s), s in [-tail, tail], split at
 * the fan breakpoints and into panels of length <= panel.
 */
struct QuadratureSpec {
    int order = 12;
    double panel = 0.5;
    double tail = 2.5;
    bool check = true;     // compare with the doubled order
    double rel_tol = 1e-8;
};

/// Cheaper rule (about 1e-7) used inside root finding, Newton iterations and flows.
QuadratureSpec fast_quadrature();

/// h^rho convolved with the radial bump of radius eps. Throws QuadratureNotConverged.
double mollify(const PLStarFunction& f, double eps, const std::vector<double>& u,
               const QuadratureSpec& spec = QuadratureSpec{});

/// r with mollify(u / r) = 1, 0 when u is outside the star. Throws NoBracket when eps is too large.
double homogenize(const PLStarFunction& f, double eps, const std::vector<double>& u,
                  const QuadratureSpec& spec = fast_quadrature());

/// Smoothed max: expectation of max(x_i + Z_i) for iid bumps of half-width eps / sqrt(size).
double smooth_max(const std::vector<double>& x, double eps);

/// Smoothing of max{x - eps, 0}: zero below eps, x - eps above 2 eps, C^2 with a degree-5 ramp as derivative.
double ramp(double x, double eps);

struct SmoothedDefining {
    double total = 0;                  // max_eps over all rays
    std::vector<double> per_block;     // max_eps over Sigma_j(1)
    std::vector<double> ray_values;    // homogenized h^rho
    bool on_boundary = false;          // |total - 1| <= tol
    bool on_transversal = false;       // every |per_block_j - 1| <= tol
    Eigen::MatrixXd jacobian;          // r x n, central differences
    Eigen::MatrixXd block;             // M_jk = d h_j (u_k) for the PL decomposition u = u_1 + ... + u_r
    double block_defect = 0;           // max |M - I|
};

SmoothedDefining smoothed_defining(const TriangulationFan& fan, std::shared_ptr<const FanGeometry> geometry, double eps,
                                   const std::vector<double>& u, double tol = 1e-6,
                                   const QuadratureSpec& spec = fast_quadrature());

enum class ProjectionMode { Homogeneous, Equivariant };

/**
 * Point p of relint(sigma) with f_rho(p) = f_rho(u) for every ray of sigma, where f is the homogenized h^rho
 * (or the mollified h^rho in equivariant mode). Throws OutsideStar, NewtonDiverged.
 */
std::vector<double> coherent_projection(std::shared_ptr<const FanGeometry> geometry, const std::vector<int>& cone_rays,
                                        double eps, const std::vector<double>& u,
                                        ProjectionMode mode = ProjectionMode::Homogeneous,
                                        const QuadratureSpec& spec = fast_quadrature());

enum class ScalingMode { Total, Nef };

struct ScalingField {
    std::shared_ptr<const FanGeometry> geometry;
    ScalingMode mode = ScalingMode::Total;
    std::vector<int> block_of_ray;  // nef mode
    bool smoothed = false;
    double eps_prime = 0;           // ramp
    double delta_prime = 0;         // mollification radius, 0 for the PL star
    QuadratureSpec quad = fast_quadrature();

    /// V_rho(x) = h^rho(x) v_rho, or r_eps'(h^rho_delta'(x)) v_rho when smoothed.
    std::vector<double> vector_field(int ray, const std::vector<double>& x) const;
};

/// Flow of a single ray field for time t. Throws StepLimitExceeded.
std::vector<double> ray_flow(const ScalingField& field, int ray, const std::vector<double>& u, double t);
/// Composite flow: t per ray in total mode, per block in nef mode.
std::vector<double> scaling_flow(const ScalingField& field, const std::vector<double>& u, const std::vector<double>& t);
/// Closed form of the PL total action, t per ray.
std::vector<double> pl_scaling_action(const FanGeometry& geometry, const std::vector<double>& u,
                                      const std::vector<double>& t);

struct DiagnosticConfig {
    double eps = 0.05;
    std::vector<double> eps_grid;   // defaults to {2 eps, eps, eps / 2}
    int radial_offsets = 7;         // wall offsets per sampled wall point
    int wall_points = 2;
    int commutator_samples = 100;
    int slice_samples = 4;          // per cone
    double box = 2;
    unsigned seed = 7;
    QuadratureSpec quad = fast_quadrature();  // flows and slices
    QuadratureSpec radial_quad{12, 0.5, 2.5, false, 1e-8};  // finite differences need the accurate rule
};

struct SmoothingReport {
    std::vector<double> eps_grid;
    std::vector<double> fitted_C;   // max |D_u h_eps(u) - 1| / eps per grid value
    double max_defect = 0;
    bool radial_ok = false;
    double max_commutator = 0;
    bool commutator_ok = false;
    double max_slice_gap = 0;
    bool slice_ok = false;
    std::vector<std::string> witnesses;

    bool pass() const { return radial_ok && commutator_ok && slice_ok; }
};

SmoothingReport smoothing_diagnostics(std::shared_ptr<const FanGeometry> geometry, const DiagnosticConfig& cfg = {});
/// Throws DiagnosticFailed with the first witness.
void require_pass(const SmoothingReport& report);

}  // namespace bbci
