#pragma once

#include "bbci/nefpart.hpp"
#include "bbci/subdiv.hpp"

#include <functional>
#include <vector>

namespace bbci {

struct TriangulationFan {
    Fan base;
    std::vector<int> point_of_ray;    // index into the triangulated point set
    std::vector<int> summand_of_ray;  // j with rho in Sigma_j(1)
    int r = 1;
};

/// Fan over simplices given as labels into points; the origin may appear in labels and is dropped.
TriangulationFan fan_from_triangulation(const std::vector<QVec>& points, const std::vector<std::vector<int>>& simplices,
                                        const std::vector<int>& summand_of_point);
/// Fan over a star triangulation. Throws NotTriangulation.
TriangulationFan fan_from_triangulation(const RegularSubdivision& T, const std::vector<int>& summand_of_point);
/// Fan of the boundary triangulation of conv(nabla_1 u ... u nabla_r) induced by h, rays labelled by summand.
TriangulationFan bbci_fan(const NefPartition& nef_dual, const HeightFunction& h);

struct TransversalCone {
    int cone = 0;                        // index into base.cones
    std::vector<std::vector<int>> parts; // sigma_j(1) as ray indices
};

struct TransversalPoset {
    std::vector<TransversalCone> cones;
    std::vector<std::pair<int, int>> faces;  // (a, b): cone a is a proper face of cone b (indices into cones)
    int find(int cone) const;
};

TransversalPoset transversal_cones(const TriangulationFan& fan);

struct QuotientFan {
    Fan fan;                   // in N / R sigma with the lattice basis below
    ZMat annihilator;          // rows: HNF basis of sigma-perp in M, also the projection N -> quotient
    std::vector<int> ray_map;  // ray of the fan -> ray of the quotient, -1 for rays of sigma or outside the star
};

/// Throws ConeNotInFan.
QuotientFan quotient_fan(const Fan& fan, const std::vector<int>& cone_rays);

struct BaryPiece {
    int cone = 0;  // cone whose cube contains the piece
    int face = 0;  // transversal face tau of cone: the piece is where every ray of tau has coordinate 1
    RationalPolytope polytope;
};

struct BarycentricComplex {
    std::vector<RationalPolytope> cubes;  // per cone of the base fan
    std::vector<BaryPiece> transversal;   // maximal cones paired with minimal transversal faces
};

BarycentricComplex barycentric_complex(const TriangulationFan& fan);

/// Coordinates of x in the simplicial cone with the given rays; nullopt when x is outside its span.
std::optional<QVec> cone_coordinates(const Fan& fan, int cone, const QVec& x);

/// Piecewise linear h^rho: the rho-coordinate in any cone containing x and rho, 0 outside the star.
Q h_rho(const Fan& fan, int ray, const QVec& x);

struct ChartInclusion {
    int from = 0;  // larger transversal cone tau (chart index)
    int to = 0;    // face sigma of tau (chart index)
    ZMat map;      // quotient lattice map N/sigma -> N/tau
    std::vector<int> ray_map;  // quotient rays of sigma -> quotient rays of tau (-1 for rays collapsing)
};

struct SkeletonChart {
    int cone = 0;
    QuotientFan quotient;
    std::vector<std::vector<int>> factor_simplices;  // sigma_j(1)
    int dim_perp = 0;
    int dim_cone = 0;
};

struct SkeletonModel {
    std::vector<SkeletonChart> charts;  // one per transversal cone
    std::vector<ChartInclusion> inclusions;
};

SkeletonModel skeleton_model(const TriangulationFan& fan, const TransversalPoset& poset);

struct OrbitRepresentative {
    QVec rep;
    QVec eta;               // eta_j(v)
    std::vector<double> t;  // log eta_j(v)
};

/// Throws NotInRelativeInterior.
OrbitRepresentative nef_orbit_representative(const TriangulationFan& fan, const TransversalCone& cone, const QVec& v);

/// e^{t_1} x_1 + ... + e^{t_r} x_r for x in the cone.
std::vector<double> nef_action(const TriangulationFan& fan, const TransversalCone& cone, const std::vector<double>& t,
                               const QVec& x);

using VectorField = std::function<std::vector<double>(const std::vector<double>&)>;

struct SkeletonContext {
    const TriangulationFan* fan = nullptr;
    VectorField gradient;   // Phi = d phi
    VectorField residuals;  // G_j(u) - |c_{0,j}|
};

struct SkeletonMembership {
    bool in_skeleton = false;
    int cone = -1;  // carrier cone of Phi(u), -1 if none
};

/// Throws ContextMissing.
SkeletonMembership skeleton_membership(const std::vector<double>& u, const std::vector<double>& theta,
                                       const SkeletonContext& ctx, double tol = 1e-8);

}  // namespace bbci
