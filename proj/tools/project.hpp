#pragma once

#include "bbci/fan_skeleton.hpp"
#include "bbci/nefpart.hpp"
#include "bbci/polydist.hpp"
#include "bbci/tailoring.hpp"
#include "bbci/tropical.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bbci::cli {

using nlohmann::json;

struct ProjectConfig {
    double beta = 50;
    std::vector<double> betas{20, 50, 100};
    double eps1 = 0.05, eps2 = 0.05, eps3 = 0.01;
    double smooth_eps = 0.05;
    double tol = 1e-8;
    unsigned seed = 7;
    int samples = 500;
    bool sign_convention = true;
};

/**
 * Project file: {"rank", "summands": [[points]...], "heights": {"points", "values"}, "coefficients": {"c": {"j,a": v}},
 * "fan": {"rays", "maximal"}, "config": {...}}. Only rank is mandatory; commands ask for what they need.
 */
struct Project {
    int rank = 0;
    std::vector<std::vector<QVec>> summand_points;
    std::optional<HeightFunction> heights;
    CoefficientMap coefficients;
    std::optional<Fan> fan;
    ProjectConfig config;

    /// Throws the nefpart validation errors.
    NefPartition nef() const;
    NefPartition dual() const;
    /// Heights, checked to live on the lattice points of conv(nabla_1 u ... u nabla_r).
    const HeightFunction& height(const NefPartition& dual) const;
    /// h restricted to each nabla_j.
    std::vector<HeightFunction> factors(const NefPartition& dual) const;
    TailoredSystem tailored(double beta) const;
    /// The project fan, or the fan of the boundary triangulation induced by the heights.
    TriangulationFan triangulation_fan() const;
};

/// Schema check and conversion; throws ParseError. Semantic checks (lattice points, signs, beta > 0) throw the
/// module errors.
Project parse_project(const json& j);
Project load_project(const std::string& path);
json read_json(const std::string& path);

Q parse_q(const json& j);
QVec parse_qvec(const json& j);
std::vector<QVec> parse_points(const json& j);
/// {"n", "functionals": [{"e": [...], "c": v}]}
ParameterisedPolyhedron parse_polyhedron(const json& j);

json to_json(const Q& q);
json to_json(const QVec& v);
json to_json(const std::vector<QVec>& pts);
json to_json(const RationalPolytope& p);
json to_json(const TropCell& c);
json to_json(const TropicalCellComplex& t);
json to_json(const DualityReport& r);
json to_json(const ParameterisedPolyhedron& p);

/// OBJ with `v x y z` (9 digits), `l i j` for edges and `f ...` for 2-faces, 1-indexed. Rank at most 3.
std::string to_obj(const std::vector<RationalPolytope>& cells);

}  // namespace bbci::cli
