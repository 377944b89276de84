#include "project.hpp"

#include "bbci/error.hpp"

#include <fmt/core.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace bbci::cli {

namespace {

[[noreturn]] void schema(const std::string& what) { fail(ErrorKind::ParseError, what); }

const json& field(const json& j, const char* key, const char* where)
{
    if (!j.is_object() || !j.contains(key))
        schema(fmt::format("{}: missing \"{}\"", where, key));
    return j.at(key);
}

double parse_double(const json& j)
{
    if (j.is_number())
        return j.get<double>();
    return parse_q(j).get_d();
}

std::vector<double> parse_doubles(const json& j, const char* where)
{
    if (!j.is_array())
        schema(fmt::format("{}: expected an array", where));
    std::vector<double> out;
    for (const auto& x : j)
        out.push_back(parse_double(x));
    return out;
}

ProjectConfig parse_config(const json& j)
{
    ProjectConfig c;
    if (!j.is_object())
        schema("config: expected an object");
    for (const auto& [key, val] : j.items()) {
        if (key == "beta")
            c.beta = parse_double(val);
        else if (key == "betas")
            c.betas = parse_doubles(val, "config.betas");
        else if (key == "eps") {
            auto e = parse_doubles(val, "config.eps");
            if (e.size() != 3)
                schema("config.eps: expected [eps1, eps2, eps3]");
            c.eps1 = e[0];
            c.eps2 = e[1];
            c.eps3 = e[2];
        } else if (key == "smooth_eps")
            c.smooth_eps = parse_double(val);
        else if (key == "tol")
            c.tol = parse_double(val);
        else if (key == "seed") {
            if (!val.is_number_unsigned())
                schema("config.seed: expected a non-negative integer");
            c.seed = val.get<unsigned>();
        } else if (key == "samples") {
            if (!val.is_number_integer())
                schema("config.samples: expected an integer");
            c.samples = val.get<int>();
        } else if (key == "sign_convention") {
            if (!val.is_boolean())
                schema("config.sign_convention: expected a boolean");
            c.sign_convention = val.get<bool>();
        } else
            schema(fmt::format("config: unknown key \"{}\"", key));
    }
    return c;
}

void check_config(const ProjectConfig& c)
{
    require(c.beta > 0, ErrorKind::InvalidProject, "config.beta must be positive");
    for (double b : c.betas)
        require(b > 0, ErrorKind::InvalidProject, "config.betas must be positive");
    require(c.eps1 > 0 && c.eps2 > 0 && c.eps3 > 0, ErrorKind::InvalidProject, "config.eps must be positive");
    require(c.smooth_eps > 0, ErrorKind::InvalidProject, "config.smooth_eps must be positive");
    require(c.tol > 0, ErrorKind::InvalidProject, "config.tol must be positive");
    require(c.samples > 0, ErrorKind::InvalidProject, "config.samples must be positive");
}

}  // namespace

Q parse_q(const json& j)
{
    if (j.is_number_integer())
        return Q(j.get<long>());
    if (j.is_string())
        return parse_rational(j.get<std::string>());
    schema("expected an integer or a rational string such as \"1/2\"");
}

QVec parse_qvec(const json& j)
{
    if (!j.is_array())
        schema("expected a coordinate array");
    QVec v;
    for (const auto& x : j)
        v.push_back(parse_q(x));
    return v;
}

std::vector<QVec> parse_points(const json& j)
{
    if (!j.is_array())
        schema("expected an array of points");
    std::vector<QVec> pts;
    for (const auto& p : j)
        pts.push_back(parse_qvec(p));
    return pts;
}

ParameterisedPolyhedron parse_polyhedron(const json& j)
{
    int n = field(j, "n", "polyhedron").get<int>();
    std::vector<AffineFunctional> fs;
    for (const auto& f : field(j, "functionals", "polyhedron")) {
        AffineFunctional a{parse_qvec(field(f, "e", "functional")), parse_q(field(f, "c", "functional"))};
        if (static_cast<int>(a.e.size()) != n)
            schema("functional: e has the wrong length");
        fs.push_back(std::move(a));
    }
    return parameterised_polyhedron(n, std::move(fs));
}

Project parse_project(const json& j)
{
    if (!j.is_object())
        schema("project: expected an object");
    Project p;
    const json& r = field(j, "rank", "project");
    if (!r.is_number_integer() || r.get<int>() < 1)
        schema("rank: expected a positive integer");
    p.rank = r.get<int>();
    auto check_dim = [&](const QVec& v, const char* where) {
        if (static_cast<int>(v.size()) != p.rank)
            schema(fmt::format("{}: point of length {} in rank {}", where, v.size(), p.rank));
    };

    if (j.contains("summands")) {
        for (const auto& s : j.at("summands")) {
            const json& pts = s.is_object() ? field(s, "vertices", "summand") : s;
            p.summand_points.push_back(parse_points(pts));
            for (const auto& x : p.summand_points.back())
                check_dim(x, "summands");
        }
    }
    if (j.contains("heights")) {
        const json& h = j.at("heights");
        HeightFunction hf;
        hf.points = parse_points(field(h, "points", "heights"));
        const json& vals = field(h, "values", "heights");
        if (!vals.is_array() || vals.size() != hf.points.size())
            schema("heights: values must match points");
        for (const auto& x : vals)
            hf.values.push_back(parse_q(x));
        for (const auto& x : hf.points)
            check_dim(x, "heights");
        p.heights = std::move(hf);
    }
    if (j.contains("coefficients")) {
        const json& c = field(j.at("coefficients"), "c", "coefficients");
        if (!c.is_object())
            schema("coefficients.c: expected an object keyed by \"j,a_1,...,a_n\"");
        for (const auto& [key, val] : c.items()) {
            std::vector<long> parts;
            std::stringstream ss(key);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                try {
                    size_t used = 0;
                    parts.push_back(std::stol(tok, &used));
                    if (used != tok.size())
                        throw std::invalid_argument(tok);
                } catch (const std::exception&) {
                    schema(fmt::format("coefficients: bad key \"{}\"", key));
                }
            }
            if (static_cast<int>(parts.size()) != p.rank + 1 || parts[0] < 1)
                schema(fmt::format("coefficients: key \"{}\" must be a 1-based summand index and {} coordinates", key,
                                   p.rank));
            QVec alpha = to_qvec(std::vector<long>(parts.begin() + 1, parts.end()));
            p.coefficients[{static_cast<int>(parts[0] - 1), alpha}] = parse_double(val);
        }
    }
    if (j.contains("fan")) {
        const json& f = j.at("fan");
        auto rays = parse_points(field(f, "rays", "fan"));
        for (const auto& x : rays)
            check_dim(x, "fan.rays");
        std::vector<std::vector<int>> maximal;
        for (const auto& c : field(f, "maximal", "fan")) {
            if (!c.is_array())
                schema("fan.maximal: expected arrays of ray indices");
            std::vector<int> idx;
            for (const auto& i : c) {
                if (!i.is_number_integer() || i.get<int>() < 0 || i.get<size_t>() >= rays.size())
                    schema("fan.maximal: ray index out of range");
                idx.push_back(i.get<int>());
            }
            maximal.push_back(idx);
        }
        p.fan = fan_from_maximal(p.rank, rays, maximal);
    }
    if (j.contains("config"))
        p.config = parse_config(j.at("config"));
    for (const auto& [key, val] : j.items())
        if (key != "rank" && key != "summands" && key != "heights" && key != "coefficients" && key != "fan" &&
            key != "config")
            schema(fmt::format("project: unknown key \"{}\"", key));

    check_config(p.config);
    for (const auto& [key, val] : p.coefficients) {
        require(key.first < static_cast<int>(p.summand_points.size()), ErrorKind::InvalidProject,
                fmt::format("coefficient for summand {} of {}", key.first + 1, p.summand_points.size()));
        if (p.config.sign_convention)
            require(is_zero(key.second) ? val < 0 : val > 0, ErrorKind::SignConventionViolated,
                    fmt::format("c for summand {} at {} is {}", key.first + 1, to_string(key.second), val));
    }
    return p;
}

json read_json(const std::string& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::ParseError, "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorKind::ParseError, path + ": " + e.what());
    }
}

Project load_project(const std::string& path)
{
    try {
        return parse_project(read_json(path));
    } catch (const json::exception& e) {
        fail(ErrorKind::ParseError, path + ": " + e.what());
    }
}

NefPartition Project::nef() const
{
    require(!summand_points.empty(), ErrorKind::InvalidProject, "the project has no summands");
    std::vector<RationalPolytope> polys;
    for (const auto& pts : summand_points)
        polys.push_back(convex_hull(pts));
    return validate_nef_partition(polys);
}

NefPartition Project::dual() const { return dual_nef_partition(nef()); }

const HeightFunction& Project::height(const NefPartition& dual) const
{
    require(heights.has_value(), ErrorKind::InvalidProject, "the project has no heights");
    std::vector<QVec> verts;
    for (const auto& nj : dual.summands)
        verts.insert(verts.end(), nj.vertices.begin(), nj.vertices.end());
    auto pts = lattice_points(convex_hull(verts));
    std::vector<QVec> given = heights->points;
    std::sort(pts.begin(), pts.end());
    std::sort(given.begin(), given.end());
    require(std::adjacent_find(given.begin(), given.end()) == given.end(), ErrorKind::InvalidProject,
            "heights: repeated point");
    require(pts == given, ErrorKind::InvalidProject,
            fmt::format("heights: the points must be the {} lattice points of conv(nabla_1 u ... u nabla_r)", pts.size()));
    return *heights;
}

std::vector<HeightFunction> Project::factors(const NefPartition& dual) const
{
    const HeightFunction& h = height(dual);
    std::vector<HeightFunction> out;
    for (const auto& nj : dual.summands) {
        HeightFunction f;
        for (const auto& p : lattice_points(nj)) {
            f.points.push_back(p);
            f.values.push_back(h.values[static_cast<size_t>(h.index_of(p))]);
        }
        out.push_back(std::move(f));
    }
    return out;
}

TailoredSystem Project::tailored(double beta) const
{
    NefPartition d = dual();
    return tailored_system(d, height(d), beta, coefficients);
}

TriangulationFan Project::triangulation_fan() const
{
    if (fan) {
        TriangulationFan tf;
        tf.base = *fan;
        tf.point_of_ray.resize(fan->rays.size());
        std::iota(tf.point_of_ray.begin(), tf.point_of_ray.end(), 0);
        tf.summand_of_ray.assign(fan->rays.size(), 0);
        return tf;
    }
    NefPartition d = dual();
    return bbci_fan(d, height(d));
}

json to_json(const Q& q)
{
    if (q.get_den() == 1 && q.get_num().fits_slong_p())
        return q.get_num().get_si();
    return to_string(q);
}

json to_json(const QVec& v)
{
    json a = json::array();
    for (const auto& x : v)
        a.push_back(to_json(x));
    return a;
}

json to_json(const std::vector<QVec>& pts)
{
    json a = json::array();
    for (const auto& p : pts)
        a.push_back(to_json(p));
    return a;
}

json to_json(const RationalPolytope& p)
{
    json facets = json::array();
    for (const auto& f : p.facets)
        facets.push_back({{"normal", to_json(f.normal)}, {"offset", to_json(f.offset)}});
    return {{"dim", p.dim}, {"vertices", to_json(p.vertices)}, {"facets", facets}};
}

json to_json(const TropCell& c)
{
    return {{"label", c.label.per_factor},
            {"dim", c.dim},
            {"bounded", c.bounded},
            {"hrep",
             {{"eq", to_json(c.eq)}, {"eq_rhs", to_json(c.eq_rhs)}, {"ineq", to_json(c.ineq)},
              {"ineq_rhs", to_json(c.ineq_rhs)}}}};
}

json to_json(const TropicalCellComplex& t)
{
    json cells = json::array();
    for (const auto& c : t.cells)
        cells.push_back(to_json(c));
    json poset = json::array();
    for (auto [a, b] : t.poset)
        poset.push_back({a, b});
    return {{"n", t.n}, {"cells", cells}, {"poset", poset}};
}

json to_json(const DualityReport& r)
{
    return {{"ok", r.ok()},
            {"nabla_reflexive", r.nabla_reflexive},
            {"nabla_dual_is_hull_of_deltas", r.nabla_dual_is_hull_of_deltas},
            {"delta_dual_is_hull_of_nablas", r.delta_dual_is_hull_of_nablas},
            {"failures", r.failures}};
}

json to_json(const ParameterisedPolyhedron& p)
{
    json fs = json::array();
    for (const auto& f : p.functionals)
        fs.push_back({{"e", to_json(f.e)}, {"c", to_json(f.c)}});
    return {{"n", p.n}, {"functionals", fs}, {"minimal", p.minimal}};
}

std::string to_obj(const std::vector<RationalPolytope>& cells)
{
    std::map<QVec, int> index;
    std::vector<QVec> verts;
    auto id = [&](const QVec& p) {
        QVec q = p;
        q.resize(3, Q(0));
        auto [it, fresh] = index.emplace(q, static_cast<int>(verts.size()) + 1);
        if (fresh)
            verts.push_back(q);
        return it->second;
    };
    std::vector<std::string> records;
    // vertices of a 2-face in cyclic order around their centroid
    auto face_record = [&](const std::vector<QVec>& pts) {
        const size_t m = pts.size();
        std::vector<Eigen::Vector3d> x;
        Eigen::Vector3d c = Eigen::Vector3d::Zero();
        for (const auto& p : pts) {
            auto d = to_double(p);
            d.resize(3, 0.0);
            x.emplace_back(d[0], d[1], d[2]);
            c += x.back() / static_cast<double>(m);
        }
        Eigen::Vector3d a = (x[0] - c).normalized();
        Eigen::Vector3d nrm = Eigen::Vector3d::Zero();
        for (size_t i = 1; i < m && nrm.norm() < 1e-9; ++i)
            nrm = (x[0] - c).cross(x[i] - c);
        nrm.normalize();
        Eigen::Vector3d b = nrm.cross(a);
        std::vector<size_t> order(m);
        std::iota(order.begin(), order.end(), 0);
        std::vector<double> angle(m);
        for (size_t i = 0; i < m; ++i)
            angle[i] = std::atan2((x[i] - c).dot(b), (x[i] - c).dot(a));
        std::sort(order.begin(), order.end(), [&](size_t i, size_t k) { return angle[i] < angle[k]; });
        std::string r = "f";
        for (size_t i : order)
            r += fmt::format(" {}", id(pts[i]));
        return r;
    };
    for (const auto& p : cells) {
        require(p.rank <= 3, ErrorKind::DimensionMismatch, "OBJ export needs rank at most 3");
        if (p.dim == 0)
            id(p.vertices[0]);
        else if (p.dim == 1)
            records.push_back(fmt::format("l {} {}", id(p.vertices[0]), id(p.vertices[1])));
        else if (p.dim == 2)
            records.push_back(face_record(p.vertices));
        else if (p.dim == 3) {
            FaceLattice fl = face_lattice(p);
            for (const auto& f : fl.faces)
                if (f.dim == 2) {
                    std::vector<QVec> pts;
                    for (int i : f.vertices)
                        pts.push_back(p.vertices[static_cast<size_t>(i)]);
                    records.push_back(face_record(pts));
                }
        }
    }
    std::string out;
    for (const auto& q : verts) {
        auto d = to_double(q);
        out += fmt::format("v {:.9f} {:.9f} {:.9f}\n", d[0], d[1], d[2]);
    }
    for (const auto& r : records)
        out += r + "\n";
    return out;
}

}  // namespace bbci::cli
