#include "bbci/fan_skeleton.hpp"

#include "bbci/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace bbci {

namespace {

std::vector<QVec> cone_rays(const Fan& fan, const std::vector<int>& idx)
{
    std::vector<QVec> out;
    for (int k : idx)
        out.push_back(fan.rays[static_cast<size_t>(k)]);
    return out;
}

QMat to_qmat(const ZMat& z)
{
    QMat out;
    for (const auto& row : z)
        out.push_back(to_qvec(row));
    return out;
}

// subset sums of the rays, with the rays in fixed all set to 1
RationalPolytope cube_face(const Fan& fan, const std::vector<int>& rays, const std::vector<int>& fixed)
{
    const int n = fan.rank;
    QVec base = zeros(n);
    std::vector<int> free;
    for (int k : rays) {
        if (std::binary_search(fixed.begin(), fixed.end(), k))
            base = base + fan.rays[static_cast<size_t>(k)];
        else
            free.push_back(k);
    }
    std::vector<QVec> pts;
    for (int mask = 0; mask < (1 << free.size()); ++mask) {
        QVec p = base;
        for (size_t i = 0; i < free.size(); ++i)
            if (mask & (1 << i))
                p = p + fan.rays[static_cast<size_t>(free[i])];
        pts.push_back(std::move(p));
    }
    return convex_hull(pts);
}

}  // namespace

TriangulationFan fan_from_triangulation(const std::vector<QVec>& points, const std::vector<std::vector<int>>& simplices,
                                        const std::vector<int>& summand_of_point)
{
    require(!points.empty() && !simplices.empty(), ErrorKind::EmptyInput, "empty triangulation");
    require(summand_of_point.size() == points.size(), ErrorKind::DimensionMismatch, "one summand index per point");
    const int n = static_cast<int>(points[0].size());
    std::vector<int> used;
    for (const auto& s : simplices)
        for (int i : s)
            if (!is_zero(points[static_cast<size_t>(i)]))
                used.push_back(i);
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    TriangulationFan tf;
    std::map<int, int> ray_of;
    std::vector<QVec> rays;
    tf.r = 1;
    for (int i : used) {
        ray_of[i] = static_cast<int>(rays.size());
        rays.push_back(points[static_cast<size_t>(i)]);
        tf.point_of_ray.push_back(i);
        int j = summand_of_point[static_cast<size_t>(i)];
        require(j >= 0, ErrorKind::BadPartition, "ray without a summand");
        tf.summand_of_ray.push_back(j);
        tf.r = std::max(tf.r, j + 1);
    }
    std::vector<std::vector<int>> maximal;
    for (const auto& s : simplices) {
        std::vector<int> m;
        for (int i : s)
            if (!is_zero(points[static_cast<size_t>(i)]))
                m.push_back(ray_of[i]);
        std::sort(m.begin(), m.end());
        require(rank(cone_rays(Fan{n, rays, {}, false}, m), n) == static_cast<int>(m.size()),
                ErrorKind::NotTriangulation, "simplex does not span a simplicial cone");
        maximal.push_back(m);
    }
    tf.base = fan_from_maximal(n, rays, maximal);
    return tf;
}

TriangulationFan fan_from_triangulation(const RegularSubdivision& T, const std::vector<int>& summand_of_point)
{
    require(T.is_triangulation, ErrorKind::NotTriangulation, "subdivision is not a triangulation");
    std::vector<std::vector<int>> simplices;
    for (const auto& c : T.cells)
        simplices.push_back(c.label);
    return fan_from_triangulation(T.points, simplices, summand_of_point);
}

TriangulationFan bbci_fan(const NefPartition& nef_dual, const HeightFunction& h)
{
    std::vector<QVec> all;
    for (const auto& nj : nef_dual.summands)
        all.insert(all.end(), nj.vertices.begin(), nj.vertices.end());
    RationalPolytope hull = convex_hull(all);
    auto sub = regular_subdivision(h);
    auto flags = classify_triangulation(sub, h);
    require(flags.triangulation, ErrorKind::NotTriangulation, "height does not induce a triangulation");
    require(flags.centred_star, ErrorKind::NotCentred, "height is not centred");
    std::vector<int> summand;
    for (const auto& p : h.points) {
        int fj = -1;
        for (int j = 0; j < nef_dual.length() && !is_zero(p); ++j)
            if (nef_dual.summands[static_cast<size_t>(j)].contains(p))
                fj = j;
        summand.push_back(fj);
    }
    TriangulationFan tf = fan_from_triangulation(h.points, boundary_cells(sub, hull), summand);
    tf.r = nef_dual.length();
    return tf;
}

int TransversalPoset::find(int cone) const
{
    for (size_t i = 0; i < cones.size(); ++i)
        if (cones[i].cone == cone)
            return static_cast<int>(i);
    return -1;
}

TransversalPoset transversal_cones(const TriangulationFan& fan)
{
    TransversalPoset out;
    for (size_t c = 0; c < fan.base.cones.size(); ++c) {
        TransversalCone tc;
        tc.cone = static_cast<int>(c);
        tc.parts.resize(static_cast<size_t>(fan.r));
        for (int k : fan.base.cones[c])
            tc.parts[static_cast<size_t>(fan.summand_of_ray[static_cast<size_t>(k)])].push_back(k);
        if (std::all_of(tc.parts.begin(), tc.parts.end(), [](const auto& p) { return !p.empty(); }))
            out.cones.push_back(std::move(tc));
    }
    for (size_t a = 0; a < out.cones.size(); ++a)
        for (size_t b = 0; b < out.cones.size(); ++b) {
            const auto& ca = fan.base.cones[static_cast<size_t>(out.cones[a].cone)];
            const auto& cb = fan.base.cones[static_cast<size_t>(out.cones[b].cone)];
            if (ca.size() < cb.size() && std::includes(cb.begin(), cb.end(), ca.begin(), ca.end()))
                out.faces.emplace_back(static_cast<int>(a), static_cast<int>(b));
        }
    return out;
}

QuotientFan quotient_fan(const Fan& fan, const std::vector<int>& cone_rays_in)
{
    std::vector<int> sigma = cone_rays_in;
    std::sort(sigma.begin(), sigma.end());
    require(fan.find_cone(sigma) >= 0, ErrorKind::ConeNotInFan, "cone is not in the fan");
    const int n = fan.rank;
    QuotientFan q;
    q.annihilator = integer_kernel(cone_rays(fan, sigma), n);
    const int m = static_cast<int>(q.annihilator.size());
    QMat proj = to_qmat(q.annihilator);
    q.ray_map.assign(fan.rays.size(), -1);
    std::vector<QVec> rays;
    std::vector<std::vector<int>> maximal;
    for (const auto& tau : fan.maximal_cones()) {
        if (!std::includes(tau.begin(), tau.end(), sigma.begin(), sigma.end()))
            continue;
        std::vector<int> img;
        for (int k : tau) {
            if (std::binary_search(sigma.begin(), sigma.end(), k))
                continue;
            if (q.ray_map[static_cast<size_t>(k)] < 0) {
                q.ray_map[static_cast<size_t>(k)] = static_cast<int>(rays.size());
                rays.push_back(primitive(mat_vec(proj, fan.rays[static_cast<size_t>(k)])));
            }
            img.push_back(q.ray_map[static_cast<size_t>(k)]);
        }
        maximal.push_back(img);
    }
    if (m == 0) {
        q.fan.rank = 0;
        q.fan.cones = {{}};
        q.fan.complete = true;
        return q;
    }
    q.fan = fan_from_maximal(m, rays, maximal);
    return q;
}

BarycentricComplex barycentric_complex(const TriangulationFan& fan)
{
    BarycentricComplex out;
    for (const auto& c : fan.base.cones)
        out.cubes.push_back(cube_face(fan.base, c, {}));
    TransversalPoset tp = transversal_cones(fan);
    for (const auto& mc : fan.base.maximal_cones()) {
        int ci = fan.base.find_cone(mc);
        for (const auto& tc : tp.cones) {
            const auto& tau = fan.base.cones[static_cast<size_t>(tc.cone)];
            if (!std::includes(mc.begin(), mc.end(), tau.begin(), tau.end()))
                continue;
            bool minimal = true;
            for (const auto& other : tp.cones) {
                const auto& o = fan.base.cones[static_cast<size_t>(other.cone)];
                if (o.size() < tau.size() && std::includes(tau.begin(), tau.end(), o.begin(), o.end()))
                    minimal = false;
            }
            if (minimal)
                out.transversal.push_back({ci, tc.cone, cube_face(fan.base, mc, tau)});
        }
    }
    return out;
}

std::optional<QVec> cone_coordinates(const Fan& fan, int cone, const QVec& x)
{
    const auto& idx = fan.cones[static_cast<size_t>(cone)];
    if (idx.empty())
        return is_zero(x) ? std::optional<QVec>(QVec{}) : std::nullopt;
    return solve(transpose(cone_rays(fan, idx)), x, static_cast<int>(idx.size()));
}

Q h_rho(const Fan& fan, int ray, const QVec& x)
{
    for (const auto& mc : fan.maximal_cones()) {
        auto pos = std::find(mc.begin(), mc.end(), ray);
        if (pos == mc.end())
            continue;
        auto lam = cone_coordinates(fan, fan.find_cone(mc), x);
        if (!lam || std::any_of(lam->begin(), lam->end(), [](const Q& l) { return l < 0; }))
            continue;
        return (*lam)[static_cast<size_t>(pos - mc.begin())];
    }
    return 0;
}

SkeletonModel skeleton_model(const TriangulationFan& fan, const TransversalPoset& poset)
{
    SkeletonModel model;
    const int n = fan.base.rank;
    for (const auto& tc : poset.cones) {
        SkeletonChart ch;
        ch.cone = tc.cone;
        ch.quotient = quotient_fan(fan.base, fan.base.cones[static_cast<size_t>(tc.cone)]);
        ch.factor_simplices = tc.parts;
        ch.dim_cone = static_cast<int>(fan.base.cones[static_cast<size_t>(tc.cone)].size());
        ch.dim_perp = static_cast<int>(ch.quotient.annihilator.size());
        require(ch.dim_cone + ch.dim_perp == n, ErrorKind::NonRegularComplex, "annihilator has the wrong rank");
        model.charts.push_back(std::move(ch));
    }
    for (auto [a, b] : poset.faces) {
        const auto& small = model.charts[static_cast<size_t>(a)].quotient;
        const auto& big = model.charts[static_cast<size_t>(b)].quotient;
        ChartInclusion inc;
        inc.from = b;
        inc.to = a;
        // rows of the big annihilator as integer combinations of the small one
        QMat basis_t = transpose(to_qmat(small.annihilator));
        for (const auto& row : big.annihilator) {
            auto c = solve(basis_t, to_qvec(row), static_cast<int>(small.annihilator.size()));
            require(c.has_value() && is_integral(*c), ErrorKind::NonRegularComplex, "annihilators are not nested");
            inc.map.push_back(to_zvec(*c));
        }
        inc.ray_map.assign(small.fan.rays.size(), -1);
        for (size_t k = 0; k < small.ray_map.size(); ++k)
            if (small.ray_map[k] >= 0)
                inc.ray_map[static_cast<size_t>(small.ray_map[k])] = big.ray_map[k];
        model.inclusions.push_back(std::move(inc));
    }
    return model;
}

OrbitRepresentative nef_orbit_representative(const TriangulationFan& fan, const TransversalCone& cone, const QVec& v)
{
    auto lam = cone_coordinates(fan.base, cone.cone, v);
    require(lam.has_value() && std::all_of(lam->begin(), lam->end(), [](const Q& l) { return l > 0; }),
            ErrorKind::NotInRelativeInterior, "point is not in the relative interior of the cone");
    const auto& idx = fan.base.cones[static_cast<size_t>(cone.cone)];
    OrbitRepresentative out;
    out.rep = zeros(fan.base.rank);
    for (const auto& part : cone.parts) {
        Q eta = 0;
        QVec xj = zeros(fan.base.rank);
        for (int k : part) {
            Q l = (*lam)[static_cast<size_t>(std::find(idx.begin(), idx.end(), k) - idx.begin())];
            eta = std::max(eta, l);
            xj = xj + l * fan.base.rays[static_cast<size_t>(k)];
        }
        out.eta.push_back(eta);
        out.t.push_back(std::log(eta.get_d()));
        out.rep = out.rep + (1 / eta) * xj;
    }
    return out;
}

std::vector<double> nef_action(const TriangulationFan& fan, const TransversalCone& cone, const std::vector<double>& t,
                               const QVec& x)
{
    require(t.size() == cone.parts.size(), ErrorKind::DimensionMismatch, "one time per summand");
    auto lam = cone_coordinates(fan.base, cone.cone, x);
    require(lam.has_value(), ErrorKind::NotInRelativeInterior, "point is not in the span of the cone");
    const auto& idx = fan.base.cones[static_cast<size_t>(cone.cone)];
    std::vector<double> out(static_cast<size_t>(fan.base.rank), 0.0);
    for (size_t j = 0; j < cone.parts.size(); ++j)
        for (int k : cone.parts[j]) {
            double l = (*lam)[static_cast<size_t>(std::find(idx.begin(), idx.end(), k) - idx.begin())].get_d();
            auto ray = to_double(fan.base.rays[static_cast<size_t>(k)]);
            for (size_t i = 0; i < out.size(); ++i)
                out[i] += std::exp(t[j]) * l * ray[i];
        }
    return out;
}

SkeletonMembership skeleton_membership(const std::vector<double>& u, const std::vector<double>& theta,
                                       const SkeletonContext& ctx, double tol)
{
    require(ctx.fan != nullptr && ctx.gradient && ctx.residuals, ErrorKind::ContextMissing,
            "membership needs a fan, a gradient and boundary residuals");
    const Fan& fan = ctx.fan->base;
    const size_t n = static_cast<size_t>(fan.rank);
    require(u.size() == n && theta.size() == n, ErrorKind::DimensionMismatch, "u and theta must have the fan rank");
    SkeletonMembership out;
    std::vector<double> x = ctx.gradient(u);
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<long>(n));
    size_t best_size = n + 1;
    for (size_t c = 0; c < fan.cones.size(); ++c) {
        const auto& idx = fan.cones[c];
        if (idx.size() >= best_size)
            continue;
        bool inside;
        if (idx.empty()) {
            inside = xv.norm() <= tol;
        } else {
            Eigen::MatrixXd R(static_cast<long>(n), static_cast<long>(idx.size()));
            for (size_t k = 0; k < idx.size(); ++k) {
                auto ray = to_double(fan.rays[static_cast<size_t>(idx[k])]);
                for (size_t i = 0; i < n; ++i)
                    R(static_cast<long>(i), static_cast<long>(k)) = ray[i];
            }
            Eigen::VectorXd lam = R.colPivHouseholderQr().solve(xv);
            inside = (R * lam - xv).norm() <= tol && lam.minCoeff() >= -tol;
        }
        if (inside) {
            out.cone = static_cast<int>(c);
            best_size = idx.size();
        }
    }
    if (out.cone < 0)
        return out;
    for (double g : ctx.residuals(u))
        if (std::abs(g) > tol)
            return out;
    const auto& idx = fan.cones[static_cast<size_t>(out.cone)];
    std::vector<bool> hit(static_cast<size_t>(ctx.fan->r), false);
    for (int k : idx)
        hit[static_cast<size_t>(ctx.fan->summand_of_ray[static_cast<size_t>(k)])] = true;
    if (idx.empty() || std::find(hit.begin(), hit.end(), false) != hit.end())
        return out;
    const double two_pi = 2 * std::numbers::pi;
    for (int k : idx) {
        auto ray = to_double(fan.rays[static_cast<size_t>(k)]);
        double d = 0;
        for (size_t i = 0; i < n; ++i)
            d += ray[i] * theta[i];
        if (std::abs(d - two_pi * std::round(d / two_pi)) > tol)
            return out;
    }
    out.in_skeleton = true;
    return out;
}

}  // namespace bbci
