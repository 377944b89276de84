#include "bbci/potentials.hpp"
#include "bbci/error.hpp"

#include <boost/math/special_functions/expint.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace bbci {

namespace {

using Vec = std::vector<double>;

double dotd(const double* a, const double* b, int n)
{
    double s = 0;
    for (int i = 0; i < n; ++i)
        s += a[i] * b[i];
    return s;
}

double norm(const Vec& v) { return std::sqrt(dotd(v.data(), v.data(), static_cast<int>(v.size()))); }

Vec sub(const Vec& a, const Vec& b)
{
    Vec r(a.size());
    for (size_t i = 0; i < a.size(); ++i)
        r[i] = a[i] - b[i];
    return r;
}

Eigen::VectorXd as_eigen(const Vec& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())); }

Vec as_vec(const Eigen::VectorXd& v) { return Vec(v.data(), v.data() + v.size()); }

std::string fmt_vec(const Vec& v)
{
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < v.size(); ++i)
        os << (i ? ", " : "") << v[i];
    os << ")";
    return os.str();
}

// int_0^t exp(-1/s) ds = t exp(-1/t) - E1(1/t)
double raw_q(double t)
{
    if (t <= 0)
        return 0;
    if (t < 1e-3)
        return 0;  // below exp(-1000)
    return t * std::exp(-1 / t) - boost::math::expint(1, 1 / t);
}

const double kQNorm = 1 / raw_q(1);

Vec barycentre(const RationalPolytope& P, const Face& F)
{
    Vec b(static_cast<size_t>(P.rank), 0.0);
    for (int v : F.vertices)
        for (int i = 0; i < P.rank; ++i)
            b[static_cast<size_t>(i)] += P.vertices[static_cast<size_t>(v)][static_cast<size_t>(i)].get_d();
    for (auto& x : b)
        x /= static_cast<double>(F.vertices.size());
    return b;
}

}  // namespace

QuadraticForm QuadraticForm::identity(int n)
{
    return {Vec(static_cast<size_t>(n), 0.0), Eigen::MatrixXd::Identity(n, n)};
}

TentedPotentialSpec validated(TentedPotentialSpec spec)
{
    const int n = spec.P.rank;
    require(spec.P.full_dimensional(), ErrorKind::NotFullDimensional, "potential polytope must be full-dimensional");
    require(spec.eps1 >= 0 && spec.eps2 > 0 && spec.eps3 > 0, ErrorKind::ConvexityFailed,
            "eps1 must be non-negative and eps2, eps3 positive");
    if (spec.psi.g.size() == 0)
        spec.psi = QuadraticForm::identity(n);
    if (spec.psi.center.empty())
        spec.psi.center.assign(static_cast<size_t>(n), 0.0);
    require(spec.psi.g.rows() == n && spec.psi.g.cols() == n && static_cast<int>(spec.psi.center.size()) == n,
            ErrorKind::DimensionMismatch, "convexifier dimension");
    require((spec.psi.g - spec.psi.g.transpose()).cwiseAbs().maxCoeff() <= 1e-12, ErrorKind::ConvexityFailed,
            "convexifier matrix is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(spec.psi.g);
    require(llt.info() == Eigen::Success, ErrorKind::ConvexityFailed, "convexifier matrix is not positive definite");
    if (spec.center)
        require(in_relint(spec.P, *spec.center), ErrorKind::NotInRelativeInterior, "centre must lie in int(P)");
    else
        require(in_relint(spec.P, QVec(static_cast<size_t>(n), Q(0))), ErrorKind::OriginNotInterior,
                "potential needs the origin in the interior of P");

    const FaceLattice L = face_lattice(spec.P);
    if (spec.tent_points.empty()) {
        for (const auto& F : L.faces)
            spec.tent_points.push_back(F.dim >= 0 && F.dim < n ? barycentre(spec.P, F) : Vec{});
    }
    require(spec.tent_points.size() == L.faces.size(), ErrorKind::DimensionMismatch,
            "one tent point per face of the face lattice");
    for (size_t k = 0; k < L.faces.size(); ++k) {
        const Face& F = L.faces[k];
        if (F.dim < 0 || F.dim >= n)
            continue;
        const Vec& u = spec.tent_points[k];
        require(static_cast<int>(u.size()) == n, ErrorKind::DimensionMismatch, "tent point dimension");
        for (size_t f = 0; f < spec.P.facets.size(); ++f) {
            const auto& fac = spec.P.facets[f];
            double lhs = 0, scale = 0;
            for (int i = 0; i < n; ++i) {
                const double a = fac.normal[static_cast<size_t>(i)].get_d();
                lhs += a * u[static_cast<size_t>(i)];
                scale += a * a;
            }
            const double slack = (fac.offset.get_d() - lhs) / std::sqrt(scale);
            const bool on = std::find(F.facets.begin(), F.facets.end(), static_cast<int>(f)) != F.facets.end();
            if (on)
                require(std::abs(slack) <= 1e-9, ErrorKind::NotInRelativeInterior,
                        "tent point off the affine hull of its face: " + fmt_vec(u));
            else
                require(slack > 1e-9, ErrorKind::NotInRelativeInterior,
                        "tent point not in the relative interior of its face: " + fmt_vec(u));
        }
    }
    return spec;
}

double PL1::operator()(const double* x) const
{
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& c : chains)
        best = std::max(best, dotd(c.nu.data(), x, static_cast<int>(c.nu.size())));
    return best;
}

PL1 phi1_build(const TentedPotentialSpec& spec)
{
    const int n = spec.P.rank;
    QVec c = spec.center ? *spec.center : QVec(static_cast<size_t>(n), Q(0));
    const Vec cd = to_double(c);
    const FaceLattice L = face_lattice(spec.P);

    PL1 out;
    for (size_t k = 0; k < L.faces.size(); ++k) {
        const int d = L.faces[k].dim;
        if (d >= 0 && d < n) {
            out.tent_points.push_back(sub(spec.tent_points[k], cd));
            out.tent_dims.push_back(d);
        } else {
            out.tent_points.emplace_back();
            out.tent_dims.push_back(-1);
        }
    }

    // maximal chains: walk the covers from each vertex up to the facets
    std::vector<std::vector<int>> chains;
    std::vector<int> cur;
    auto walk = [&](auto&& self, int f) -> void {
        cur.push_back(f);
        if (L.faces[static_cast<size_t>(f)].dim == n - 1) {
            chains.push_back(cur);
        } else {
            for (int g : L.covers[static_cast<size_t>(f)])
                if (L.faces[static_cast<size_t>(g)].dim == L.faces[static_cast<size_t>(f)].dim + 1)
                    self(self, g);
        }
        cur.pop_back();
    };
    for (size_t k = 0; k < L.faces.size(); ++k)
        if (L.faces[k].dim == 0)
            walk(walk, static_cast<int>(k));

    for (const auto& ch : chains) {
        Eigen::MatrixXd U(n, n);
        Eigen::VectorXd rhs(n);
        for (int i = 0; i < n; ++i) {
            const Vec& u = out.tent_points[static_cast<size_t>(ch[static_cast<size_t>(i)])];
            for (int j = 0; j < n; ++j)
                U(i, j) = u[static_cast<size_t>(j)];
            rhs(i) = 1 - i * spec.eps1;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(U);
        require(lu.rank() == n && lu.rcond() > 1e-12, ErrorKind::SingularChainSystem,
                "tent points of a maximal chain are linearly dependent");
        out.chains.push_back({ch, as_vec(lu.solve(rhs))});
    }

    // phi1 = nu_C on cone(S_C) iff no other nu exceeds the tent values at the generators u_F
    for (const auto& C : out.chains)
        for (int f : C.faces) {
            const Vec& u = out.tent_points[static_cast<size_t>(f)];
            const double target = 1 - out.tent_dims[static_cast<size_t>(f)] * spec.eps1;
            const double v = out(u.data());
            if (v > target + 1e-10 * std::max(1.0, std::abs(target)) || target <= 0)
                fail(ErrorKind::NotConvexForThisEpsilon,
                     "tent function is not convex at u_F = " + fmt_vec(u) + " (eps1 = " + std::to_string(spec.eps1) + ")");
        }
    for (const auto& C : out.chains) {
        Vec b(static_cast<size_t>(n), 0.0);
        for (int f : C.faces)
            for (int i = 0; i < n; ++i)
                b[static_cast<size_t>(i)] += out.tent_points[static_cast<size_t>(f)][static_cast<size_t>(i)] / n;
        const double own = dotd(C.nu.data(), b.data(), n);
        require(out(b.data()) <= own + 1e-10 * std::max(1.0, std::abs(own)), ErrorKind::NotConvexForThisEpsilon,
                "tent function is not convex at a chain barycentre");
    }
    return out;
}

double q_cut(double t, double* d1, double* d2)
{
    if (t <= 0) {
        if (d1)
            *d1 = 0;
        if (d2)
            *d2 = 0;
        return 0;
    }
    const double e = std::exp(-1 / t);
    if (d1)
        *d1 = kQNorm * e;
    if (d2)
        *d2 = kQNorm * e / (t * t);
    return kQNorm * raw_q(t);
}

double q_eps(double eps, double x, double* d1, double* d2)
{
    const double v = q_cut(x - 1 + eps, d1, d2) / eps;
    if (d1)
        *d1 /= eps;
    if (d2)
        *d2 /= eps;
    return v;
}

PotentialEvaluator::PotentialEvaluator(TentedPotentialSpec spec) : spec_(validated(std::move(spec)))
{
    n_ = spec_.P.rank;
    c_ = spec_.center ? to_double(*spec_.center) : Vec(static_cast<size_t>(n_), 0.0);
    phi1_ = phi1_build(spec_);
}

PotentialEvaluator PotentialEvaluator::quadratic(const RationalPolytope& P, Eigen::MatrixXd g, std::optional<QVec> center)
{
    PotentialEvaluator ev;
    ev.n_ = P.rank;
    ev.quadratic_ = true;
    ev.spec_.P = P;
    ev.spec_.center = std::move(center);
    ev.spec_.psi = {Vec(static_cast<size_t>(P.rank), 0.0), std::move(g)};
    require(ev.spec_.psi.g.rows() == ev.n_ && ev.spec_.psi.g.cols() == ev.n_, ErrorKind::DimensionMismatch,
            "quadratic form dimension");
    Eigen::LLT<Eigen::MatrixXd> llt(ev.spec_.psi.g);
    require(llt.info() == Eigen::Success, ErrorKind::ConvexityFailed, "quadratic form is not positive definite");
    ev.c_ = ev.spec_.center ? to_double(*ev.spec_.center) : Vec(static_cast<size_t>(ev.n_), 0.0);
    return ev;
}

double PotentialEvaluator::phi2(const Vec& y) const
{
    double s = 0;
    for (const auto& C : phi1_.chains)
        s += q_eps(spec_.eps2, dotd(C.nu.data(), y.data(), n_));
    return s;
}

double PotentialEvaluator::phi3(const Vec& y, Vec* grad, Eigen::MatrixXd* hess) const
{
    if (grad)
        grad->assign(static_cast<size_t>(n_), 0.0);
    if (hess)
        *hess = Eigen::MatrixXd::Zero(n_, n_);
    double s = 0;
    for (const auto& C : phi1_.chains) {
        double d1 = 0, d2 = 0;
        s += q_eps(spec_.eps2, dotd(C.nu.data(), y.data(), n_), &d1, &d2);
        if (grad && d1 != 0)
            for (int i = 0; i < n_; ++i)
                (*grad)[static_cast<size_t>(i)] += d1 * C.nu[static_cast<size_t>(i)];
        if (hess && d2 != 0) {
            const Eigen::VectorXd nu = as_eigen(C.nu);
            *hess += d2 * nu * nu.transpose();
        }
    }
    const Eigen::VectorXd z = as_eigen(sub(y, spec_.psi.center));
    const Eigen::VectorXd gz = spec_.psi.g * z;
    s += spec_.eps3 * z.dot(gz);
    if (grad)
        for (int i = 0; i < n_; ++i)
            (*grad)[static_cast<size_t>(i)] += 2 * spec_.eps3 * gz(i);
    if (hess)
        *hess += 2 * spec_.eps3 * spec_.psi.g;
    return s;
}

PotentialValue PotentialEvaluator::eval(const Vec& x) const
{
    require(static_cast<int>(x.size()) == n_, ErrorKind::DimensionMismatch, "potential argument dimension");
    const Vec y0 = sub(x, c_);
    PotentialValue out;
    out.grad.assign(static_cast<size_t>(n_), 0.0);
    if (norm(y0) == 0)
        return out;
    if (quadratic_) {
        const Eigen::VectorXd z = as_eigen(y0);
        const Eigen::VectorXd gz = spec_.psi.g * z;
        out.phi = z.dot(gz);
        out.grad = as_vec(2 * gz);
        return out;
    }

    // phi3 is convex along the ray and below 1 at the origin, so s -> phi3(s y0) crosses 1 once
    auto f = [&](double s) {
        Vec y = y0;
        for (auto& v : y)
            v *= s;
        return phi3(y) - 1;
    };
    require(f(0) < 0, ErrorKind::RootBracketFailed, "phi3(0) >= 1; eps3 too large for the convexifier");
    double lo = 0, hi = 1;
    int guard = 0;
    while (f(hi) <= 0) {
        lo = hi;
        hi *= 2;
        require(++guard < 200, ErrorKind::RootBracketFailed, "phi3 stays below 1 along " + fmt_vec(x));
    }
    boost::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
    const double s = 0.5 * (r.first + r.second);
    Vec y = y0;
    for (auto& v : y)
        v *= s;
    Vec g;
    phi3(y, &g);
    const double gy = dotd(g.data(), y.data(), n_);
    require(gy > 0, ErrorKind::RootBracketFailed, "degenerate level set at " + fmt_vec(x));
    out.phi = 1 / (s * s);
    for (int i = 0; i < n_; ++i)
        out.grad[static_cast<size_t>(i)] = 2 * g[static_cast<size_t>(i)] / (s * gy);
    return out;
}

Eigen::MatrixXd PotentialEvaluator::hessian(const Vec& x, double h) const
{
    const double step = h * std::max(1.0, norm(sub(x, c_)));
    Eigen::MatrixXd H(n_, n_);
    for (int j = 0; j < n_; ++j) {
        Vec xp = x, xm = x;
        xp[static_cast<size_t>(j)] += step;
        xm[static_cast<size_t>(j)] -= step;
        const Vec gp = eval(xp).grad, gm = eval(xm).grad;
        for (int i = 0; i < n_; ++i)
            H(i, j) = (gp[static_cast<size_t>(i)] - gm[static_cast<size_t>(i)]) / (2 * step);
    }
    return 0.5 * (H + H.transpose());
}

SublevelSandwich sublevel_sandwich(const PotentialEvaluator& ev, int rays, unsigned seed)
{
    require(!ev.is_quadratic(), ErrorKind::ContextMissing, "sublevel sandwich needs a tented potential");
    const int n = ev.dim();
    const double eps2 = ev.spec().eps2;
    SublevelSandwich out;
    out.inner_min = std::numeric_limits<double>::infinity();
    out.outer_max = 0;
    // q(t) = eps2 fixes the largest admissible argument of a summand
    boost::uintmax_t it = 200;
    const auto qr = boost::math::tools::toms748_solve([&](double t) { return q_cut(t) - eps2; }, 1e-3, 1.0,
                                                      boost::math::tools::eps_tolerance<double>(50), it);
    out.outer_bound = 1 - eps2 + 0.5 * (qr.first + qr.second);

    std::mt19937 rng(seed);
    std::normal_distribution<double> N01;
    for (int k = 0; k < rays; ++k) {
        Vec d(static_cast<size_t>(n));
        for (auto& v : d)
            v = N01(rng);
        const double t1 = 1 / ev.phi1()(d.data());
        auto f = [&](double t) {
            Vec y = d;
            for (auto& v : y)
                v *= t;
            return ev.phi2(y) - 1;
        };
        double lo = (1 - eps2) * t1, hi = t1;
        int guard = 0;
        while (f(hi) <= 0) {
            lo = hi;
            hi *= 1.5;
            require(++guard < 100, ErrorKind::RootBracketFailed, "phi2 stays below 1 along a ray");
        }
        double t2 = lo;
        if (f(lo) < 0) {
            it = 200;
            const auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(50), it);
            t2 = 0.5 * (r.first + r.second);
        }
        out.inner_min = std::min(out.inner_min, t2 / t1);
        out.outer_max = std::max(out.outer_max, t2 / t1);
        ++out.rays;
    }
    return out;
}

std::vector<double> minimize_on_affine(const PotentialEvaluator& ev, const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                       const Vec& x0, double tol)
{
    const int n = ev.dim();
    Eigen::VectorXd x = as_eigen(x0);
    Eigen::MatrixXd D;
    if (A.rows() == 0) {
        D = Eigen::MatrixXd::Identity(n, n);
    } else {
        x -= A.transpose() * (A * A.transpose()).ldlt().solve(A * x - b);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
        const int rank = static_cast<int>((svd.singularValues().array() > 1e-12 * svd.singularValues()(0)).count());
        D = svd.matrixV().rightCols(n - rank);
    }
    if (D.cols() == 0)
        return as_vec(x);

    PotentialValue cur = ev.eval(as_vec(x));
    for (int iter = 0; iter < 100; ++iter) {
        const Eigen::VectorXd g = D.transpose() * as_eigen(cur.grad);
        if (g.norm() <= tol * std::max(1.0, as_eigen(cur.grad).norm()))
            return as_vec(x);
        const Eigen::MatrixXd H = D.transpose() * ev.hessian(as_vec(x)) * D;
        Eigen::LLT<Eigen::MatrixXd> llt(H);
        Eigen::VectorXd step = llt.info() == Eigen::Success ? Eigen::VectorXd(-llt.solve(g)) : Eigen::VectorXd(-g);
        double a = 1;
        for (int k = 0; k < 40; ++k) {
            const Eigen::VectorXd trial = x + a * (D * step);
            const PotentialValue tv = ev.eval(as_vec(trial));
            if (tv.phi <= cur.phi + 1e-14 * std::abs(cur.phi)) {
                x = trial;
                cur = tv;
                break;
            }
            a *= 0.5;
            if (k == 39) {
                // no decrease is measurable any more
                return as_vec(x);
            }
        }
    }
    fail(ErrorKind::NewtonDiverged, "face minimisation did not converge");
}

bool AdaptedReport::adapted() const
{
    return std::all_of(faces.begin(), faces.end(), [](const FaceAdaptedness& f) { return f.ok(); });
}

double AdaptedReport::max_drift() const
{
    double d = 0;
    for (const auto& f : faces)
        d = std::max(d, f.drift);
    return d;
}

AdaptedReport check_adapted(const PotentialEvaluator& ev, int grid, unsigned seed)
{
    const RationalPolytope& P = ev.spec().P;
    const int n = P.rank;
    const FaceLattice L = face_lattice(P);
    for (const auto& F : L.faces)
        if (F.dim == 0)
            require(static_cast<int>(F.facets.size()) == n, ErrorKind::NotSimplePolytope,
                    "vertex on " + std::to_string(F.facets.size()) + " facets");

    std::vector<Vec> verts;
    double vmax = 0;
    for (const auto& v : P.vertices) {
        verts.push_back(to_double(v));
        vmax = std::max(vmax, norm(verts.back()));
    }
    std::vector<Vec> normals;
    std::vector<double> offsets;
    for (const auto& f : P.facets) {
        normals.push_back(to_double(f.normal));
        offsets.push_back(f.offset.get_d());
    }

    std::mt19937 rng(seed);
    std::exponential_distribution<double> Exp(1.0);
    AdaptedReport rep;
    for (size_t k = 0; k < L.faces.size(); ++k) {
        const Face& F = L.faces[k];
        if (F.dim < 0 || F.dim >= n)
            continue;
        FaceAdaptedness fa;
        fa.face = static_cast<int>(k);
        fa.dim = F.dim;
        const int m = static_cast<int>(F.facets.size());
        Eigen::MatrixXd A(m, n);
        Eigen::VectorXd b(m);
        for (int i = 0; i < m; ++i) {
            const size_t f = static_cast<size_t>(F.facets[static_cast<size_t>(i)]);
            for (int j = 0; j < n; ++j)
                A(i, j) = normals[f][static_cast<size_t>(j)];
            b(i) = offsets[f];
        }
        const Vec start = ev.is_quadratic() ? barycentre(P, F) : ev.spec().tent_points[k];
        fa.minimizer = F.dim == 0 ? verts[static_cast<size_t>(F.vertices[0])] : minimize_on_affine(ev, A, b, start);

        fa.margin = std::numeric_limits<double>::infinity();
        for (size_t f = 0; f < normals.size(); ++f) {
            if (std::find(F.facets.begin(), F.facets.end(), static_cast<int>(f)) != F.facets.end())
                continue;
            const double slack = (offsets[f] - dotd(normals[f].data(), fa.minimizer.data(), n)) / norm(normals[f]);
            fa.margin = std::min(fa.margin, slack);
        }
        fa.interior = fa.margin > 1e-6;

        const Vec Phi = ev.eval(fa.minimizer).grad;
        const Eigen::VectorXd a = A.transpose().colPivHouseholderQr().solve(as_eigen(Phi));
        fa.cone_coords = as_vec(a);
        const double res = (A.transpose() * a - as_eigen(Phi)).norm();
        const double scale = std::max(1.0, norm(Phi));
        fa.in_cone = res <= 1e-7 * scale && a.minCoeff() >= -1e-9 * scale;
        if (!ev.is_quadratic())
            fa.drift = norm(sub(ev.spec().tent_points[k], fa.minimizer));

        // Phi(F) in st(sigma): the face of P maximising <Phi(x), .> must lie in F
        std::vector<Vec> pts;
        for (int v : F.vertices)
            pts.push_back(verts[static_cast<size_t>(v)]);
        const size_t nv = pts.size();
        for (size_t i = 0; i < nv; ++i)
            for (size_t j = i + 1; j < nv; ++j) {
                Vec mid(static_cast<size_t>(n));
                for (int t = 0; t < n; ++t)
                    mid[static_cast<size_t>(t)] = 0.5 * (pts[i][static_cast<size_t>(t)] + pts[j][static_cast<size_t>(t)]);
                pts.push_back(mid);
            }
        pts.push_back(barycentre(P, F));
        for (int s = 0; s < grid; ++s) {
            Vec w(nv);
            double tot = 0;
            for (auto& x : w)
                tot += (x = Exp(rng));
            Vec p(static_cast<size_t>(n), 0.0);
            for (size_t i = 0; i < nv; ++i)
                for (int t = 0; t < n; ++t)
                    p[static_cast<size_t>(t)] += w[i] / tot * pts[i][static_cast<size_t>(t)];
            pts.push_back(p);
        }
        for (const auto& x : pts) {
            const Vec y = ev.eval(x).grad;
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& v : verts)
                best = std::max(best, dotd(y.data(), v.data(), n));
            const double tol = 1e-9 * std::max(1.0, norm(y) * vmax);
            for (size_t v = 0; v < verts.size(); ++v) {
                if (dotd(y.data(), verts[v].data(), n) < best - tol)
                    continue;
                if (!std::binary_search(F.vertices.begin(), F.vertices.end(), static_cast<int>(v))) {
                    if (fa.star_failures++ == 0)
                        fa.witness = "Phi" + fmt_vec(x) + " = " + fmt_vec(y) + " leaves st(sigma)";
                    break;
                }
            }
        }
        if (fa.witness.empty() && !fa.interior)
            fa.witness = "minimiser " + fmt_vec(fa.minimizer) + " has facet margin " + std::to_string(fa.margin);
        if (fa.witness.empty() && !fa.in_cone)
            fa.witness = "Phi(minimiser) = " + fmt_vec(Phi) + " outside sigma";
        rep.faces.push_back(std::move(fa));
    }
    return rep;
}

void require_adapted(const AdaptedReport& report)
{
    for (const auto& f : report.faces)
        if (!f.ok())
            fail(ErrorKind::MinimizerOnBoundary,
                 "face " + std::to_string(f.face) + " (dim " + std::to_string(f.dim) + "): " + f.witness);
}

AutoTuneResult auto_tune(TentedPotentialSpec spec, double floor)
{
    AutoTuneResult out;
    std::string last;
    while (true) {
        out.eps1 = spec.eps1;
        out.eps2 = spec.eps2;
        out.eps3 = spec.eps3;
        try {
            PotentialEvaluator ev(spec);
            out.report = check_adapted(ev);
            if (out.report.adapted())
                return out;
            last = "not adapted";
            for (const auto& f : out.report.faces)
                if (!f.ok()) {
                    last = f.witness;
                    break;
                }
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NotConvexForThisEpsilon && e.kind() != ErrorKind::RootBracketFailed)
                throw;
            last = e.what();
        }
        spec.eps1 *= 0.5;
        spec.eps2 *= 0.5;
        spec.eps3 *= 0.5;
        ++out.halvings;
        if (std::max({spec.eps1, spec.eps2, spec.eps3}) < floor)
            fail(ErrorKind::MinimizerOnBoundary, "no adapted tented potential above the floor: " + last);
    }
}

StrongConvexity strong_convexity_constant(const PotentialEvaluator& ev, double m, int pairs, unsigned seed)
{
    const int n = ev.dim();
    const Vec& c = ev.center();
    StrongConvexity out;
    std::vector<Vec> sphere;
    const int count = 600;
    if (n == 3) {
        const double golden = M_PI * (3 - std::sqrt(5.0));
        for (int i = 0; i < count; ++i) {
            const double z = 1 - (2 * i + 1.0) / count;
            const double r = std::sqrt(1 - z * z);
            sphere.push_back({r * std::cos(golden * i), r * std::sin(golden * i), z});
        }
    } else if (n == 2) {
        for (int i = 0; i < count; ++i)
            sphere.push_back({std::cos(2 * M_PI * i / count), std::sin(2 * M_PI * i / count)});
    } else {
        std::mt19937 rng(seed + 1);
        std::normal_distribution<double> N01;
        for (int i = 0; i < count; ++i) {
            Vec v(static_cast<size_t>(n));
            for (auto& x : v)
                x = N01(rng);
            const double r = norm(v);
            for (auto& x : v)
                x /= r;
            sphere.push_back(v);
        }
    }
    out.sphere_points = static_cast<int>(sphere.size());
    out.m0 = out.m1 = std::numeric_limits<double>::infinity();
    for (const auto& v : sphere) {
        Vec x = v;
        for (int i = 0; i < n; ++i)
            x[static_cast<size_t>(i)] += c[static_cast<size_t>(i)];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ev.hessian(x));
        out.m0 = std::min(out.m0, es.eigenvalues().minCoeff());
        out.m1 = std::min(out.m1, ev(x));
    }
    require(out.m0 > 0 && out.m1 > 0, ErrorKind::NonConvexDetected,
            "Hessian eigenvalue " + std::to_string(out.m0) + " on the unit sphere");
    out.m = m > 0 ? m : 0.9 * std::min(out.m0, out.m1);

    std::mt19937 rng(seed);
    std::normal_distribution<double> N01;
    std::uniform_real_distribution<double> U(0, 1);
    auto sample = [&] {
        Vec v(static_cast<size_t>(n));
        for (auto& x : v)
            x = N01(rng);
        const double r = 2 * std::pow(U(rng), 1.0 / n) / norm(v);
        for (int i = 0; i < n; ++i)
            v[static_cast<size_t>(i)] = c[static_cast<size_t>(i)] + r * v[static_cast<size_t>(i)];
        return v;
    };
    out.worst_pair = std::numeric_limits<double>::infinity();
    for (int k = 0; k < pairs; ++k) {
        const Vec x = sample(), y = sample();
        const PotentialValue px = ev.eval(x);
        const Vec d = sub(y, x);
        const double dd = dotd(d.data(), d.data(), n);
        const double gap = ev(y) - px.phi - dotd(px.grad.data(), d.data(), n) - 0.5 * out.m * dd;
        out.worst_pair = std::min(out.worst_pair, gap / std::max(1e-300, dd));
        ++out.pairs;
        if (gap < -1e-10 * std::max(1.0, px.phi))
            fail(ErrorKind::NonConvexDetected, "strong convexity with m = " + std::to_string(out.m) + " fails at x = " +
                                                   fmt_vec(x) + ", y = " + fmt_vec(y));
    }
    return out;
}

std::vector<std::vector<int>> boundary_simplices(const TropicalCellComplex& hyp)
{
    require(hyp.factors.size() == 1, ErrorKind::DimensionMismatch, "adapted bounds need a hypersurface");
    const int origin = hyp.factors[0].index_of(QVec(static_cast<size_t>(hyp.n), Q(0)));
    require(origin >= 0, ErrorKind::NotCentred, "hypersurface support does not contain the origin");
    std::vector<std::vector<int>> out;
    for (const auto& cell : hyp.cells) {
        const auto& S = cell.label.per_factor[0];
        if (S.size() < 2 || !std::binary_search(S.begin(), S.end(), origin))
            continue;
        std::vector<int> T;
        for (int a : S)
            if (a != origin)
                T.push_back(a);
        out.push_back(T);
    }
    return out;
}

AdaptedBoundReport adapted_bound_check(const PotentialEvaluator& ev, const TropicalCellComplex& hyp,
                                       const std::vector<int>& T, double m, int samples, unsigned seed)
{
    require(hyp.factors.size() == 1, ErrorKind::DimensionMismatch, "adapted bounds need a hypersurface");
    const int n = ev.dim();
    const HeightFunction& h = hyp.factors[0];
    const int origin = h.index_of(QVec(static_cast<size_t>(n), Q(0)));
    require(origin >= 0, ErrorKind::NotCentred, "hypersurface support does not contain the origin");
    std::vector<int> label = T;
    label.push_back(origin);
    std::sort(label.begin(), label.end());
    label.erase(std::unique(label.begin(), label.end()), label.end());
    const TropCell cell = tropical_cell(hyp.factors, CellLabel{{label}});

    AdaptedBoundReport out;
    out.T = T;
    out.m = m;

    const int me = static_cast<int>(cell.eq.size());
    Eigen::MatrixXd A(me, n);
    Eigen::VectorXd b(me);
    for (int i = 0; i < me; ++i) {
        for (int j = 0; j < n; ++j)
            A(i, j) = cell.eq[static_cast<size_t>(i)][static_cast<size_t>(j)].get_d();
        b(i) = cell.eq_rhs[static_cast<size_t>(i)].get_d();
    }
    Vec start(static_cast<size_t>(n), 0.0);
    out.u_T = minimize_on_affine(ev, A, b, start);
    for (size_t i = 0; i < cell.ineq.size(); ++i) {
        const Vec row = to_double(cell.ineq[i]);
        const double slack = (cell.ineq_rhs[i].get_d() - dotd(row.data(), out.u_T.data(), n)) / norm(row);
        require(slack > 1e-6, ErrorKind::MinimizerNotInterior,
                "minimiser " + fmt_vec(out.u_T) + " is not in the relative interior of C_Tbar");
    }

    std::vector<Vec> alphas;
    std::vector<double> heights;
    Eigen::MatrixXd Al(n, static_cast<Eigen::Index>(T.size()));
    for (size_t i = 0; i < T.size(); ++i) {
        alphas.push_back(to_double(h.points[static_cast<size_t>(T[i])]));
        heights.push_back(h.values[static_cast<size_t>(T[i])].get_d());
        for (int j = 0; j < n; ++j)
            Al(j, static_cast<Eigen::Index>(i)) = alphas.back()[static_cast<size_t>(j)];
    }
    const Vec grad_T = ev.eval(out.u_T).grad;
    const Eigen::VectorXd t = Al.colPivHouseholderQr().solve(as_eigen(grad_T));
    out.t = as_vec(t);
    out.residual = (Al * t - as_eigen(grad_T)).norm();
    require(out.residual <= 1e-7 * std::max(1.0, norm(grad_T)), ErrorKind::MinimizerNotInterior,
            "d phi(u_T) is not a combination of the alpha_i (residual " + std::to_string(out.residual) + ")");
    out.c = t.minCoeff();
    require(out.c > 0, ErrorKind::NegativeWeight, "weight " + std::to_string(out.c) + " in d phi(u_T)");

    // the collection {l_a' - l_a : a in Tbar, a' != a} of the tropical parameterisation
    std::vector<Vec> fe;
    std::vector<double> fc;
    for (int a : label)
        for (size_t a2 = 0; a2 < h.points.size(); ++a2) {
            if (static_cast<int>(a2) == a)
                continue;
            fe.push_back(to_double(h.points[a2] - h.points[static_cast<size_t>(a)]));
            fc.push_back(Q(h.values[static_cast<size_t>(a)] - h.values[a2]).get_d());
        }
    auto d_aff = [&](const Vec& u) {
        double d = 0;
        for (size_t i = 0; i < fe.size(); ++i)
            d = std::max(d, dotd(fe[i].data(), u.data(), n) + fc[i]);
        return d;
    };

    std::mt19937 rng(seed);
    std::normal_distribution<double> N01;
    std::uniform_real_distribution<double> U(0, 1);
    const double R = 3 * (1 + norm(out.u_T));
    out.worst_slack = std::numeric_limits<double>::infinity();
    long attempts = 0;
    while (out.samples < samples) {
        require(++attempts < 200L * samples + 1000, ErrorKind::EmptyIntersection, "admissible region too thin to sample");
        Vec u = out.u_T;
        if (out.samples > 0) {
            Vec d(static_cast<size_t>(n));
            for (auto& x : d)
                x = N01(rng);
            const double r = R * std::pow(U(rng), 1.0 / n) / norm(d);
            for (int i = 0; i < n; ++i)
                u[static_cast<size_t>(i)] += r * d[static_cast<size_t>(i)];
            bool ok = true;
            for (size_t i = 0; i < alphas.size() && ok; ++i)
                ok = dotd(alphas[i].data(), u.data(), n) - heights[i] >= 0;
            if (!ok)
                continue;
        }
        const Vec diff = sub(u, out.u_T);
        const Vec g = ev.eval(u).grad;
        const double lhs = dotd(g.data(), diff.data(), n);
        const double rhs = m * dotd(diff.data(), diff.data(), n) + out.c * d_aff(u);
        out.worst_slack = std::min(out.worst_slack, (lhs - rhs) / std::max(1.0, std::abs(lhs)));
        ++out.samples;
    }
    out.holds = out.worst_slack >= -1e-8;
    return out;
}

}  // namespace bbci
