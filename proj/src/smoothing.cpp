#include "bbci/smoothing.hpp"

#include "bbci/error.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>

namespace bbci {

namespace {

struct GaussRule {
    std::vector<double> x, w;  // on [-1, 1]
};

// Golub-Welsch
const GaussRule& gauss_rule(int order)
{
    static std::mutex mu;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(order);
    if (it != cache.end())
        return it->second;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        double b = k / std::sqrt(4.0 * k * k - 1.0);
        J(k - 1, k) = J(k, k - 1) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussRule r;
    for (int k = 0; k < order; ++k) {
        r.x.push_back(es.eigenvalues()(k));
        double v = es.eigenvectors()(0, k);
        r.w.push_back(2 * v * v);
    }
    return cache.emplace(order, std::move(r)).first->second;
}

double norm(const std::vector<double>& v)
{
    double s = 0;
    for (double x : v)
        s += x * x;
    return std::sqrt(s);
}

std::vector<double> axpy(double a, const std::vector<double>& x, const std::vector<double>& y)
{
    std::vector<double> out = y;
    for (size_t i = 0; i < out.size(); ++i)
        out[i] += a * x[i];
    return out;
}

// s-cuts of a chord of half-length R: tails, breakpoints, then panels
void chord_panels(const std::vector<double>& breaks, double R, double tail, double panel,
                  std::vector<std::pair<double, double>>& out)
{
    std::vector<double> cuts = {-tail, tail};
    for (double v : breaks) {
        if (std::abs(v) >= R)
            continue;
        double s = std::atanh(v / R);
        if (std::abs(s) < tail)
            cuts.push_back(s);
    }
    std::sort(cuts.begin(), cuts.end());
    out.clear();
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        double a = cuts[i], b = cuts[i + 1];
        if (b - a < 1e-14)
            continue;
        int np = std::max(1, static_cast<int>(std::ceil((b - a) / panel)));
        for (int p = 0; p < np; ++p)
            out.emplace_back(a + (b - a) * p / np, a + (b - a) * (p + 1) / np);
    }
}

struct Mollifier {
    const FanGeometry& g;
    int ray;
    double eps2;
    const std::vector<double>& u;
    const GaussRule& rule;
    double panel, tail;
    std::vector<double> x;
    std::vector<double> grad;
    double num = 0, den = 0;

    void level(int k, double R2, double weight)
    {
        const int n = g.dim();
        const double R = std::sqrt(R2);
        std::vector<double> bp;
        g.breakpoints(k, x.data(), bp);
        for (double& b : bp)
            b -= u[static_cast<size_t>(k)];
        std::vector<std::pair<double, double>> panels;
        chord_panels(bp, R, tail, panel, panels);
        const auto uk = u[static_cast<size_t>(k)];
        for (auto [a, b] : panels) {
            const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
            double val = 0, gk = 0, vm = 0;
            if (k == n - 1) {
                vm = R * std::tanh(mid);
                x[static_cast<size_t>(k)] = uk + vm;
                val = g.star(ray, x.data(), grad.data());
                gk = grad[static_cast<size_t>(k)];
            }
            for (size_t q = 0; q < rule.x.size(); ++q) {
                const double s = mid + half * rule.x[q];
                const double c = std::cosh(s);
                const double v = R * std::tanh(s);
                const double w = weight * half * rule.w[q] * R / (c * c);
                if (k == n - 1) {
                    const double kern = std::exp(-eps2 * c * c / R2);
                    num += w * kern * (val + gk * (v - vm));
                    den += w * kern;
                } else {
                    x[static_cast<size_t>(k)] = uk + v;
                    level(k + 1, R2 / (c * c), w);
                }
            }
        }
    }
};

double mollify_rule(const PLStarFunction& f, double eps, const std::vector<double>& u, int order, double panel,
                    double tail)
{
    const FanGeometry& g = *f.geometry;
    Mollifier m{g, f.ray, eps * eps, u, gauss_rule(order), panel, tail,
                std::vector<double>(u.size(), 0.0), std::vector<double>(u.size(), 0.0)};
    m.level(0, eps * eps, 1.0);
    return m.den > 0 ? m.num / m.den : 0.0;
}

double mollify_fast(const PLStarFunction& f, double eps, const std::vector<double>& u, const QuadratureSpec& spec)
{
    QuadratureSpec s = spec;
    s.check = false;
    return mollify(f, eps, u, s);
}

// CDF of the unit bump on [-1, 1]
double bump_cdf(double z)
{
    if (z <= -1)
        return 0;
    if (z >= 1)
        return 1;
    constexpr double tail = 2.5;
    const GaussRule& rule = gauss_rule(12);
    auto integral = [&](double upper) {
        double acc = 0;
        int np = std::max(1, static_cast<int>(std::ceil((upper + tail) / 0.5)));
        for (int p = 0; p < np; ++p) {
            double a = -tail + (upper + tail) * p / np, b = -tail + (upper + tail) * (p + 1) / np;
            for (size_t q = 0; q < rule.x.size(); ++q) {
                double s = 0.5 * (a + b) + 0.5 * (b - a) * rule.x[q];
                double c = std::cosh(s);
                acc += 0.5 * (b - a) * rule.w[q] * std::exp(-c * c) / (c * c);
            }
        }
        return acc;
    };
    static const double total = integral(tail);
    double s = std::atanh(z);
    if (s >= tail)
        return 1;
    if (s <= -tail)
        return 0;
    return integral(s) / total;
}

double defect_of(const Eigen::MatrixXd& M)
{
    return (M - Eigen::MatrixXd::Identity(M.rows(), M.cols())).cwiseAbs().maxCoeff();
}

}  // namespace

FanGeometry::FanGeometry(const Fan& fan) : fan_(fan), n_(fan.rank)
{
    require(n_ > 0, ErrorKind::EmptyInput, "fan of rank 0");
    require(fan.is_simplicial(), ErrorKind::NotSimplicial, "smoothing needs a simplicial fan");
    for (const auto& r : fan.rays)
        rays_.push_back(to_double(r));
    std::vector<std::set<std::vector<int>>> subsets(static_cast<size_t>(n_));
    for (const auto& mc : fan.maximal_cones()) {
        require(static_cast<int>(mc.size()) == n_, ErrorKind::NotSimplicial, "maximal cones must be full-dimensional");
        Eigen::MatrixXd W(n_, n_);
        for (int j = 0; j < n_; ++j)
            for (int i = 0; i < n_; ++i)
                W(i, j) = rays_[static_cast<size_t>(mc[static_cast<size_t>(j)])][static_cast<size_t>(i)];
        Cone c;
        c.rays = mc;
        c.dual = W.inverse();
        c.row_norm = c.dual.rowwise().norm();
        lipschitz_ = std::max(lipschitz_, c.row_norm.maxCoeff());
        cones_.push_back(std::move(c));
        const int m = n_;
        for (int mask = 1; mask < (1 << m); ++mask) {
            std::vector<int> sub;
            for (int j = 0; j < m; ++j)
                if (mask & (1 << j))
                    sub.push_back(mc[static_cast<size_t>(j)]);
            for (int k = static_cast<int>(sub.size()); k < n_; ++k)
                subsets[static_cast<size_t>(k)].insert(sub);
        }
    }
    basics_.resize(static_cast<size_t>(n_));
    for (int k = 1; k < n_; ++k)
        for (const auto& sub : subsets[static_cast<size_t>(k)]) {
            const int m = static_cast<int>(sub.size());
            Basic b;
            b.k = k;
            b.lhs.resize(k, m);
            b.value.resize(m);
            for (int j = 0; j < m; ++j) {
                const auto& r = rays_[static_cast<size_t>(sub[static_cast<size_t>(j)])];
                for (int i = 0; i < k; ++i)
                    b.lhs(i, j) = r[static_cast<size_t>(i)];
                b.value(j) = r[static_cast<size_t>(k)];
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(b.lhs);
            if (lu.rank() < m)
                continue;
            Eigen::MatrixXd AtA = b.lhs.transpose() * b.lhs;
            b.solve = AtA.inverse() * b.lhs.transpose();
            basics_[static_cast<size_t>(k)].push_back(std::move(b));
        }
}

int FanGeometry::locate(const double* x, double* coords) const
{
    Eigen::Map<const Eigen::VectorXd> xv(x, n_);
    int best = -1;
    double best_val = -1e300;
    Eigen::VectorXd best_c;
    for (size_t i = 0; i < cones_.size(); ++i) {
        Eigen::VectorXd c = cones_[i].dual * xv;
        double m = (c.array() / cones_[i].row_norm.array()).minCoeff();
        if (m > best_val) {
            best_val = m;
            best = static_cast<int>(i);
            best_c = c;
        }
    }
    if (best < 0 || best_val < -1e-12 * (1 + xv.norm()))
        return -1;
    if (coords)
        for (int i = 0; i < n_; ++i)
            coords[i] = best_c(i);
    return best;
}

double FanGeometry::star(int ray, const double* x, double* grad) const
{
    std::vector<double> c(static_cast<size_t>(n_));
    int k = locate(x, c.data());
    if (grad)
        std::fill(grad, grad + n_, 0.0);
    if (k < 0)
        return 0;
    const Cone& cone = cones_[static_cast<size_t>(k)];
    auto pos = std::find(cone.rays.begin(), cone.rays.end(), ray);
    if (pos == cone.rays.end())
        return 0;
    const int i = static_cast<int>(pos - cone.rays.begin());
    if (grad)
        for (int j = 0; j < n_; ++j)
            grad[j] = cone.dual(i, j);
    return std::max(0.0, c[static_cast<size_t>(i)]);
}

double FanGeometry::depth(const double* x) const
{
    int k = locate(x);
    if (k < 0)
        return 0;
    Eigen::Map<const Eigen::VectorXd> xv(x, n_);
    const Cone& cone = cones_[static_cast<size_t>(k)];
    Eigen::VectorXd c = cone.dual * xv;
    return std::max(0.0, (c.array() / cone.row_norm.array()).minCoeff());
}

bool FanGeometry::ball_misses_star(int ray, const double* x, double r) const
{
    Eigen::Map<const Eigen::VectorXd> xv(x, n_);
    for (const auto& cone : cones_) {
        if (std::find(cone.rays.begin(), cone.rays.end(), ray) == cone.rays.end())
            continue;
        Eigen::VectorXd c = cone.dual * xv;
        if ((c.array() / cone.row_norm.array()).minCoeff() >= -r)
            return false;
    }
    return true;
}

void FanGeometry::breakpoints(int k, const double* fixed, std::vector<double>& out) const
{
    out.clear();
    Eigen::Map<const Eigen::VectorXd> a(fixed, k);
    const double scale = 1 + (k > 0 ? a.norm() : 0.0);
    if (k == 0 || a.norm() <= 1e-14)
        out.push_back(0);
    for (const auto& b : basics_[static_cast<size_t>(k)]) {
        Eigen::VectorXd lam = b.solve * a;
        if (lam.minCoeff() < -1e-12 * scale)
            continue;
        if (b.lhs.cols() < k && (b.lhs * lam - a).norm() > 1e-12 * scale)
            continue;
        out.push_back(b.value.dot(lam));
    }
}

PLValue pl_star_eval(const PLStarFunction& f, const std::vector<double>& u)
{
    const FanGeometry& g = *f.geometry;
    require(static_cast<int>(u.size()) == g.dim(), ErrorKind::DimensionMismatch, "point has the wrong dimension");
    PLValue out;
    out.gradient.assign(u.size(), 0.0);
    out.cone = g.locate(u.data());
    out.value = g.star(f.ray, u.data(), out.gradient.data());
    return out;
}

QuadratureSpec fast_quadrature()
{
    QuadratureSpec s;
    s.panel = 1.25;
    s.check = false;
    return s;
}

double mollify(const PLStarFunction& f, double eps, const std::vector<double>& u, const QuadratureSpec& spec)
{
    const FanGeometry& g = *f.geometry;
    require(eps > 0, ErrorKind::DimensionMismatch, "mollifier radius must be positive");
    require(static_cast<int>(u.size()) == g.dim(), ErrorKind::DimensionMismatch, "point has the wrong dimension");
    // symmetric kernel: exact on a single linear piece
    if (g.depth(u.data()) >= eps)
        return g.star(f.ray, u.data());
    if (g.ball_misses_star(f.ray, u.data(), eps))
        return 0;
    double a = mollify_rule(f, eps, u, spec.order, spec.panel, spec.tail);
    if (!spec.check)
        return a;
    double b = mollify_rule(f, eps, u, 2 * spec.order, spec.panel, spec.tail);
    if (std::abs(a - b) > spec.rel_tol * std::max(std::abs(b), eps)) {
        std::ostringstream os;
        os << "order " << spec.order << " gives " << a << ", doubled order gives " << b;
        fail(ErrorKind::QuadratureNotConverged, os.str());
    }
    return b;
}

double homogenize(const PLStarFunction& f, double eps, const std::vector<double>& u, const QuadratureSpec& spec)
{
    const FanGeometry& g = *f.geometry;
    require(static_cast<int>(u.size()) == g.dim(), ErrorKind::DimensionMismatch, "point has the wrong dimension");
    const double nu = norm(u);
    if (nu == 0)
        return 0;
    std::vector<double> dir = u;
    for (double& x : dir)
        x /= nu;
    const double s0 = g.star(f.ray, dir.data());
    if (s0 <= 0)
        return 0;
    std::vector<double> zero(u.size(), 0.0);
    if (mollify_fast(f, eps, zero, spec) >= 1)
        fail(ErrorKind::NoBracket, "the mollified star function is at least 1 at the origin");
    std::vector<double> y(u.size());
    auto gfun = [&](double s) {
        for (size_t i = 0; i < y.size(); ++i)
            y[i] = dir[i] / s;
        return mollify_fast(f, eps, y, spec) - 1;
    };
    double lo = s0, hi = s0;
    double glo = gfun(s0), ghi = glo;
    int it = 0;
    if (glo > 0) {
        do {
            hi *= 2;
            ghi = gfun(hi);
        } while (ghi >= 0 && ++it < 60);
        if (ghi >= 0)
            fail(ErrorKind::NoBracket, "no crossing of the level set along the ray");
    } else {
        do {
            lo /= 2;
            glo = gfun(lo);
        } while (glo <= 0 && ++it < 60);
        if (glo <= 0)
            return 0;
    }
    if (glo == 0)
        return nu * lo;
    if (ghi == 0)
        return nu * hi;
    boost::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(gfun, lo, hi, glo, ghi, boost::math::tools::eps_tolerance<double>(42),
                                               iters);
    return nu * 0.5 * (r.first + r.second);
}

double smooth_max(const std::vector<double>& x, double eps)
{
    require(!x.empty(), ErrorKind::EmptyInput, "smooth max of nothing");
    if (x.size() == 1)
        return x[0];
    const double a = eps / std::sqrt(static_cast<double>(x.size()));
    const double M = *std::max_element(x.begin(), x.end());
    std::vector<double> cuts = {M - a, M + a};
    for (double xi : x)
        if (xi + a > M - a && xi + a < M + a)
            cuts.push_back(xi + a);
    std::sort(cuts.begin(), cuts.end());
    const GaussRule& rule = gauss_rule(12);
    constexpr double tail = 2.5;
    constexpr int panels = 10;
    double integral = 0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double c = 0.5 * (cuts[i] + cuts[i + 1]), hw = 0.5 * (cuts[i + 1] - cuts[i]);
        if (hw < 1e-15)
            continue;
        auto P = [&](double t) {
            double prod = 1;
            for (double xi : x)
                prod *= bump_cdf((t - xi) / a);
            return prod;
        };
        // the integrand is flat at the piece ends, so the cut-off tails are constant
        integral += hw * (1 - std::tanh(tail)) * (P(cuts[i]) + P(cuts[i + 1]));
        for (int p = 0; p < panels; ++p) {
            double sa = -tail + 2 * tail * p / panels, sb = -tail + 2 * tail * (p + 1) / panels;
            for (size_t q = 0; q < rule.x.size(); ++q) {
                double s = 0.5 * (sa + sb) + 0.5 * (sb - sa) * rule.x[q];
                double ch = std::cosh(s);
                integral += 0.5 * (sb - sa) * rule.w[q] * hw / (ch * ch) * P(c + hw * std::tanh(s));
            }
        }
    }
    return M + a - integral;
}

double ramp(double x, double eps)
{
    if (x <= eps)
        return 0;
    if (x >= 2 * eps)
        return x - eps;
    const double y = (x - eps) / eps;
    return eps * y * y * y * (y * y * y - 5 * y + 5);
}

SmoothedDefining smoothed_defining(const TriangulationFan& fan, std::shared_ptr<const FanGeometry> geometry, double eps,
                                   const std::vector<double>& u, double tol, const QuadratureSpec& spec)
{
    const FanGeometry& g = *geometry;
    const int n = g.dim();
    const int N = g.num_rays();
    require(static_cast<int>(fan.summand_of_ray.size()) == N, ErrorKind::DimensionMismatch,
            "geometry and fan have different rays");
    require(static_cast<int>(u.size()) == n, ErrorKind::DimensionMismatch, "point has the wrong dimension");
    const int r = fan.r;
    auto evaluate = [&](const std::vector<double>& x, std::vector<double>* rays) {
        std::vector<double> vals(static_cast<size_t>(N));
        for (int k = 0; k < N; ++k)
            vals[static_cast<size_t>(k)] = homogenize({geometry, k}, eps, x, spec);
        std::vector<double> blocks;
        for (int j = 0; j < r; ++j) {
            std::vector<double> sub;
            for (int k = 0; k < N; ++k)
                if (fan.summand_of_ray[static_cast<size_t>(k)] == j)
                    sub.push_back(vals[static_cast<size_t>(k)]);
            blocks.push_back(smooth_max(sub, eps));
        }
        if (rays)
            *rays = vals;
        return blocks;
    };
    SmoothedDefining out;
    out.per_block = evaluate(u, &out.ray_values);
    out.total = smooth_max(out.ray_values, eps);
    out.on_boundary = std::abs(out.total - 1) <= tol;
    out.on_transversal = std::all_of(out.per_block.begin(), out.per_block.end(),
                                     [&](double v) { return std::abs(v - 1) <= tol; });
    constexpr double h = 1e-5;
    out.jacobian.resize(r, n);
    for (int k = 0; k < n; ++k) {
        auto up = u, dn = u;
        up[static_cast<size_t>(k)] += h;
        dn[static_cast<size_t>(k)] -= h;
        auto fp = evaluate(up, nullptr), fm = evaluate(dn, nullptr);
        for (int j = 0; j < r; ++j)
            out.jacobian(j, k) = (fp[static_cast<size_t>(j)] - fm[static_cast<size_t>(j)]) / (2 * h);
    }
    Eigen::MatrixXd parts = Eigen::MatrixXd::Zero(n, r);
    for (int k = 0; k < N; ++k) {
        double c = g.star(k, u.data());
        for (int i = 0; i < n; ++i)
            parts(i, fan.summand_of_ray[static_cast<size_t>(k)]) += c * g.ray(k)[static_cast<size_t>(i)];
    }
    out.block = out.jacobian * parts;
    out.block_defect = defect_of(out.block);
    return out;
}

std::vector<double> coherent_projection(std::shared_ptr<const FanGeometry> geometry, const std::vector<int>& cone_rays,
                                        double eps, const std::vector<double>& u, ProjectionMode mode,
                                        const QuadratureSpec& spec)
{
    const FanGeometry& g = *geometry;
    const int n = g.dim();
    const int m = static_cast<int>(cone_rays.size());
    require(static_cast<int>(u.size()) == n, ErrorKind::DimensionMismatch, "point has the wrong dimension");
    require(m > 0, ErrorKind::EmptyInput, "projection onto the zero cone");
    auto f = [&](int ray, const std::vector<double>& x) {
        return mode == ProjectionMode::Homogeneous ? homogenize({geometry, ray}, eps, x, spec)
                                                   : mollify_fast({geometry, ray}, eps, x, spec);
    };
    Eigen::VectorXd target(m), lam(m);
    for (int i = 0; i < m; ++i) {
        int ray = cone_rays[static_cast<size_t>(i)];
        if (mode == ProjectionMode::Homogeneous)
            require(g.star(ray, u.data()) > 0, ErrorKind::OutsideStar, "point is outside the star of the cone");
        target(i) = f(ray, u);
        require(target(i) > 0, ErrorKind::OutsideStar, "smoothed star function vanishes at the point");
    }
    auto point = [&](const Eigen::VectorXd& l) {
        std::vector<double> p(static_cast<size_t>(n), 0.0);
        for (int i = 0; i < m; ++i)
            p = axpy(l(i), g.ray(cone_rays[static_cast<size_t>(i)]), p);
        return p;
    };
    auto residual = [&](const Eigen::VectorXd& l) {
        auto p = point(l);
        Eigen::VectorXd F(m);
        for (int i = 0; i < m; ++i)
            F(i) = f(cone_rays[static_cast<size_t>(i)], p) - target(i);
        return F;
    };
    lam = target;
    const double scale = std::max(1.0, target.cwiseAbs().maxCoeff());
    Eigen::VectorXd F = residual(lam);
    for (int it = 0; it < 50; ++it) {
        if (F.cwiseAbs().maxCoeff() <= 1e-10 * scale)
            return point(lam);
        Eigen::MatrixXd J(m, m);
        const double h = 1e-6 * std::max(1.0, lam.cwiseAbs().maxCoeff());
        for (int j = 0; j < m; ++j) {
            Eigen::VectorXd lp = lam, lm = lam;
            lp(j) += h;
            lm(j) -= h;
            J.col(j) = (residual(lp) - residual(lm)) / (2 * h);
        }
        Eigen::VectorXd step = J.partialPivLu().solve(F);
        double alpha = 1;
        Eigen::VectorXd next = lam - step;
        Eigen::VectorXd Fn;
        for (int k = 0; k < 30; ++k) {
            next = lam - alpha * step;
            if (next.minCoeff() > 0) {
                Fn = residual(next);
                if (Fn.norm() < F.norm() || alpha < 1e-3)
                    break;
            }
            alpha /= 2;
        }
        if (Fn.size() == 0)
            break;
        lam = next;
        F = Fn;
    }
    fail(ErrorKind::NewtonDiverged, "coherent projection did not converge");
}

std::vector<double> ScalingField::vector_field(int ray, const std::vector<double>& x) const
{
    double speed;
    if (!smoothed)
        speed = geometry->star(ray, x.data());
    else {
        double h = delta_prime > 0 ? mollify_fast({geometry, ray}, delta_prime, x, quad) : geometry->star(ray, x.data());
        speed = ramp(h, eps_prime);
    }
    std::vector<double> v = geometry->ray(ray);
    for (double& c : v)
        c *= speed;
    return v;
}

std::vector<double> ray_flow(const ScalingField& field, int ray, const std::vector<double>& u, double t)
{
    const FanGeometry& g = *field.geometry;
    require(static_cast<int>(u.size()) == g.dim(), ErrorKind::DimensionMismatch, "point has the wrong dimension");
    if (t == 0)
        return u;
    const auto& v = g.ray(ray);
    // the flow moves along v, so it reduces to s' = speed(u + s v)
    auto speed = [&](double s) {
        auto x = axpy(s, v, u);
        if (!field.smoothed)
            return g.star(ray, x.data());
        double h = field.delta_prime > 0 ? mollify_fast({field.geometry, ray}, field.delta_prime, x, field.quad)
                                         : g.star(ray, x.data());
        return ramp(h, field.eps_prime);
    };
    auto integrate = [&](long steps) {
        const double dt = t / static_cast<double>(steps);
        double s = 0;
        for (long i = 0; i < steps; ++i) {
            double k1 = speed(s);
            double k2 = speed(s + 0.5 * dt * k1);
            double k3 = speed(s + 0.5 * dt * k2);
            double k4 = speed(s + dt * k3);
            s += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        return s;
    };
    const double hmax = 1e-2 * (1 + norm(u));
    long steps = std::max(1L, static_cast<long>(std::ceil(std::abs(t) / hmax)));
    double coarse = integrate(steps);
    while (true) {
        double fine = integrate(2 * steps);
        if (std::abs(fine - coarse) <= 1e-8 * std::max(1.0, std::abs(fine)))
            return axpy(fine, v, u);
        steps *= 2;
        coarse = fine;
        if (steps > (1L << 16))
            fail(ErrorKind::StepLimitExceeded, "flow did not reach the step tolerance");
    }
}

std::vector<double> scaling_flow(const ScalingField& field, const std::vector<double>& u, const std::vector<double>& t)
{
    const int N = field.geometry->num_rays();
    std::vector<double> times(static_cast<size_t>(N), 0.0);
    if (field.mode == ScalingMode::Total) {
        require(static_cast<int>(t.size()) == N, ErrorKind::DimensionMismatch, "one time per ray");
        times = t;
    } else {
        require(static_cast<int>(field.block_of_ray.size()) == N, ErrorKind::DimensionMismatch, "one block per ray");
        for (int k = 0; k < N; ++k) {
            int j = field.block_of_ray[static_cast<size_t>(k)];
            require(j >= 0 && j < static_cast<int>(t.size()), ErrorKind::DimensionMismatch, "one time per block");
            times[static_cast<size_t>(k)] = t[static_cast<size_t>(j)];
        }
    }
    std::vector<double> x = u;
    for (int k = 0; k < N; ++k)
        x = ray_flow(field, k, x, times[static_cast<size_t>(k)]);
    return x;
}

std::vector<double> pl_scaling_action(const FanGeometry& geometry, const std::vector<double>& u,
                                      const std::vector<double>& t)
{
    require(static_cast<int>(t.size()) == geometry.num_rays(), ErrorKind::DimensionMismatch, "one time per ray");
    std::vector<double> x = u;
    for (int k = 0; k < geometry.num_rays(); ++k) {
        double h = geometry.star(k, x.data());
        x = axpy(h * std::expm1(t[static_cast<size_t>(k)]), geometry.ray(k), x);
    }
    return x;
}

namespace {

std::string point_str(const std::vector<double>& x)
{
    std::ostringstream os;
    os.precision(6);
    os << "(";
    for (size_t i = 0; i < x.size(); ++i)
        os << (i ? ", " : "") << x[i];
    os << ")";
    return os.str();
}

// unit normal of a codimension-one cone
std::vector<double> wall_normal(const FanGeometry& g, const std::vector<int>& rays)
{
    Eigen::MatrixXd A(static_cast<int>(rays.size()), g.dim());
    for (size_t i = 0; i < rays.size(); ++i)
        for (int j = 0; j < g.dim(); ++j)
            A(static_cast<int>(i), j) = g.ray(rays[i])[static_cast<size_t>(j)];
    Eigen::VectorXd k = Eigen::FullPivLU<Eigen::MatrixXd>(A).kernel().col(0);
    k.normalize();
    return std::vector<double>(k.data(), k.data() + k.size());
}

void radial_check(const std::shared_ptr<const FanGeometry>& geometry, const DiagnosticConfig& cfg,
                  SmoothingReport& rep)
{
    const FanGeometry& g = *geometry;
    const Fan& fan = g.fan();
    const int n = g.dim();
    auto maximal = fan.maximal_cones();
    rep.radial_ok = true;
    for (double eps : rep.eps_grid) {
        double worst = 0;
        std::mt19937 rng(cfg.seed);
        std::uniform_real_distribution<double> unit(0.2, 1.0);
        for (int ray = 0; ray < g.num_rays() && rep.radial_ok; ++ray) {
            PLStarFunction f{geometry, ray};
            for (const auto& wall : fan.cones) {
                if (static_cast<int>(wall.size()) != n - 1 || !std::binary_search(wall.begin(), wall.end(), ray))
                    continue;
                int sides = 0;
                for (const auto& mc : maximal)
                    if (std::includes(mc.begin(), mc.end(), wall.begin(), wall.end()))
                        ++sides;
                if (sides != 2)
                    continue;
                auto nu = wall_normal(g, wall);
                for (int wp = 0; wp < cfg.wall_points; ++wp) {
                    std::vector<double> p(static_cast<size_t>(n), 0.0);
                    for (int k : wall)
                        p = axpy(unit(rng), g.ray(k), p);
                    double hp = g.star(ray, p.data());
                    for (double& c : p)
                        c /= hp;
                    for (int o = 0; o < cfg.radial_offsets; ++o) {
                        double kappa = cfg.radial_offsets == 1 ? 0.0 : -1.0 + 2.0 * o / (cfg.radial_offsets - 1);
                        auto theta = axpy(kappa * eps, nu, p);
                        try {
                            double r = homogenize(f, eps, theta, cfg.radial_quad);
                            if (r <= 0) {
                                rep.radial_ok = false;
                                rep.witnesses.push_back("level set misses the ray through " + point_str(theta));
                                break;
                            }
                            std::vector<double> uu = theta, up(theta.size()), dn(theta.size());
                            for (double& c : uu)
                                c /= r;
                            constexpr double h = 1e-5;
                            for (size_t i = 0; i < uu.size(); ++i) {
                                up[i] = uu[i] * (1 + h);
                                dn[i] = uu[i] * (1 - h);
                            }
                            double D = (mollify(f, eps, up, cfg.radial_quad) - mollify(f, eps, dn, cfg.radial_quad)) /
                                       (2 * h);
                            double defect = std::abs(D - 1);
                            worst = std::max(worst, defect);
                            if (defect >= 0.5) {
                                rep.radial_ok = false;
                                std::ostringstream os;
                                os << "radial derivative " << D << " at " << point_str(uu) << " for eps " << eps;
                                rep.witnesses.push_back(os.str());
                            }
                        } catch (const Error& e) {
                            rep.radial_ok = false;
                            rep.witnesses.push_back(std::string(e.what()) + " at " + point_str(theta));
                            break;
                        }
                    }
                }
            }
        }
        rep.max_defect = std::max(rep.max_defect, worst);
        rep.fitted_C.push_back(worst / eps);
    }
    if (!rep.radial_ok)
        return;
    auto [lo, hi] = std::minmax_element(rep.fitted_C.begin(), rep.fitted_C.end());
    // defects below the finite-difference noise count as a linear star function
    if (rep.max_defect > 1e-5 && *hi > 2 * *lo) {
        rep.radial_ok = false;
        std::ostringstream os;
        os << "fitted C ranges over [" << *lo << ", " << *hi << "]";
        rep.witnesses.push_back(os.str());
    }
}

}  // namespace

SmoothingReport smoothing_diagnostics(std::shared_ptr<const FanGeometry> geometry, const DiagnosticConfig& cfg)
{
    const FanGeometry& g = *geometry;
    const int n = g.dim();
    SmoothingReport rep;
    rep.eps_grid = cfg.eps_grid.empty() ? std::vector<double>{2 * cfg.eps, cfg.eps, cfg.eps / 2} : cfg.eps_grid;
    radial_check(geometry, cfg, rep);

    ScalingField field;
    field.geometry = geometry;
    field.smoothed = true;
    field.eps_prime = cfg.eps;
    field.delta_prime = cfg.eps / (2 * g.lipschitz());
    field.quad = cfg.quad;
    std::mt19937 rng(cfg.seed + 1);
    std::uniform_real_distribution<double> box(-cfg.box, cfg.box), unit(-1, 1);
    std::uniform_int_distribution<int> pick(0, g.num_rays() - 1);
    auto random_point = [&] {
        std::vector<double> x(static_cast<size_t>(n));
        for (double& c : x)
            c = box(rng);
        return x;
    };

    rep.commutator_ok = true;
    for (int i = 0; i < cfg.commutator_samples; ++i) {
        auto u = random_point();
        int a = pick(rng), b = pick(rng);
        while (b == a)
            b = pick(rng);
        double t = unit(rng), s = unit(rng);
        try {
            auto x = ray_flow(field, a, ray_flow(field, b, u, s), t);
            auto y = ray_flow(field, b, ray_flow(field, a, u, t), s);
            double d = 0;
            for (int k = 0; k < n; ++k)
                d = std::max(d, std::abs(x[static_cast<size_t>(k)] - y[static_cast<size_t>(k)]));
            rep.max_commutator = std::max(rep.max_commutator, d);
            if (d > 1e-6 && rep.commutator_ok) {
                rep.commutator_ok = false;
                std::ostringstream os;
                os << "flows of rays " << a << ", " << b << " differ by " << d << " at " << point_str(u);
                rep.witnesses.push_back(os.str());
            }
        } catch (const Error& e) {
            rep.commutator_ok = false;
            rep.witnesses.push_back(std::string(e.what()) + " at " + point_str(u));
        }
    }

    // landing on a level set of the mollified star functions from two points of one orbit
    rep.slice_ok = true;
    auto hdelta = [&](int ray, const std::vector<double>& x) {
        return mollify({geometry, ray}, field.delta_prime, x, cfg.quad);
    };
    auto land = [&](const std::vector<int>& sigma, const std::vector<double>& base, const Eigen::VectorXd& c,
                    std::vector<double>& out) {
        const int m = static_cast<int>(sigma.size());
        auto point = [&](const Eigen::VectorXd& s) {
            auto p = base;
            for (int i = 0; i < m; ++i)
                p = axpy(s(i), g.ray(sigma[static_cast<size_t>(i)]), p);
            return p;
        };
        auto resid = [&](const Eigen::VectorXd& s) {
            auto p = point(s);
            Eigen::VectorXd F(m);
            for (int i = 0; i < m; ++i)
                F(i) = hdelta(sigma[static_cast<size_t>(i)], p) - c(i);
            return F;
        };
        Eigen::VectorXd s = Eigen::VectorXd::Zero(m);
        Eigen::VectorXd F = resid(s);
        for (int it = 0; it < 60; ++it) {
            if (F.cwiseAbs().maxCoeff() <= 1e-11 * std::max(1.0, c.cwiseAbs().maxCoeff())) {
                out = point(s);
                return true;
            }
            Eigen::MatrixXd J(m, m);
            for (int j = 0; j < m; ++j) {
                Eigen::VectorXd sp = s, sm = s;
                sp(j) += 1e-6;
                sm(j) -= 1e-6;
                J.col(j) = (resid(sp) - resid(sm)) / 2e-6;
            }
            Eigen::VectorXd step = J.partialPivLu().solve(F);
            double alpha = 1;
            Eigen::VectorXd next, Fn;
            for (int k = 0; k < 30; ++k) {
                next = s - alpha * step;
                Fn = resid(next);
                if (Fn.norm() < F.norm())
                    break;
                alpha /= 2;
            }
            s = next;
            F = Fn;
        }
        return false;
    };
    for (const auto& sigma : g.fan().cones) {
        if (sigma.empty() || !rep.slice_ok)
            continue;
        const int m = static_cast<int>(sigma.size());
        for (int k = 0; k < cfg.slice_samples && rep.slice_ok; ++k) {
            std::vector<double> u;
            Eigen::VectorXd hu(m);
            bool found = false;
            for (int tries = 0; tries < 400 && !found; ++tries) {
                u = random_point();
                found = true;
                for (int i = 0; i < m && found; ++i) {
                    hu(i) = hdelta(sigma[static_cast<size_t>(i)], u);
                    found = hu(i) > 3 * cfg.eps;
                }
            }
            if (!found)
                continue;
            Eigen::VectorXd c(m);
            std::vector<double> times(static_cast<size_t>(g.num_rays()), 0.0);
            for (int i = 0; i < m; ++i) {
                c(i) = hu(i) * std::exp(0.5 * unit(rng));
                times[static_cast<size_t>(sigma[static_cast<size_t>(i)])] = 0.5 * unit(rng);
            }
            try {
                auto u2 = scaling_flow(field, u, times);
                std::vector<double> x, y;
                bool ok = land(sigma, u, c, x) && land(sigma, u2, c, y);
                double gap = 0;
                if (ok)
                    for (int i = 0; i < n; ++i)
                        gap = std::max(gap, std::abs(x[static_cast<size_t>(i)] - y[static_cast<size_t>(i)]));
                rep.max_slice_gap = std::max(rep.max_slice_gap, gap);
                if (!ok || gap > 1e-6) {
                    rep.slice_ok = false;
                    std::ostringstream os;
                    os << (ok ? "two landing points differ by " + std::to_string(gap) : std::string("no landing point"))
                       << " from " << point_str(u);
                    rep.witnesses.push_back(os.str());
                }
            } catch (const Error& e) {
                rep.slice_ok = false;
                rep.witnesses.push_back(std::string(e.what()) + " at " + point_str(u));
            }
        }
    }
    return rep;
}

void require_pass(const SmoothingReport& report)
{
    if (!report.pass())
        fail(ErrorKind::DiagnosticFailed, report.witnesses.empty() ? "diagnostic failed" : report.witnesses.front());
}

}  // namespace bbci
