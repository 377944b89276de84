#include "bbci/tailoring.hpp"
#include "bbci/error.hpp"

#include <boost/math/interpolators/quintic_hermite.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>

namespace bbci {

namespace {

using Vec = std::vector<double>;
using boost::math::quadrature::gauss_kronrod;
using Spline = boost::math::interpolators::cardinal_quintic_hermite<std::vector<double>>;

double smooth_e(double x) { return x > 0 ? std::exp(-1 / x) : 0.0; }

double smooth_step(double x)
{
    double a = smooth_e(x), b = smooth_e(1 - x);
    return a / (a + b);
}

double bump(double z) { return std::abs(z) < 1 ? std::exp(-1 / (1 - z * z)) : 0.0; }

double dotd(const double* a, const double* b, int n)
{
    double s = 0;
    for (int i = 0; i < n; ++i)
        s += a[i] * b[i];
    return s;
}

Eigen::VectorXd as_eigen(const Vec& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())); }

double integrate(const std::function<double(double)>& f, double lo, double hi)
{
    if (hi <= lo)
        return 0;
    return gauss_kronrod<double, 31>::integrate(f, lo, hi, 10, 1e-13);
}

// Integral over [-2, 0] split at the kinks of the support.
double integrate_pieces(const std::function<double(double)>& f, std::vector<double> cuts)
{
    cuts.push_back(-2);
    cuts.push_back(0);
    for (auto& c : cuts)
        c = std::clamp(c, -2.0, 0.0);
    std::sort(cuts.begin(), cuts.end());
    double s = 0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i)
        s += integrate(f, cuts[i], cuts[i + 1]);
    return s;
}

}  // namespace

struct ProfileSpline {
    Spline s;
};

double CutoffProfile::weight(double t) const
{
    double w = smooth_step((t + smooth_width) / smooth_width);
    if (bump_width > 0)
        w += bump_amplitude * bump((t - bump_center) / bump_width);
    return w;
}

double CutoffProfile::g_value(double x, double* d1, double* d2) const
{
    if (x >= 0) {
        double e = std::exp(x);
        if (d1)
            *d1 = e;
        if (d2)
            *d2 = e;
        return e;
    }
    if (x <= -2) {
        if (d1)
            *d1 = 0;
        if (d2)
            *d2 = 0;
        return 0;
    }
    const Spline& s = spline->s;
    if (d1)
        *d1 = s.prime(x);
    // the spline's own second derivative is unreliable between nodes; g'' is known in closed form
    if (d2)
        *d2 = std::exp(x) * weight(x);
    return s(x);
}

double CutoffProfile::chi(double x, double* d1, double* d2) const
{
    if (x >= 0 || x <= -2) {
        if (d1)
            *d1 = 0;
        if (d2)
            *d2 = 0;
        return x >= 0 ? 1.0 : 0.0;
    }
    double g1, g2;
    double g0 = g_value(x, &g1, &g2);
    double e = std::exp(-x);
    if (d1)
        *d1 = (g1 - g0) * e;
    if (d2)
        *d2 = (g2 - 2 * g1 + g0) * e;
    return g0 * e;
}

CutoffProfile build_profile(int intervals)
{
    require(intervals >= 10, ErrorKind::MomentSolveFailed, "too few spline intervals");
    CutoffProfile p;
    // Moments are linear in the amplitude: solve it for the first, then the width for the second.
    auto step_only = [&](double t) { return std::exp(t) * smooth_step((t + p.smooth_width) / p.smooth_width); };
    const double S0 = integrate_pieces(step_only, {-p.smooth_width});
    const double S1 = integrate_pieces([&](double t) { return -t * step_only(t); }, {-p.smooth_width});
    auto moments_of_bump = [&](double b, double& B0, double& B1) {
        auto f = [&](double t) { return std::exp(t) * bump((t - p.bump_center) / b); };
        B0 = integrate_pieces(f, {p.bump_center - b, p.bump_center + b});
        B1 = integrate_pieces([&](double t) { return -t * f(t); }, {p.bump_center - b, p.bump_center + b});
    };
    auto residual = [&](double b) {
        double B0, B1;
        moments_of_bump(b, B0, B1);
        return S1 + (1 - S0) / B0 * B1 - 1;
    };
    const double lo = 0.05, hi = std::min(-p.bump_center, 2 + p.bump_center) - 1e-3;
    double rlo = residual(lo), rhi = residual(hi);
    require(rlo * rhi < 0, ErrorKind::MomentSolveFailed, "no bump width matches the second moment");
    boost::uintmax_t iters = 200;
    auto root = boost::math::tools::toms748_solve(residual, lo, hi, rlo, rhi,
                                                  boost::math::tools::eps_tolerance<double>(52), iters);
    require(iters < 200, ErrorKind::MomentSolveFailed, "width solve did not converge");
    p.bump_width = 0.5 * (root.first + root.second);
    double B0, B1;
    moments_of_bump(p.bump_width, B0, B1);
    p.bump_amplitude = (1 - S0) / B0;
    require(p.bump_amplitude > 0, ErrorKind::MomentSolveFailed, "negative bump amplitude");

    const double h = 2.0 / intervals;
    auto gpp = [&](double t) { return std::exp(t) * p.weight(t); };
    p.nodes.resize(static_cast<size_t>(intervals) + 1);
    p.g.assign(p.nodes.size(), 0.0);
    p.dg.assign(p.nodes.size(), 0.0);
    for (int k = 0; k <= intervals; ++k)
        p.nodes[static_cast<size_t>(k)] = -2 + k * h;
    for (size_t k = 1; k < p.nodes.size(); ++k) {
        double a = p.nodes[k - 1], b = p.nodes[k];
        // fixed-order Gauss-Legendre on each short interval
        p.dg[k] = p.dg[k - 1] + boost::math::quadrature::gauss<double, 20>::integrate(gpp, a, b);
        p.g[k] = p.g[k - 1] + h * p.dg[k - 1] +
                 boost::math::quadrature::gauss<double, 20>::integrate([&](double s) { return (b - s) * gpp(s); }, a, b);
    }
    std::vector<double> y = p.g, dy = p.dg, d2y(p.nodes.size());
    for (size_t k = 0; k < p.nodes.size(); ++k)
        d2y[k] = gpp(p.nodes[k]);
    p.spline = std::make_shared<ProfileSpline>(ProfileSpline{Spline(std::move(y), std::move(dy), std::move(d2y), -2.0, h)});
    require(std::abs(p.g.back() - 1) <= 1e-10 && std::abs(p.dg.back() - 1) <= 1e-10, ErrorKind::MomentSolveFailed,
            "g(0) = " + std::to_string(p.g.back()) + ", g'(0) = " + std::to_string(p.dg.back()));

    // certificates on a 10^4-point grid over [-3, 1]
    const int N = 10000;
    const double step = 4.0 / (N - 1);
    double prev2 = 0, prev1 = 0;
    for (int i = 0; i < N; ++i) {
        double x = -3 + i * step;
        double c = p.chi(x);
        require(c >= -1e-12 && c <= 1 + 1e-10, ErrorKind::ConvexityViolated,
                "chi(" + std::to_string(x) + ") = " + std::to_string(c));
        double gx = p.g_value(x);
        if (i >= 2)
            require(gx - 2 * prev1 + prev2 >= -1e-9, ErrorKind::ConvexityViolated,
                    "second difference of chi e^x negative at " + std::to_string(x));
        prev2 = prev1;
        prev1 = gx;
    }
    require(std::abs(p.chi(0) - 1) <= 1e-10 && p.chi(-2) == 0, ErrorKind::ConvexityViolated, "plateau values off");
    return p;
}

const CutoffProfile& default_profile()
{
    static const CutoffProfile p = build_profile();
    return p;
}

// ---------------------------------------------------------------------------------------------------------------
// families

double CutoffFamily::l(int a, const double* u) const
{
    const auto& p = points[static_cast<size_t>(a)];
    return dotd(p.data(), u, static_cast<int>(p.size())) - heights[static_cast<size_t>(a)];
}

double CutoffFamily::legendre(const double* u) const
{
    double m = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < size(); ++a)
        m = std::max(m, l(a, u));
    return m;
}

double CutoffFamily::max_K() const
{
    double m = 0;
    for (const auto& row : K)
        for (double k : row)
            m = std::max(m, k);
    return m;
}

CutoffFamily cutoff_family(const HeightFunction& h, double beta, double K, bool centred, const CutoffProfile& profile)
{
    require(beta > 0, ErrorKind::DimensionMismatch, "beta must be positive");
    CutoffFamily fam;
    fam.profile = &profile;
    fam.h = h;
    fam.beta = beta;
    for (size_t i = 0; i < h.points.size(); ++i) {
        fam.points.push_back(to_double(h.points[i]));
        fam.heights.push_back(h.values[i].get_d());
    }
    const size_t m = h.points.size();
    std::vector<std::set<int>> adj(m);
    std::vector<bool> used(m, false);
    if (m == 1) {
        used[0] = true;
    } else {
        RegularSubdivision sub = regular_subdivision(h);
        require(sub.is_triangulation, ErrorKind::NotTriangulation, "height does not induce a triangulation");
        for (const auto& cell : sub.cells)
            for (int a : cell.label) {
                used[static_cast<size_t>(a)] = true;
                for (int b : cell.label)
                    if (a != b)
                        adj[static_cast<size_t>(a)].insert(b);
            }
    }
    for (size_t a = 0; a < m; ++a)
        require(used[a], ErrorKind::NotTriangulation, "point " + to_string(h.points[a]) + " is not a vertex");
    const int origin = h.index_of(zeros(static_cast<int>(h.points[0].size())));
    fam.nbhd.resize(m);
    fam.K.resize(m);
    for (size_t a = 0; a < m; ++a)
        for (int b : adj[a]) {
            fam.nbhd[a].push_back(b);
            fam.K[a].push_back(centred && b == origin ? 0.0 : K);
        }
    return fam;
}

double chi_pair(const CutoffFamily& fam, int a, int a2, const std::vector<double>& u)
{
    const auto& nb = fam.nbhd[static_cast<size_t>(a)];
    auto it = std::find(nb.begin(), nb.end(), a2);
    require(it != nb.end(), ErrorKind::OutsideNeighbourhood, "points are not adjacent in the triangulation");
    double K = fam.K[static_cast<size_t>(a)][static_cast<size_t>(it - nb.begin())];
    double arg = fam.beta * (fam.l(a, u.data()) - fam.l(a2, u.data())) + std::sqrt(fam.beta) + K;
    return fam.profile->chi(arg);
}

double chi_vertex(const CutoffFamily& fam, int a, const double* u, Eigen::VectorXd* grad, Eigen::MatrixXd* hess)
{
    const auto& nb = fam.nbhd[static_cast<size_t>(a)];
    const size_t m = nb.size();
    const int n = static_cast<int>(fam.points[0].size());
    const double la = fam.l(a, u), sb = std::sqrt(fam.beta);
    std::vector<double> v(m), p(m), s(m);
    double prod = 1;
    for (size_t k = 0; k < m; ++k) {
        double arg = fam.beta * (la - fam.l(nb[k], u)) + sb + fam.K[static_cast<size_t>(a)][k];
        v[k] = fam.profile->chi(arg, &p[k], &s[k]);
        prod *= v[k];
    }
    if (grad)
        *grad = Eigen::VectorXd::Zero(n);
    if (hess)
        *hess = Eigen::MatrixXd::Zero(n, n);
    if (!grad && !hess)
        return prod;
    std::vector<Eigen::VectorXd> d(m);
    const auto& pa = fam.points[static_cast<size_t>(a)];
    for (size_t k = 0; k < m; ++k) {
        d[k].resize(n);
        const auto& pb = fam.points[static_cast<size_t>(nb[k])];
        for (int i = 0; i < n; ++i)
            d[k](i) = fam.beta * (pa[static_cast<size_t>(i)] - pb[static_cast<size_t>(i)]);
    }
    auto others = [&](size_t i, size_t j) {
        double r = 1;
        for (size_t k = 0; k < m; ++k)
            if (k != i && k != j)
                r *= v[k];
        return r;
    };
    for (size_t i = 0; i < m; ++i) {
        if (p[i] == 0 && s[i] == 0)
            continue;
        double oi = others(i, m);
        if (grad)
            *grad += p[i] * oi * d[i];
        if (hess) {
            *hess += s[i] * oi * d[i] * d[i].transpose();
            for (size_t j = 0; j < m; ++j)
                if (j != i && p[j] != 0)
                    *hess += p[i] * p[j] * others(i, j) * d[i] * d[j].transpose();
        }
    }
    return prod;
}

CompatibilityCertificate certify_family(const CutoffFamily& fam, int samples, unsigned seed)
{
    CompatibilityCertificate cert;
    cert.C_prime = 2 + fam.max_K();
    const int n = static_cast<int>(fam.points[0].size());
    double R = 1;
    for (double h : fam.heights)
        R = std::max(R, 1 + 2 * std::abs(h));
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(-R, R), U01(0, 1);
    const double sb = 1 / std::sqrt(fam.beta);
    Vec u(static_cast<size_t>(n));
    for (int s = 0; s < samples; ++s) {
        for (auto& x : u)
            x = U(rng);
        if (s % 2 == 1) {
            int a = static_cast<int>(rng() % static_cast<unsigned>(fam.size()));
            const auto& nb = fam.nbhd[static_cast<size_t>(a)];
            if (!nb.empty()) {
                size_t k = rng() % nb.size();
                int b = nb[k];
                Vec d(static_cast<size_t>(n));
                for (int i = 0; i < n; ++i)
                    d[static_cast<size_t>(i)] = fam.points[static_cast<size_t>(a)][static_cast<size_t>(i)] -
                                                fam.points[static_cast<size_t>(b)][static_cast<size_t>(i)];
                double dd = dotd(d.data(), d.data(), n);
                double tau = U01(rng) * (sb + (3 + fam.K[static_cast<size_t>(a)][k]) / fam.beta);
                double shift = (-tau - (fam.l(a, u.data()) - fam.l(b, u.data()))) / dd;
                for (int i = 0; i < n; ++i)
                    u[static_cast<size_t>(i)] += shift * d[static_cast<size_t>(i)];
            }
        }
        ++cert.samples;
        const double L = fam.legendre(u.data());
        for (int a = 0; a < fam.size(); ++a) {
            Eigen::VectorXd g;
            double c = chi_vertex(fam, a, u.data(), &g, nullptr);
            cert.max_grad = std::max(cert.max_grad, g.norm() / fam.beta);
            double gap = L - fam.l(a, u.data());
            if (gap <= sb && std::abs(c - 1) > 1e-12)
                ++cert.condition3_violations;
            if (gap >= sb + cert.C_prime / fam.beta && c > 1e-12)
                ++cert.localising_violations;
        }
    }
    return cert;
}

// ---------------------------------------------------------------------------------------------------------------
// tailored systems

double TailoredSystem::c0_tot() const
{
    double s = 0;
    for (const auto& f : factors)
        s += f.c0();
    return s;
}

namespace {

void check_signs(const TailoredSystem& sys)
{
    for (size_t j = 0; j < sys.factors.size(); ++j) {
        const auto& f = sys.factors[j];
        require(f.origin >= 0, ErrorKind::SignConventionViolated, "factor " + std::to_string(j + 1) + " has no constant term");
        for (size_t t = 0; t < f.terms.size(); ++t) {
            double c = f.terms[t].c;
            bool ok = static_cast<int>(t) == f.origin ? c < 0 : c > 0;
            require(ok, ErrorKind::SignConventionViolated,
                    "coefficient of " + to_string(f.terms[t].alpha) + " in factor " + std::to_string(j + 1) +
                        " has the wrong sign");
        }
    }
}

// exponent log|c| + beta l and the cut-off with its derivatives
struct TermParts {
    double x = 0;
    double chi = 0;
    Eigen::VectorXd g;
    Eigen::MatrixXd H;
};

TermParts term_parts(const TailoredSystem& sys, const TailoredTerm& t, const double* u, bool grad, bool hess)
{
    TermParts out;
    const int n = sys.n;
    out.x = std::log(std::abs(t.c)) + sys.beta * (dotd(t.a.data(), u, n) - t.h);
    if (grad)
        out.g = Eigen::VectorXd::Zero(n);
    if (hess)
        out.H = Eigen::MatrixXd::Zero(n, n);
    for (size_t k = 0; k < t.sources.size(); ++k) {
        const auto& fam = sys.families[static_cast<size_t>(t.sources[k].first)];
        Eigen::VectorXd g;
        Eigen::MatrixXd H;
        double c = chi_vertex(fam, t.sources[k].second, u, grad ? &g : nullptr, hess ? &H : nullptr);
        out.chi += t.weights[k] * c;
        if (grad)
            out.g += t.weights[k] * g;
        if (hess)
            out.H += t.weights[k] * H;
    }
    return out;
}

// Ftilde scaled by exp(-M), derivatives included
void add_scaled(const TailoredSystem& sys, const TailoredTerm& t, const TermParts& p, double M, double& val,
                Eigen::VectorXd* grad, Eigen::MatrixXd* hess)
{
    if (p.chi == 0 && (p.g.size() == 0 || p.g.isZero()) && (!hess || p.H.isZero()))
        return;
    double e = std::exp(p.x - M);
    val += p.chi * e;
    Eigen::VectorXd a = sys.beta * as_eigen(t.a);
    if (grad)
        *grad += e * (p.g + p.chi * a);
    if (hess)
        *hess += e * (p.H + p.g * a.transpose() + a * p.g.transpose() + p.chi * a * a.transpose());
}

double G_of_terms(const TailoredSystem& sys, const std::vector<std::pair<int, int>>& which, const std::vector<double>& u,
                  Eigen::VectorXd* grad, Eigen::MatrixXd* hess)
{
    const int n = sys.n;
    require(static_cast<int>(u.size()) == n, ErrorKind::DimensionMismatch, "point has the wrong dimension");
    std::vector<TermParts> parts;
    double M = -std::numeric_limits<double>::infinity();
    for (auto [j, t] : which) {
        parts.push_back(term_parts(sys, sys.factors[static_cast<size_t>(j)].terms[static_cast<size_t>(t)], u.data(),
                                   grad || hess, hess != nullptr));
        if (parts.back().chi > 0 || ((grad || hess) && !parts.back().g.isZero()))
            M = std::max(M, parts.back().x);
    }
    if (grad)
        *grad = Eigen::VectorXd::Zero(n);
    if (hess)
        *hess = Eigen::MatrixXd::Zero(n, n);
    if (!std::isfinite(M))
        return 0;
    double val = 0;
    for (size_t k = 0; k < which.size(); ++k) {
        const auto& t = sys.factors[static_cast<size_t>(which[k].first)].terms[static_cast<size_t>(which[k].second)];
        add_scaled(sys, t, parts[k], M, val, grad, hess);
    }
    double s = std::exp(M);
    if (grad)
        *grad *= s;
    if (hess)
        *hess *= s;
    return val * s;
}

std::vector<std::pair<int, int>> nonzero_terms(const TailoredSystem& sys, int j)
{
    std::vector<std::pair<int, int>> out;
    const auto& f = sys.factors[static_cast<size_t>(j)];
    for (int t = 0; t < static_cast<int>(f.terms.size()); ++t)
        if (t != f.origin)
            out.push_back({j, t});
    return out;
}

}  // namespace

TailoredSystem tailored_system(const std::vector<HeightFunction>& heights, const std::vector<std::vector<double>>& c,
                               double beta, bool centred)
{
    require(!heights.empty() && heights.size() == c.size(), ErrorKind::DimensionMismatch,
            "one coefficient list per factor is needed");
    TailoredSystem sys;
    sys.n = static_cast<int>(heights[0].points[0].size());
    sys.beta = beta;
    sys.centred = centred;
    sys.heights = heights;
    for (size_t j = 0; j < heights.size(); ++j) {
        const auto& h = heights[j];
        require(h.points.size() == c[j].size(), ErrorKind::DimensionMismatch, "coefficients do not match the points");
        TailoredFactor f;
        for (size_t a = 0; a < h.points.size(); ++a) {
            TailoredTerm t{h.points[a], to_double(h.points[a]), h.values[a].get_d(), c[j][a], {{static_cast<int>(j), static_cast<int>(a)}}, {1.0}};
            if (is_zero(h.points[a]))
                f.origin = static_cast<int>(a);
            f.terms.push_back(std::move(t));
        }
        sys.factors.push_back(std::move(f));
    }
    check_signs(sys);
    double c0 = std::abs(sys.c0_tot());
    double minlog = std::log(c0);
    std::set<QVec> seen{zeros(sys.n)};
    sys.total.points.push_back(zeros(sys.n));
    sys.total.values.push_back(0);
    for (size_t j = 0; j < heights.size(); ++j)
        for (size_t a = 0; a < heights[j].points.size(); ++a) {
            if (static_cast<int>(a) == sys.factors[j].origin)
                continue;
            minlog = std::min(minlog, std::log(std::abs(c[j][a])));
            if (seen.insert(heights[j].points[a]).second) {
                sys.total.points.push_back(heights[j].points[a]);
                sys.total.values.push_back(heights[j].values[a]);
            }
        }
    sys.K = 2 + std::log(c0) - minlog;
    for (const auto& h : heights)
        sys.families.push_back(cutoff_family(h, beta, centred ? sys.K : 0.0, centred));
    return sys;
}

TailoredSystem tailored_system(const NefPartition& nef_dual, const HeightFunction& h, double beta,
                               const CoefficientMap& c, bool centred)
{
    std::vector<HeightFunction> heights;
    std::vector<std::vector<double>> coeffs;
    for (int j = 0; j < nef_dual.length(); ++j) {
        const auto& P = nef_dual.summands[static_cast<size_t>(j)];
        HeightFunction hj;
        std::vector<double> cj;
        for (size_t a = 0; a < h.points.size(); ++a)
            if (P.contains(h.points[a])) {
                hj.points.push_back(h.points[a]);
                hj.values.push_back(h.values[a]);
                auto it = c.find({j, h.points[a]});
                cj.push_back(it != c.end() ? it->second : (is_zero(h.points[a]) ? -1.0 : 1.0));
            }
        require(hj.index_of(zeros(P.rank)) >= 0, ErrorKind::NotCentred, "summand misses the origin");
        heights.push_back(std::move(hj));
        coeffs.push_back(std::move(cj));
    }
    return tailored_system(heights, coeffs, beta, centred);
}

TailoredSystem with_beta(const TailoredSystem& sys, double beta)
{
    require(beta > 0, ErrorKind::DimensionMismatch, "beta must be positive");
    TailoredSystem out = sys;
    out.beta = beta;
    for (auto& f : out.families)
        f.beta = beta;
    return out;
}

double term_chi(const TailoredSystem& sys, int j, int t, const double* u, Eigen::VectorXd* grad, Eigen::MatrixXd* hess)
{
    TermParts p = term_parts(sys, sys.factors[static_cast<size_t>(j)].terms[static_cast<size_t>(t)], u, grad != nullptr,
                             hess != nullptr);
    if (grad)
        *grad = p.g;
    if (hess)
        *hess = p.H;
    return p.chi;
}

double term_modulus(const TailoredSystem& sys, int j, int t, const double* u, Eigen::VectorXd* grad, Eigen::MatrixXd* hess)
{
    return G_of_terms(sys, {{j, t}}, std::vector<double>(u, u + sys.n), grad, hess);
}

double G_factor(const TailoredSystem& sys, int j, const std::vector<double>& u, Eigen::VectorXd* grad,
                Eigen::MatrixXd* hess)
{
    return G_of_terms(sys, nonzero_terms(sys, j), u, grad, hess);
}

double G_total(const TailoredSystem& sys, const std::vector<double>& u, Eigen::VectorXd* grad, Eigen::MatrixXd* hess)
{
    std::vector<std::pair<int, int>> all;
    for (int j = 0; j < sys.r(); ++j)
        for (auto p : nonzero_terms(sys, j))
            all.push_back(p);
    return G_of_terms(sys, all, u, grad, hess);
}

BoundaryResiduals boundary_residuals(const TailoredSystem& sys, const std::vector<double>& u)
{
    check_signs(sys);
    BoundaryResiduals out;
    for (int j = 0; j < sys.r(); ++j)
        out.factors.push_back(G_factor(sys, j, u) - std::abs(sys.factors[static_cast<size_t>(j)].c0()));
    out.total = G_total(sys, u) - std::abs(sys.c0_tot());
    return out;
}

std::vector<double> ray_sample(const TailoredSystem& sys, const std::vector<double>& dir, int j)
{
    require(static_cast<int>(dir.size()) == sys.n, ErrorKind::DimensionMismatch, "direction has the wrong dimension");
    double nd = std::sqrt(dotd(dir.data(), dir.data(), sys.n));
    require(nd > 0, ErrorKind::NoRoot, "zero direction");
    Vec d(dir);
    for (auto& x : d)
        x /= nd;
    const double target = j < 0 ? std::abs(sys.c0_tot()) : std::abs(sys.factors[static_cast<size_t>(j)].c0());
    auto f = [&](double t) {
        Vec u(d);
        for (auto& x : u)
            x *= t;
        return (j < 0 ? G_total(sys, u) : G_factor(sys, j, u)) - target;
    };
    require(f(0) < 0, ErrorKind::NoRoot, "the origin is not inside the region");
    double lo = 0, hi = 1;
    int doublings = 0;
    while (!(f(hi) > 0)) {
        lo = hi;
        hi *= 2;
        require(++doublings < 40, ErrorKind::NoRoot, "no sign change along the ray");
    }
    while (hi - lo > 1e-10 * std::max(1.0, hi)) {
        double mid = 0.5 * (lo + hi);
        (f(mid) > 0 ? hi : lo) = mid;
    }
    double t = 0.5 * (lo + hi);
    for (auto& x : d)
        x *= t;
    return d;
}

namespace {

Eigen::MatrixXd orthonormal_rows(const Eigen::MatrixXd& rows, int n)
{
    if (rows.rows() == 0)
        return Eigen::MatrixXd(n, 0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < s.size(); ++i)
        if (s(i) > 1e-9 * std::max(1.0, s(0)))
            ++rank;
    return svd.matrixV().leftCols(rank);
}

Eigen::MatrixXd to_eigen(const QMat& m, int n)
{
    Eigen::MatrixXd out(static_cast<Eigen::Index>(m.size()), n);
    for (size_t i = 0; i < m.size(); ++i)
        for (int k = 0; k < n; ++k)
            out(static_cast<Eigen::Index>(i), k) = m[i][static_cast<size_t>(k)].get_d();
    return out;
}

}  // namespace

std::vector<double> ci_newton_sample(const TailoredSystem& sys, const std::vector<double>& seed)
{
    require(static_cast<int>(seed.size()) == sys.n, ErrorKind::DimensionMismatch, "seed has the wrong dimension");
    std::vector<Eigen::VectorXd> rows;
    for (const auto& f : sys.factors) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& t : f.terms)
            best = std::max(best, dotd(t.a.data(), seed.data(), sys.n) - t.h);
        const TailoredTerm* base = nullptr;
        for (const auto& t : f.terms) {
            double l = dotd(t.a.data(), seed.data(), sys.n) - t.h;
            if (l < best - 1e-9 * std::max(1.0, std::abs(best)))
                continue;
            if (!base)
                base = &t;
            else
                rows.push_back(as_eigen(t.a) - as_eigen(base->a));
        }
    }
    Eigen::MatrixXd R(static_cast<Eigen::Index>(rows.size()), sys.n);
    for (size_t i = 0; i < rows.size(); ++i)
        R.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    Eigen::MatrixXd B = orthonormal_rows(R, sys.n);
    require(B.cols() > 0, ErrorKind::NewtonDiverged, "seed is not on the tropical complete intersection");
    return ci_newton_sample(sys, seed, B);
}

std::vector<double> ci_newton_sample(const TailoredSystem& sys, const std::vector<double>& seed,
                                     const Eigen::MatrixXd& B)
{
    const int r = sys.r();
    Eigen::VectorXd x0 = as_eigen(seed);
    auto F = [&](const Eigen::VectorXd& y, Eigen::MatrixXd* J) {
        Eigen::VectorXd u = x0 + B * y;
        Vec uv(u.data(), u.data() + u.size());
        Eigen::VectorXd out(r);
        if (J)
            J->resize(r, B.cols());
        for (int j = 0; j < r; ++j) {
            Eigen::VectorXd g;
            out(j) = G_factor(sys, j, uv, J ? &g : nullptr) - std::abs(sys.factors[static_cast<size_t>(j)].c0());
            if (J)
                J->row(j) = (B.transpose() * g).transpose();
        }
        return out;
    };
    auto size = [](const Eigen::VectorXd& v) { return v.allFinite() ? v.cwiseAbs().maxCoeff() : std::numeric_limits<double>::infinity(); };
    Eigen::VectorXd y = Eigen::VectorXd::Zero(B.cols());
    for (int it = 0; it < 100; ++it) {
        Eigen::MatrixXd J;
        Eigen::VectorXd Fy = F(y, &J);
        double cur = size(Fy);
        if (cur <= 1e-10) {
            Eigen::VectorXd u = x0 + B * y;
            return Vec(u.data(), u.data() + u.size());
        }
        Eigen::VectorXd step = -J.completeOrthogonalDecomposition().solve(Fy);
        double lambda = 1;
        bool moved = false;
        while (lambda > 1e-8) {
            Eigen::VectorXd trial = y + lambda * step;
            if (size(F(trial, nullptr)) < cur) {
                y = trial;
                moved = true;
                break;
            }
            lambda /= 2;
        }
        require(moved, ErrorKind::NewtonDiverged, "no descent step, residual " + std::to_string(cur));
    }
    fail(ErrorKind::NewtonDiverged, "no convergence in 100 iterations");
}

std::vector<CiCell> bounded_ci_cells(const TailoredSystem& sys)
{
    std::vector<HeightFunction> hs;
    for (const auto& f : sys.factors) {
        HeightFunction h;
        for (const auto& t : f.terms) {
            h.points.push_back(t.alpha);
            h.values.push_back(Q(t.h));
        }
        hs.push_back(std::move(h));
    }
    TropicalCellComplex cx = sys.r() == 1 ? tropical_hypersurface(hs[0]) : tci_complex(hs);
    std::vector<CiCell> out;
    for (const auto& c : cx.cells) {
        if (!c.bounded || c.dim < 0)
            continue;
        CiCell cell;
        cell.label = c.label;
        cell.dim = c.dim;
        cell.cell = c;
        RationalPolytope P = polytope_from_hrep(c.ineq, c.ineq_rhs, c.eq, c.eq_rhs, sys.n);
        for (const auto& v : P.vertices)
            cell.vertices.push_back(to_double(v));
        cell.slice = orthonormal_rows(to_eigen(c.eq, sys.n), sys.n);
        out.push_back(std::move(cell));
    }
    return out;
}

double distance_to_tropical_boundary(const TailoredSystem& sys, const std::vector<double>& u)
{
    const auto& T = sys.total;
    std::vector<Vec> A;
    std::vector<double> b;
    for (size_t i = 0; i < T.points.size(); ++i)
        if (!is_zero(T.points[i])) {
            A.push_back(to_double(T.points[i]));
            b.push_back(T.values[i].get_d());
        }
    const int n = sys.n;
    double inside = std::numeric_limits<double>::infinity();
    bool outside = false;
    for (size_t i = 0; i < A.size(); ++i) {
        double slack = b[i] - dotd(A[i].data(), u.data(), n);
        inside = std::min(inside, slack / std::sqrt(dotd(A[i].data(), A[i].data(), n)));
        outside = outside || slack < 0;
    }
    if (!outside)
        return inside;
    // Dykstra projection onto the intersection of half-spaces
    const size_t m = A.size();
    Vec x(u);
    std::vector<Vec> incr(m, Vec(static_cast<size_t>(n), 0.0));
    for (int sweep = 0; sweep < 20000; ++sweep) {
        double change = 0;
        for (size_t i = 0; i < m; ++i) {
            Vec y(x);
            for (int k = 0; k < n; ++k)
                y[static_cast<size_t>(k)] += incr[i][static_cast<size_t>(k)];
            double viol = dotd(A[i].data(), y.data(), n) - b[i];
            double aa = dotd(A[i].data(), A[i].data(), n);
            Vec z(y);
            if (viol > 0)
                for (int k = 0; k < n; ++k)
                    z[static_cast<size_t>(k)] -= viol / aa * A[i][static_cast<size_t>(k)];
            for (int k = 0; k < n; ++k) {
                incr[i][static_cast<size_t>(k)] = y[static_cast<size_t>(k)] - z[static_cast<size_t>(k)];
                change = std::max(change, std::abs(z[static_cast<size_t>(k)] - x[static_cast<size_t>(k)]));
            }
            x = z;
        }
        if (change < 1e-15)
            break;
    }
    double d = 0;
    for (int k = 0; k < n; ++k)
        d += (x[static_cast<size_t>(k)] - u[static_cast<size_t>(k)]) * (x[static_cast<size_t>(k)] - u[static_cast<size_t>(k)]);
    return std::sqrt(d);
}

double min_hessian_eigenvalue(const TailoredSystem& sys, const std::vector<double>& u)
{
    Eigen::MatrixXd H;
    G_total(sys, u, nullptr, &H);
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

std::vector<std::vector<double>> v_samples(const TailoredSystem& sys, int count, unsigned seed)
{
    const int n = sys.n;
    std::mt19937 rng(seed);
    std::normal_distribution<double> N01;
    std::uniform_real_distribution<double> U01(0, 1);
    std::vector<Vec> out;
    const auto& T = sys.total;
    while (static_cast<int>(out.size()) < count) {
        Vec d(static_cast<size_t>(n));
        for (auto& x : d)
            x = N01(rng);
        double nd = std::sqrt(dotd(d.data(), d.data(), n));
        for (auto& x : d)
            x /= nd;
        double tmax = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < T.points.size(); ++i) {
            auto a = to_double(T.points[i]);
            double ad = dotd(a.data(), d.data(), n);
            if (ad > 1e-12)
                tmax = std::min(tmax, (T.values[i].get_d() + sys.K / sys.beta) / ad);
        }
        if (!std::isfinite(tmax) || tmax <= 0)
            continue;
        double t = tmax * std::pow(U01(rng), 1.0 / n);
        for (auto& x : d)
            x *= t;
        out.push_back(std::move(d));
    }
    return out;
}

namespace {

double fit_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const double N = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (N * sxy - sx * sy) / (N * sxx - sx * sx);
}

}  // namespace

LimitReport convexity_and_limit_report(const TailoredSystem& sys, const std::vector<double>& betas, int samples,
                                       unsigned seed, bool strict)
{
    require(betas.size() >= 2, ErrorKind::RateOutOfBand, "at least two beta values are needed for a rate");
    LimitReport rep;
    rep.min_eig = std::numeric_limits<double>::infinity();
    std::vector<double> lx, ly;
    for (size_t k = 0; k < betas.size(); ++k) {
        TailoredSystem s = with_beta(sys, betas[k]);
        BetaRow row;
        row.beta = betas[k];
        row.min_eig = std::numeric_limits<double>::infinity();
        for (const auto& u : v_samples(s, samples, seed + static_cast<unsigned>(k))) {
            row.min_eig = std::min(row.min_eig, min_hessian_eigenvalue(s, u));
            ++row.v_samples;
        }
        std::mt19937 rng(seed + 1000 + static_cast<unsigned>(k));
        std::normal_distribution<double> N01;
        Vec diag(static_cast<size_t>(s.n), 1.0);
        row.diag_dist = distance_to_tropical_boundary(s, ray_sample(s, diag));
        row.max_dist = row.diag_dist;
        row.boundary_samples = 1;
        for (int i = 0; i < samples; ++i) {
            Vec d(static_cast<size_t>(s.n));
            for (auto& x : d)
                x = N01(rng);
            row.max_dist = std::max(row.max_dist, distance_to_tropical_boundary(s, ray_sample(s, d)));
            ++row.boundary_samples;
        }
        rep.min_eig = std::min(rep.min_eig, row.min_eig);
        lx.push_back(std::log(row.beta));
        ly.push_back(std::log(row.max_dist));
        rep.rows.push_back(row);
    }
    rep.slope = fit_slope(lx, ly);
    rep.convex = rep.min_eig >= -1e-8;
    rep.rate_ok = rep.slope >= -1.3 && rep.slope <= -0.7;
    if (strict) {
        require(rep.convex, ErrorKind::ConvexityFailed,
                "Hessian of G_tot has eigenvalue " + std::to_string(rep.min_eig) + " in V");
        require(rep.rate_ok, ErrorKind::RateOutOfBand, "fitted exponent " + std::to_string(rep.slope));
    }
    return rep;
}

// ---------------------------------------------------------------------------------------------------------------
// truncations and groupings

double TruncatedCutoffs::chi(int j, int a, const std::vector<double>& u) const
{
    const auto& mem = members[static_cast<size_t>(j)];
    auto it = std::find(mem.begin(), mem.end(), a);
    if (it == mem.end())
        return 0;
    return chi_vertex(families[static_cast<size_t>(j)], static_cast<int>(it - mem.begin()), u);
}

TruncatedCutoffs truncated_cutoffs(const TailoredSystem& sys, const Fan& fan, int cone)
{
    auto strata = compactification_strata(sys.heights, fan);
    auto st = std::find_if(strata.begin(), strata.end(), [&](const Stratum& s) { return s.cone == cone; });
    require(st != strata.end(), ErrorKind::ConeNotInFan, "cone index outside the fan");
    require(st->nonempty, ErrorKind::EmptyStratum, "stratum of cone " + std::to_string(cone) + " is empty");
    TruncatedCutoffs out;
    out.cone = cone;
    for (size_t j = 0; j < sys.families.size(); ++j) {
        const auto& fam = sys.families[j];
        const auto& face = st->heights[j].points;
        std::vector<int> mem;
        for (int a = 0; a < fam.size(); ++a)
            if (std::find(face.begin(), face.end(), fam.h.points[static_cast<size_t>(a)]) != face.end())
                mem.push_back(a);
        CutoffFamily r;
        r.profile = fam.profile;
        r.beta = fam.beta;
        for (int a : mem) {
            r.h.points.push_back(fam.h.points[static_cast<size_t>(a)]);
            r.h.values.push_back(fam.h.values[static_cast<size_t>(a)]);
            r.points.push_back(fam.points[static_cast<size_t>(a)]);
            r.heights.push_back(fam.heights[static_cast<size_t>(a)]);
            std::vector<int> nb;
            std::vector<double> K;
            const auto& fnb = fam.nbhd[static_cast<size_t>(a)];
            for (size_t k = 0; k < fnb.size(); ++k) {
                auto it = std::find(mem.begin(), mem.end(), fnb[k]);
                if (it != mem.end()) {
                    nb.push_back(static_cast<int>(it - mem.begin()));
                    K.push_back(fam.K[static_cast<size_t>(a)][k]);
                }
            }
            r.nbhd.push_back(std::move(nb));
            r.K.push_back(std::move(K));
        }
        out.members.push_back(std::move(mem));
        out.families.push_back(std::move(r));
    }
    return out;
}

TailoredSystem grouped_system(const TailoredSystem& sys, const IndexPartition& part)
{
    const int r = static_cast<int>(sys.families.size());
    require(static_cast<int>(sys.factors.size()) == r, ErrorKind::BadPartition, "system is already grouped");
    std::vector<int> seen(static_cast<size_t>(r), 0);
    for (const auto& b : part.blocks) {
        require(!b.empty(), ErrorKind::BadPartition, "empty block");
        for (int j : b) {
            require(j >= 0 && j < r, ErrorKind::BadPartition, "index " + std::to_string(j + 1) + " out of range");
            ++seen[static_cast<size_t>(j)];
        }
    }
    for (int j = 0; j < r; ++j)
        require(seen[static_cast<size_t>(j)] == 1, ErrorKind::BadPartition,
                "index " + std::to_string(j + 1) + " must appear exactly once");
    TailoredSystem out = sys;
    out.factors.clear();
    for (const auto& b : part.blocks) {
        TailoredFactor f;
        TailoredTerm zero;
        zero.alpha = zeros(sys.n);
        zero.a.assign(static_cast<size_t>(sys.n), 0.0);
        double c0 = 0;
        for (int j : b)
            c0 += sys.factors[static_cast<size_t>(j)].c0();
        zero.c = c0;
        for (int j : b) {
            const auto& src = sys.factors[static_cast<size_t>(j)];
            zero.sources.push_back({j, src.origin});
            zero.weights.push_back(src.c0() / c0);
        }
        f.origin = 0;
        f.terms.push_back(std::move(zero));
        for (int j : b) {
            const auto& src = sys.factors[static_cast<size_t>(j)];
            for (size_t t = 0; t < src.terms.size(); ++t)
                if (static_cast<int>(t) != src.origin)
                    f.terms.push_back(src.terms[t]);
        }
        out.factors.push_back(std::move(f));
    }
    return out;
}

// ---------------------------------------------------------------------------------------------------------------
// positive locus and analytic defects

std::vector<PositiveLocusPoint> positive_locus_samples(const TailoredSystem& sys, int count, unsigned seed,
                                                       double transition_fraction)
{
    const auto cells = bounded_ci_cells(sys);
    require(!cells.empty(), ErrorKind::EmptyIntersection, "no bounded cells");
    const int n = sys.n;
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U01(0, 1);
    std::exponential_distribution<double> Ex(1.0);
    std::vector<PositiveLocusPoint> out;
    int attempts = 0;
    while (static_cast<int>(out.size()) < count) {
        require(++attempts < 100 * count + 100, ErrorKind::NewtonDiverged, "sampler keeps failing");
        const CiCell& cell = cells[rng() % cells.size()];
        Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
        double wsum = 0;
        for (const auto& v : cell.vertices) {
            double w = Ex(rng);
            p += w * as_eigen(v);
            wsum += w;
        }
        p /= wsum;
        if (cell.dim >= 1 && U01(rng) < transition_fraction) {
            // move along the cell until one pair cut-off sits at argument -s, s in (0, 2)
            int j = static_cast<int>(rng() % static_cast<unsigned>(sys.r()));
            const auto& f = sys.factors[static_cast<size_t>(j)];
            const auto& S = cell.label.per_factor[static_cast<size_t>(j)];
            struct Pair {
                int t, t2;
                double K;
            };
            std::vector<Pair> pairs;
            for (int t = 0; t < static_cast<int>(f.terms.size()); ++t) {
                const auto& term = f.terms[static_cast<size_t>(t)];
                if (term.sources.size() != 1 || std::find(S.begin(), S.end(), t) != S.end())
                    continue;
                const auto& fam = sys.families[static_cast<size_t>(term.sources[0].first)];
                const auto& nb = fam.nbhd[static_cast<size_t>(term.sources[0].second)];
                for (size_t k = 0; k < nb.size(); ++k)
                    for (int t2 : S) {
                        const auto& o = f.terms[static_cast<size_t>(t2)];
                        if (o.sources.size() == 1 && o.sources[0] == std::make_pair(term.sources[0].first, nb[k]))
                            pairs.push_back({t, t2, fam.K[static_cast<size_t>(term.sources[0].second)][k]});
                    }
            }
            if (!pairs.empty()) {
                const Pair& pr = pairs[rng() % pairs.size()];
                Eigen::VectorXd d = as_eigen(f.terms[static_cast<size_t>(pr.t)].a) - as_eigen(f.terms[static_cast<size_t>(pr.t2)].a);
                double hd = f.terms[static_cast<size_t>(pr.t)].h - f.terms[static_cast<size_t>(pr.t2)].h;
                Eigen::MatrixXd E = to_eigen(cell.cell.eq, n);
                Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n);
                if (E.rows() > 0)
                    P -= cell.slice * cell.slice.transpose();
                Eigen::VectorXd v = P * d;
                double dv = d.dot(v);
                if (dv > 1e-12) {
                    double target = -1 / std::sqrt(sys.beta) - (pr.K + 2 * U01(rng)) / sys.beta;
                    double cur = d.dot(p) - hd;
                    Eigen::VectorXd q = p + (target - cur) / dv * v;
                    bool inside = true;
                    for (size_t i = 0; i < cell.cell.ineq.size(); ++i) {
                        double lhs = 0;
                        for (int k = 0; k < n; ++k)
                            lhs += cell.cell.ineq[i][static_cast<size_t>(k)].get_d() * q(k);
                        inside = inside && lhs <= cell.cell.ineq_rhs[i].get_d() + 1e-9;
                    }
                    if (inside)
                        p = q;
                }
            }
        }
        Vec seedp(p.data(), p.data() + n);
        Vec u;
        try {
            u = cell.slice.cols() > 0 ? ci_newton_sample(sys, seedp, cell.slice) : ci_newton_sample(sys, seedp);
        } catch (const Error&) {
            continue;
        }
        PositiveLocusPoint z{u, Vec(static_cast<size_t>(n))};
        for (auto& th : z.theta)
            th = 2 * std::numbers::pi * (static_cast<int>(rng() % 3) - 1);
        out.push_back(std::move(z));
    }
    return out;
}

double normalized_gram_det(const std::vector<Eigen::VectorXcd>& rows, const Eigen::MatrixXd& Hinv)
{
    const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXcd A(r, r);
    Eigen::MatrixXcd Hc = Hinv.cast<std::complex<double>>();
    std::vector<double> norms;
    for (const auto& v : rows) {
        double nv = std::sqrt(std::max(0.0, (v.adjoint() * Hc * v)(0).real()));
        if (nv == 0)
            return 0;
        norms.push_back(nv);
    }
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index k = 0; k < r; ++k)
            A(i, k) = (rows[static_cast<size_t>(i)].adjoint() * Hc * rows[static_cast<size_t>(k)])(0) /
                      (norms[static_cast<size_t>(i)] * norms[static_cast<size_t>(k)]);
    return A.determinant().real();
}

DefectReport analytic_defects(const TailoredSystem& sys, const PotentialEvaluator& ev,
                              const std::vector<PositiveLocusPoint>& z)
{
    const int n = sys.n;
    require(ev.dim() == n, ErrorKind::DimensionMismatch, "potential and system differ in dimension");
    using C = std::complex<double>;
    const double two_pi = 2 * std::numbers::pi;
    DefectReport rep;
    for (const auto& pt : z) {
        require(static_cast<int>(pt.u.size()) == n && static_cast<int>(pt.theta.size()) == n,
                ErrorKind::DimensionMismatch, "sample has the wrong dimension");
        auto res = boundary_residuals(sys, pt.u);
        for (double x : res.factors)
            require(std::abs(x) <= 1e-8, ErrorKind::SampleOffLocus, "boundary residual " + std::to_string(x));
        Eigen::MatrixXd Hinv = ev.hessian(pt.u).inverse();
        DefectSample ds;
        ds.u = pt.u;
        std::vector<Eigen::VectorXcd> rows;
        for (int j = 0; j < sys.r(); ++j) {
            const auto& f = sys.factors[static_cast<size_t>(j)];
            Eigen::VectorXcd del = Eigen::VectorXcd::Zero(n), dbar = Eigen::VectorXcd::Zero(n);
            double F = 0;
            for (int t = 0; t < static_cast<int>(f.terms.size()); ++t) {
                const auto& term = f.terms[static_cast<size_t>(t)];
                double chi = term_chi(sys, j, t, pt.u.data());
                double phase = dotd(term.a.data(), pt.theta.data(), n);
                if (chi > 0)
                    require(std::abs(phase - two_pi * std::round(phase / two_pi)) <= 1e-8, ErrorKind::SampleOffLocus,
                            "theta leaves the positive real locus");
                double mod = term.c * std::exp(sys.beta * (dotd(term.a.data(), pt.u.data(), n) - term.h));
                C fa = mod * std::exp(C(0, phase));
                F += std::abs(mod) * chi;
                // d chi in rho = beta u by central differences
                Eigen::VectorXd dchi(n);
                const double h = 1e-5;
                for (int k = 0; k < n; ++k) {
                    Vec up(pt.u), dn(pt.u);
                    up[static_cast<size_t>(k)] += h / sys.beta;
                    dn[static_cast<size_t>(k)] -= h / sys.beta;
                    dchi(k) = (term_chi(sys, j, t, up.data()) - term_chi(sys, j, t, dn.data())) / (2 * h);
                }
                del += fa * chi * as_eigen(term.a).cast<C>() + 0.5 * fa * dchi.cast<C>();
                dbar += 0.5 * fa * dchi.cast<C>();
            }
            Eigen::MatrixXcd Hc = Hinv.cast<C>();
            double nb = std::sqrt(std::max(0.0, (dbar.adjoint() * Hc * dbar)(0).real()));
            ds.ratio = std::max(ds.ratio, F > 0 ? nb / F : 0.0);
            rows.push_back(del);
        }
        ds.gram_det = normalized_gram_det(rows, Hinv);
        rep.max_ratio = std::max(rep.max_ratio, ds.ratio);
        rep.min_det = std::min(rep.min_det, ds.gram_det);
        rep.samples.push_back(std::move(ds));
    }
    return rep;
}

DefectDecay defect_decay(const TailoredSystem& sys, const PotentialEvaluator& ev, const std::vector<double>& betas,
                         int samples, unsigned seed)
{
    DefectDecay out;
    std::vector<double> x, y;
    bool all_positive = true;
    for (size_t k = 0; k < betas.size(); ++k) {
        TailoredSystem s = with_beta(sys, betas[k]);
        auto z = positive_locus_samples(s, samples, seed + static_cast<unsigned>(k));
        auto rep = analytic_defects(s, ev, z);
        out.betas.push_back(betas[k]);
        out.max_ratio.push_back(rep.max_ratio);
        out.min_det = std::min(out.min_det, rep.min_det);
        all_positive = all_positive && rep.max_ratio > 0;
        x.push_back(std::sqrt(betas[k]));
        y.push_back(std::log(rep.max_ratio));
    }
    out.slope = all_positive && betas.size() >= 2 ? fit_slope(x, y) : std::numeric_limits<double>::quiet_NaN();
    return out;
}

}  // namespace bbci
