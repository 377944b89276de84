#include "doctest.h"

#include "bbci/error.hpp"
#include "bbci/examples.hpp"
#include "bbci/smoothing.hpp"

#include <cmath>
#include <random>

using namespace bbci;

namespace {

QVec v(std::initializer_list<long> xs) { return to_qvec(std::vector<long>(xs)); }

std::shared_ptr<const FanGeometry> hirzebruch() { return std::make_shared<FanGeometry>(examples::hirzebruch_fan()); }

TriangulationFan running_fan()
{
    return bbci_fan(dual_nef_partition(examples::running_nef()), examples::running_height());
}

int ray_index(const Fan& f, const QVec& r)
{
    auto it = std::find(f.rays.begin(), f.rays.end(), r);
    REQUIRE(it != f.rays.end());
    return static_cast<int>(it - f.rays.begin());
}

double dist(const std::vector<double>& a, const std::vector<double>& b)
{
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i)
        s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

// E[max(Z1, Z2)] for iid bumps of half-width a, by the trapezoid rule on a fine grid
double two_bump_max_oracle(double a)
{
    const int N = 200000;
    auto dens = [](double z) { return std::abs(z) < 1 ? std::exp(-1 / (1 - z * z)) : 0.0; };
    std::vector<double> F(N + 1), f(N + 1);
    double h = 2.0 / N, acc = 0;
    for (int i = 0; i <= N; ++i) {
        f[i] = dens(-1 + i * h);
        if (i > 0)
            acc += 0.5 * h * (f[i] + f[i - 1]);
        F[i] = acc;
    }
    double mean = 0;
    for (int i = 0; i <= N; ++i) {
        double w = (i == 0 || i == N) ? 0.5 * h : h;
        mean += w * (-1 + i * h) * 2 * f[i] * F[i] / (acc * acc);
    }
    return a * mean;
}

}  // namespace

TEST_CASE("star functions on the Hirzebruch fan")
{
    auto g = hirzebruch();
    PLStarFunction f{g, 0};
    CHECK(pl_star_eval(f, {0.5, 1}).value == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(pl_star_eval(f, {0, 1}).value == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(pl_star_eval(f, {-1, 0}).value == 0.0);
    // on cone((0,1),(1,1)) the dual coordinate of (0,1) is y - x
    auto pv = pl_star_eval(f, {0.25, 2});
    CHECK(pv.gradient[0] == doctest::Approx(-1.0));
    CHECK(pv.gradient[1] == doctest::Approx(1.0));
    CHECK(g->lipschitz() == doctest::Approx(std::sqrt(2.0)));

    // agrees with the exact evaluation at rational points, including points on walls
    std::mt19937 rng(3);
    std::uniform_int_distribution<long> d(-6, 6);
    for (const Fan& fan : {examples::hirzebruch_fan(), running_fan().base}) {
        auto geo = std::make_shared<FanGeometry>(fan);
        for (int s = 0; s < 200; ++s) {
            QVec x;
            for (int i = 0; i < fan.rank; ++i)
                x.push_back(Q(d(rng), 3));
            if (s % 4 == 0)  // land on a wall
                x[0] = 0;
            for (int ray = 0; ray < geo->num_rays(); ++ray)
                CHECK(pl_star_eval({geo, ray}, to_double(x)).value ==
                      doctest::Approx(h_rho(fan, ray, x).get_d()).epsilon(1e-12));
        }
    }
}

TEST_CASE("mollification")
{
    auto g = hirzebruch();
    PLStarFunction f{g, 0};

    // h^{e1} of the square fan is x_1 across the wall spanned by e1, so the ball straddles a wall and the
    // quadrature still has to return the linear value
    Fan square = fan_from_maximal(2, {v({1, 0}), v({0, 1}), v({-1, 0}), v({0, -1})}, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
    auto sq = std::make_shared<FanGeometry>(square);
    CHECK(mollify({sq, 0}, 0.1, {1, 0.01}) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(mollify({sq, 0}, 0.3, {0.7, -0.2}) == doctest::Approx(0.7).epsilon(1e-8));

    double h01 = mollify(f, 0.1, {0, 1});
    CHECK(std::abs(h01 - 1) <= 0.1 * g->lipschitz());

    // h^{rho_1} has a kink along rho_1, so the error is exactly linear in eps
    std::vector<double> errs;
    for (double eps : {0.1, 0.05, 0.025})
        errs.push_back(std::abs(mollify(f, eps, {0, 1}) - 1));
    CHECK(errs[0] > 0);
    double slope = std::log(errs[0] / errs[2]) / std::log(4.0);
    CHECK(slope == doctest::Approx(1.0).epsilon(1e-3));

    // far from walls the mollification is the linear value
    CHECK(mollify(f, 0.05, {0.4, 1.3}) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(mollify(f, 0.05, {0, -2}) == 0.0);

    // a two-point rule cannot match its doubled order on a wall
    QuadratureSpec crude;
    crude.order = 2;
    crude.panel = 10;
    CHECK_THROWS_AS(mollify(f, 0.1, {0.05, 1}, crude), Error);

    // the mollification stays within L eps of h
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> box(-2, 2);
    for (int s = 0; s < 30; ++s) {
        std::vector<double> x = {box(rng), box(rng)};
        for (int ray = 0; ray < 4; ++ray)
            CHECK(std::abs(mollify({g, ray}, 0.1, x) - pl_star_eval({g, ray}, x).value) <= 0.1 * g->lipschitz());
    }
}

TEST_CASE("homogenization")
{
    auto g = hirzebruch();
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> box(-2, 2);
    int tested = 0;
    for (int s = 0; s < 100; ++s) {
        std::vector<double> u = {box(rng), box(rng)};
        int ray = s % 4;
        PLStarFunction f{g, ray};
        double base = homogenize(f, 0.05, u);
        if (base == 0)
            continue;
        ++tested;
        for (double lam : {0.5, 2.0, 5.0}) {
            std::vector<double> w = {lam * u[0], lam * u[1]};
            CHECK(homogenize(f, 0.05, w) == doctest::Approx(lam * base).epsilon(1e-9));
        }
    }
    CHECK(tested > 30);

    // the homogenized value is 1 on the level set
    PLStarFunction f{g, 0};
    std::vector<double> u = {0.3, 1.1};
    double r = homogenize(f, 0.1, u);
    CHECK(mollify(f, 0.1, {u[0] / r, u[1] / r}) == doctest::Approx(1.0).epsilon(1e-8));

    // deep inside a maximal cone the level set sees one linear piece
    CHECK(homogenize(f, 0.05, {0.4, 1.3}) == doctest::Approx(0.9).epsilon(1e-10));
    CHECK(homogenize(f, 0.05, {0, -1}) == 0.0);
    CHECK_THROWS_AS(homogenize(f, 10, u), Error);
    try {
        homogenize(f, 10, u);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NoBracket);
    }
}

TEST_CASE("smoothed max and ramp")
{
    CHECK(smooth_max({0.7}, 0.1) == 0.7);
    // a clear winner is returned exactly
    CHECK(smooth_max({1, 0, 0}, 0.1) == doctest::Approx(1.0).epsilon(1e-12));
    double a = 0.1 / std::sqrt(2.0);
    CHECK(smooth_max({0, 0}, 0.1) == doctest::Approx(two_bump_max_oracle(a)).epsilon(1e-6));
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> d(0, 1);
    for (int s = 0; s < 50; ++s) {
        std::vector<double> x = {d(rng), d(rng), d(rng)};
        double m = *std::max_element(x.begin(), x.end());
        double sm = smooth_max(x, 0.2);
        CHECK(sm >= m - 1e-12);
        CHECK(sm <= m + 0.2 / std::sqrt(3.0) + 1e-12);
    }

    const double e = 0.1;
    CHECK(ramp(0.05, e) == 0.0);
    CHECK(ramp(0.1, e) == 0.0);
    CHECK(ramp(0.3, e) == doctest::Approx(0.2));
    CHECK(ramp(0.2, e) == doctest::Approx(0.1));
    double prev = 0;
    for (int i = 0; i <= 100; ++i) {
        double x = 0.1 + 0.1 * i / 100.0;
        CHECK(ramp(x, e) >= prev - 1e-15);
        prev = ramp(x, e);
    }
    // C^2 at both joins
    const double h = 1e-6;
    for (double x : {0.1, 0.2}) {
        double d1l = (ramp(x, e) - ramp(x - h, e)) / h, d1r = (ramp(x + h, e) - ramp(x, e)) / h;
        CHECK(d1l == doctest::Approx(d1r).epsilon(1e-2).scale(1));
        double d2l = (ramp(x, e) - 2 * ramp(x - h, e) + ramp(x - 2 * h, e)) / (h * h);
        double d2r = (ramp(x + 2 * h, e) - 2 * ramp(x + h, e) + ramp(x, e)) / (h * h);
        CHECK(std::abs(d2l - d2r) < 0.01);
    }
}

TEST_CASE("smoothed defining functions on the running example")
{
    TriangulationFan tf = running_fan();
    auto g = std::make_shared<FanGeometry>(tf.base);
    const double eps = 0.1;
    std::vector<double> u = {1, 1, 0};  // eta1 + eta2
    auto sd = smoothed_defining(tf, g, eps, u);
    REQUIRE(sd.per_block.size() == 2);
    CHECK(sd.per_block[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sd.per_block[1] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sd.on_transversal);
    CHECK(sd.block_defect <= eps);

    auto sd2 = smoothed_defining(tf, g, eps, {2, 2, 0});
    CHECK(sd2.per_block[0] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(sd2.per_block[1] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK_FALSE(sd2.on_transversal);
    CHECK_FALSE(sd2.on_boundary);

    auto sd3 = smoothed_defining(tf, g, eps, {1, 0, 1});  // eta1 + eta3, both in the first summand
    CHECK(sd3.per_block[1] <= eps);
    CHECK_FALSE(sd3.on_transversal);
}

TEST_CASE("coherent projections")
{
    auto g = hirzebruch();
    const double eps = 0.05;
    const Fan& fan = g->fan();

    // identity on the relative interior
    auto p = coherent_projection(g, {0, 1}, eps, {0.5, 1.5});
    CHECK(dist(p, {0.5, 1.5}) < 1e-8);
    auto p1 = coherent_projection(g, {0}, eps, {0, 0.7});
    CHECK(dist(p1, {0, 0.7}) < 1e-8);

    auto q = coherent_projection(g, {0}, eps, {0.5, 1});
    CHECK(q[0] == doctest::Approx(0.0).scale(1));
    CHECK(std::abs(q[1] - 0.5) <= 2 * eps);
    auto q2 = coherent_projection(g, {0}, eps, {1, 2});
    CHECK(dist(q2, {2 * q[0], 2 * q[1]}) < 1e-8);

    CHECK_THROWS_AS(coherent_projection(g, {0}, eps, {0, -1}), Error);

    // compatibility with faces, homogeneity, and separation of fibres of (q_sigma, pi_sigma)
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> box(-2, 2);
    int pairs = 0;
    std::vector<std::pair<std::vector<double>, std::vector<double>>> seen;  // (q, pi) for the ray 0
    auto quotient = quotient_fan(fan, {0});
    for (const auto& sigma : fan.maximal_cones()) {
        for (int s = 0; s < 12; ++s) {
            std::vector<double> u = {box(rng), box(rng)};
            if (pl_star_eval({g, sigma[0]}, u).value < 0.2 || pl_star_eval({g, sigma[1]}, u).value < 0.2)
                continue;
            auto ps = coherent_projection(g, sigma, eps, u);
            for (int tau : sigma) {
                auto a = coherent_projection(g, {tau}, eps, ps);
                auto b = coherent_projection(g, {tau}, eps, u);
                CHECK(dist(a, b) < 1e-8);
                ++pairs;
                if (tau == 0) {
                    std::vector<double> qv;
                    for (const auto& row : quotient.annihilator) {
                        double acc = 0;
                        for (size_t i = 0; i < u.size(); ++i)
                            acc += row[i].get_d() * u[i];
                        qv.push_back(acc);
                    }
                    seen.emplace_back(qv, b);
                }
            }
            auto ps3 = coherent_projection(g, sigma, eps, {3 * u[0], 3 * u[1]});
            CHECK(dist(ps3, {3 * ps[0], 3 * ps[1]}) < 1e-8);
        }
    }
    CHECK(pairs > 20);
    for (size_t i = 0; i < seen.size(); ++i)
        for (size_t j = i + 1; j < seen.size(); ++j)
            CHECK(std::max(dist(seen[i].first, seen[j].first), dist(seen[i].second, seen[j].second)) > 1e-8);

    // equivariant mode is the identity on the relative interior as well
    auto pe = coherent_projection(g, {0, 1}, eps, {0.5, 1.5}, ProjectionMode::Equivariant);
    CHECK(dist(pe, {0.5, 1.5}) < 1e-8);
}

TEST_CASE("scaling flows")
{
    TriangulationFan tf = running_fan();
    auto g = std::make_shared<FanGeometry>(tf.base);
    const Fan& fan = tf.base;
    int e1 = ray_index(fan, v({1, 0, 0})), e2 = ray_index(fan, v({0, 1, 0}));
    REQUIRE(tf.summand_of_ray[static_cast<size_t>(e1)] != tf.summand_of_ray[static_cast<size_t>(e2)]);

    ScalingField nef;
    nef.geometry = g;
    nef.mode = ScalingMode::Nef;
    nef.block_of_ray = tf.summand_of_ray;
    std::vector<double> t(2);
    t[static_cast<size_t>(tf.summand_of_ray[static_cast<size_t>(e1)])] = std::log(2.0);
    t[static_cast<size_t>(tf.summand_of_ray[static_cast<size_t>(e2)])] = std::log(3.0);
    std::vector<double> u = {1, 1, 0};
    auto x = scaling_flow(nef, u, t);
    CHECK(dist(x, {2, 3, 0}) < 1e-8);
    std::vector<double> tr(static_cast<size_t>(g->num_rays()), 0.0);
    for (int k = 0; k < g->num_rays(); ++k)
        tr[static_cast<size_t>(k)] = t[static_cast<size_t>(tf.summand_of_ray[static_cast<size_t>(k)])];
    auto closed = pl_scaling_action(*g, u, tr);
    CHECK(dist(closed, {2, 3, 0}) < 1e-14);
    CHECK(dist(scaling_flow(nef, u, {0, 0}), u) == 0.0);

    // RK4 against the closed form and the nef action of the transversal cone
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> d(-1, 1), pos(0.1, 2);
    for (int s = 0; s < 20; ++s) {
        std::vector<double> w = {pos(rng) * (s % 2 ? 1 : -1), pos(rng), d(rng)};
        std::vector<double> tt = {d(rng), d(rng)};
        for (int k = 0; k < g->num_rays(); ++k)
            tr[static_cast<size_t>(k)] = tt[static_cast<size_t>(tf.summand_of_ray[static_cast<size_t>(k)])];
        CHECK(dist(scaling_flow(nef, w, tt), pl_scaling_action(*g, w, tr)) < 1e-7);
    }

    // the nef flow keeps the open cone: coordinates keep their signs along the flow
    for (int s = 0; s < 10; ++s) {
        std::vector<double> w = {pos(rng), pos(rng), s % 3 == 0 ? 0.0 : d(rng)};
        std::vector<double> c0(3), c1(3);
        int cone0 = g->locate(w.data(), c0.data());
        for (int k = 1; k <= 20; ++k) {
            double tau = 0.05 * k;
            auto y = scaling_flow(nef, w, {tau, -tau});
            int cone1 = g->locate(y.data(), c1.data());
            REQUIRE(cone1 >= 0);
            // compare supports through the exact star values of every ray
            for (int r = 0; r < g->num_rays(); ++r)
                CHECK((g->star(r, w.data()) > 1e-12) == (g->star(r, y.data()) > 1e-12));
            (void)cone0;
        }
    }

    // smoothed flow agrees with the PL flow deep inside a maximal cone
    auto hz = hirzebruch();
    ScalingField pl, sm;
    pl.geometry = sm.geometry = hz;
    sm.smoothed = true;
    sm.eps_prime = 1e-8;
    sm.delta_prime = 1e-3;
    std::vector<double> deep = {0.5, 1.5};  // (0,1) and (1,1) coordinates 1 and 0.5
    for (double tt : {0.5, -0.5, 1.0}) {
        std::vector<double> times = {tt, 0, 0, 0};
        CHECK(dist(scaling_flow(sm, deep, times), scaling_flow(pl, deep, times)) < 1e-6);
        CHECK(dist(scaling_flow(pl, deep, times), pl_scaling_action(*hz, deep, times)) < 1e-8);
    }
    auto vf = sm.vector_field(0, deep);
    CHECK(vf[0] == 0.0);
    CHECK(vf[1] == doctest::Approx(1.0 - 1e-8));
}

TEST_CASE("smoothing diagnostics")
{
    auto g = hirzebruch();
    DiagnosticConfig cfg;
    cfg.eps = 0.05;
    cfg.commutator_samples = 20;
    auto rep = smoothing_diagnostics(g, cfg);
    std::string first = rep.witnesses.empty() ? std::string() : rep.witnesses.front();
    INFO(first);
    CHECK(rep.radial_ok);
    CHECK(rep.commutator_ok);
    CHECK(rep.slice_ok);
    CHECK(rep.max_commutator <= 1e-6);
    REQUIRE(rep.fitted_C.size() == 3);
    CHECK_NOTHROW(require_pass(rep));

    DiagnosticConfig bad;
    bad.eps = 0.8;
    bad.commutator_samples = 0;
    bad.slice_samples = 0;
    auto neg = smoothing_diagnostics(g, bad);
    CHECK_FALSE(neg.radial_ok);
    CHECK_FALSE(neg.witnesses.empty());
    CHECK_THROWS_AS(require_pass(neg), Error);

    // single cone: the star function is linear on the cone, so deep points see derivative 1 and commuting flows
    Fan one = fan_from_maximal(2, {v({1, 0}), v({0, 1})}, {{0, 1}});
    auto g1 = std::make_shared<FanGeometry>(one);
    PLStarFunction f{g1, 0};
    std::vector<double> u = {1, 1};
    double D = (mollify(f, 0.1, {1 + 1e-5, 1 + 1e-5}) - mollify(f, 0.1, {1 - 1e-5, 1 - 1e-5})) / 2e-5;
    CHECK(D == doctest::Approx(1.0).epsilon(1e-9));
    ScalingField sf;
    sf.geometry = g1;
    sf.smoothed = true;
    sf.eps_prime = 0.05;
    sf.delta_prime = 0.05;
    auto a = ray_flow(sf, 0, ray_flow(sf, 1, u, 0.7), -0.4);
    auto b = ray_flow(sf, 1, ray_flow(sf, 0, u, -0.4), 0.7);
    CHECK(dist(a, b) < 1e-8);
}
