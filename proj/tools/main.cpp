// bbci: project-file driven front end. Exit codes: 0 ok, 1 parse, 2 validation, 3 numeric failure.

#include "project.hpp"

#include "bbci/error.hpp"
#include "bbci/potentials.hpp"
#include "bbci/smoothing.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <thread>

using namespace bbci;
using namespace bbci::cli;

namespace {

enum Exit { Ok = 0, ParseFailure = 1, ValidationFailure = 2, NumericFailure = 3 };

int exit_code(ErrorKind k)
{
    switch (k) {
    case ErrorKind::ParseError:
        return ParseFailure;
    case ErrorKind::QuadratureNotConverged:
    case ErrorKind::DiagnosticFailed:
    case ErrorKind::NoBracket:
    case ErrorKind::NoRoot:
    case ErrorKind::RootBracketFailed:
    case ErrorKind::NewtonDiverged:
    case ErrorKind::StepLimitExceeded:
    case ErrorKind::ConvexityFailed:
    case ErrorKind::ConvexityViolated:
    case ErrorKind::NonConvexDetected:
    case ErrorKind::NotConvexForThisEpsilon:
    case ErrorKind::MinimizerNotInterior:
    case ErrorKind::MinimizerOnBoundary:
    case ErrorKind::MomentSolveFailed:
    case ErrorKind::NegativeWeight:
    case ErrorKind::RateOutOfBand:
    case ErrorKind::SingularChainSystem:
    case ErrorKind::SampleOffLocus:
        return NumericFailure;
    default:
        return ValidationFailure;
    }
}

struct Globals {
    std::string input;
    std::string output_dir;
    std::optional<unsigned> seed;
    std::optional<double> tol;
};

struct Output {
    std::string name;  // base name of the JSON report
    json result;
    std::map<std::string, std::string> files;
    int exit = Ok;
};

int thread_count()
{
    const char* env = std::getenv("BBCI_THREADS");
    if (!env)
        return 1;
    int n = std::atoi(env);
    return n >= 1 ? n : 1;
}

/// Runs f(0..n-1) on BBCI_THREADS workers; results keep their index so the output is independent of scheduling.
template <class T>
std::vector<T> parallel_map(size_t n, const std::function<T(size_t)>& f)
{
    std::vector<T> out(n);
    std::vector<std::exception_ptr> errors(n);
    const size_t workers = std::min(n, static_cast<size_t>(thread_count()));
    auto run = [&](size_t w) {
        for (size_t i = w; i < n; i += workers) {
            try {
                out[i] = f(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1)
        run(0);
    else {
        std::vector<std::thread> pool;
        for (size_t w = 0; w < workers; ++w)
            pool.emplace_back(run, w);
        for (auto& t : pool)
            t.join();
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return out;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

json zmat_json(const ZMat& m)
{
    json a = json::array();
    for (const auto& row : m) {
        json r = json::array();
        for (const auto& z : row)
            r.push_back(z.get_si());
        a.push_back(r);
    }
    return a;
}

json matrix_json(const Eigen::MatrixXd& m)
{
    json a = json::array();
    for (long i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (long k = 0; k < m.cols(); ++k)
            r.push_back(m(i, k));
        a.push_back(r);
    }
    return a;
}

json cone_rays_json(const Fan& fan, int cone)
{
    json a = json::array();
    if (cone < 0)
        return a;
    for (int r : fan.cones[static_cast<size_t>(cone)])
        a.push_back(to_json(fan.rays[static_cast<size_t>(r)]));
    return a;
}

RationalPolytope closure(const TropCell& c, int n) { return polytope_from_hrep(c.ineq, c.ineq_rhs, c.eq, c.eq_rhs, n); }

std::vector<RationalPolytope> bounded_closures(const TropicalCellComplex& t)
{
    std::vector<RationalPolytope> out;
    for (const auto& c : t.cells)
        if (c.bounded)
            out.push_back(closure(c, t.n));
    return out;
}

json nef_json(const NefPartition& p)
{
    json s = json::array();
    for (const auto& q : p.summands)
        s.push_back(to_json(q.vertices));
    return {{"summands", s}, {"parent", to_json(p.parent)}};
}

// ---------------------------------------------------------------------------------------------------------------
// nef

Output nef_dualize(const Project& p)
{
    NefPartition nef = p.nef();
    NefPartition dual = dual_nef_partition(nef);
    DualityReport r = verify_duality_theorem(nef, dual);
    return {"nef-dualize", {{"dual", nef_json(dual)}, {"report", to_json(r)}}, {}, r.ok() ? Ok : ValidationFailure};
}

Output nef_check(const Project& p)
{
    Output out{"nef-check", {}, {}, Ok};
    NefPartition nef;
    try {
        nef = p.nef();
    } catch (const Error& e) {
        if (exit_code(e.kind()) != ValidationFailure)
            throw;
        out.result = {{"valid", false}, {"error", std::string(kind_name(e.kind()))}, {"message", e.what()}};
        out.exit = ValidationFailure;
        return out;
    }
    NefPartition dual = dual_nef_partition(nef);
    DualityReport r = verify_duality_theorem(nef, dual);
    out.result = {{"valid", r.ok()},
                  {"irreducible", is_irreducible(nef)},
                  {"summand_cones_disjoint", summand_cones_disjoint(nef)},
                  {"duality", to_json(r)}};
    out.exit = r.ok() ? Ok : ValidationFailure;
    return out;
}

Output nef_regroup(const Project& p, const std::string& blocks)
{
    NefPartition nef = p.nef();
    NefPartition dual = dual_nef_partition(nef);
    Regrouping g = regroup(nef, dual, parse_blocks(blocks));
    return {"nef-regroup",
            {{"blocks", parse_blocks(blocks).blocks},
             {"grouped", nef_json(g.grouped)},
             {"cogrouped", nef_json(g.cogrouped)},
             {"consistent", g.consistent}},
            {},
            g.consistent ? Ok : ValidationFailure};
}

// ---------------------------------------------------------------------------------------------------------------
// trop

Output trop_cells(const Project& p)
{
    NefPartition dual = p.dual();
    TropicalCellComplex t = tci_complex(p.factors(dual));
    Output out{"trop-cells", to_json(t), {}, Ok};
    if (p.rank <= 3)
        out.files["trop-cells.obj"] = to_obj(bounded_closures(t));
    return out;
}

Output trop_bounded(const Project& p)
{
    NefPartition dual = p.dual();
    BbciComplex b = bbci_bounded_complex(dual, p.height(dual));
    std::vector<int> count(static_cast<size_t>(p.rank) + 1, 0);
    for (const auto& c : b.bounded.cells)
        if (c.bounded)
            ++count[static_cast<size_t>(c.dim)];
    json simplices = json::array();
    for (const auto& s : b.transversal.simplices)
        simplices.push_back(s);
    Output out{"trop-bounded",
               {{"complex", to_json(b.bounded)},
                {"cells_by_dim", count},
                {"betti", complex_homology(b.bounded)},
                {"transversal", {{"simplices", simplices}, {"realization_ok", b.transversal.realization_ok}}},
                {"simplex_of", b.simplex_of},
                {"total_matches", b.total_matches}},
               {},
               Ok};
    if (p.rank <= 3)
        out.files["trop-bounded.obj"] = to_obj(bounded_closures(b.bounded));
    return out;
}

Output trop_unbounded(const Project& p)
{
    NefPartition dual = p.dual();
    auto cells = bbci_unbounded_cells(dual, p.height(dual));
    json a = json::array();
    for (const auto& c : cells)
        a.push_back({{"label", c.label.per_factor}, {"dim", c.dim}, {"recession", to_json(c.recession)}});
    return {"trop-unbounded", {{"count", cells.size()}, {"cells", a}}, {}, Ok};
}

Output trop_homology(const Project& p)
{
    NefPartition dual = p.dual();
    BbciComplex b = bbci_bounded_complex(dual, p.height(dual));
    return {"trop-homology",
            {{"bounded", complex_homology(b.bounded)}, {"transversal", complex_homology(b.transversal)}},
            {},
            Ok};
}

Output trop_strata(const Project& p)
{
    NefPartition dual = p.dual();
    Fan fan = p.fan ? *p.fan : normal_fan(dual.parent);
    auto strata = compactification_strata(p.factors(dual), fan);
    json a = json::array();
    for (const auto& s : strata) {
        json faces = json::array();
        for (const auto& f : s.faces)
            faces.push_back(to_json(f.vertices));
        a.push_back({{"cone", s.cone}, {"rays", cone_rays_json(fan, s.cone)}, {"nonempty", s.nonempty}, {"faces", faces}});
    }
    return {"trop-strata", {{"strata", a}}, {}, Ok};
}

// ---------------------------------------------------------------------------------------------------------------
// skeleton

json chart_json(const TriangulationFan& tf, const SkeletonChart& c)
{
    json q = json::array();
    for (const auto& r : c.quotient.fan.rays)
        q.push_back(to_json(r));
    return {{"cone", c.cone},
            {"rays", cone_rays_json(tf.base, c.cone)},
            {"factor_simplices", c.factor_simplices},
            {"dim_cone", c.dim_cone},
            {"dim_perp", c.dim_perp},
            {"quotient_rays", q},
            {"annihilator", zmat_json(c.quotient.annihilator)}};
}

Output skeleton_charts(const Project& p, bool full)
{
    TriangulationFan tf = p.triangulation_fan();
    TransversalPoset poset = transversal_cones(tf);
    SkeletonModel m = skeleton_model(tf, poset);
    json charts = json::array();
    for (const auto& c : m.charts)
        charts.push_back(chart_json(tf, c));
    json inclusions = json::array();
    for (const auto& i : m.inclusions)
        inclusions.push_back({{"from", i.from}, {"to", i.to}, {"map", zmat_json(i.map)}, {"ray_map", i.ray_map}});
    int minimal = 0, maximal = 0;
    for (size_t a = 0; a < poset.cones.size(); ++a) {
        bool sub = false, sup = false;
        for (auto [x, y] : poset.faces) {
            sub = sub || y == static_cast<int>(a);
            sup = sup || x == static_cast<int>(a);
        }
        minimal += !sub;
        maximal += !sup;
    }
    Output out{full ? "skeleton-model" : "skeleton-charts",
               {{"charts", charts}, {"inclusions", inclusions}, {"minimal", minimal}, {"maximal", maximal}},
               {},
               Ok};
    if (full && p.rank <= 3) {
        BarycentricComplex ba = barycentric_complex(tf);
        std::vector<RationalPolytope> trans;
        for (const auto& piece : ba.transversal)
            trans.push_back(piece.polytope);
        out.files["skeleton-barycentric.obj"] = to_obj(ba.cubes);
        out.files["skeleton-transversal.obj"] = to_obj(trans);
    }
    return out;
}

Output skeleton_member(const Project& p, const std::vector<double>& u, const std::vector<double>& theta, double tol)
{
    require(static_cast<int>(u.size()) == p.rank && static_cast<int>(theta.size()) == p.rank,
            ErrorKind::DimensionMismatch, fmt::format("--u and --theta need {} coordinates", p.rank));
    TriangulationFan tf = p.triangulation_fan();
    NefPartition nef = p.nef();
    auto ev = PotentialEvaluator::quadratic(nef.parent, Eigen::MatrixXd::Identity(p.rank, p.rank));
    TailoredSystem sys = p.tailored(p.config.beta);
    SkeletonContext ctx;
    ctx.fan = &tf;
    ctx.gradient = [&](const std::vector<double>& x) { return ev.eval(x).grad; };
    ctx.residuals = [&](const std::vector<double>& x) { return boundary_residuals(sys, x).factors; };
    auto m = skeleton_membership(u, theta, ctx, tol);
    return {"skeleton-member",
            {{"u", u},
             {"theta", theta},
             {"beta", p.config.beta},
             {"in_skeleton", m.in_skeleton},
             {"cone", m.cone},
             {"witness", cone_rays_json(tf.base, m.cone)}},
            {},
            Ok};
}

// ---------------------------------------------------------------------------------------------------------------
// smooth

struct SmoothOptions {
    std::vector<double> u;
    std::vector<int> cone;
    std::vector<double> t;
    std::optional<double> eps;
    double eps2 = 0;
    double delta = 0;
    bool nef = false;
    bool equivariant = false;
    int samples = 100;
};

Output smooth_eval(const Project& p, const SmoothOptions& o)
{
    TriangulationFan tf = p.triangulation_fan();
    auto g = std::make_shared<const FanGeometry>(tf.base);
    double eps = o.eps.value_or(p.config.smooth_eps);
    auto d = smoothed_defining(tf, g, eps, o.u, p.config.tol);
    return {"smooth-eval",
            {{"u", o.u},
             {"eps", eps},
             {"total", d.total},
             {"per_block", d.per_block},
             {"ray_values", d.ray_values},
             {"on_boundary", d.on_boundary},
             {"on_transversal", d.on_transversal},
             {"jacobian", matrix_json(d.jacobian)},
             {"block_defect", d.block_defect}},
            {},
            Ok};
}

Output smooth_project(const Project& p, const SmoothOptions& o)
{
    TriangulationFan tf = p.triangulation_fan();
    auto g = std::make_shared<const FanGeometry>(tf.base);
    double eps = o.eps.value_or(p.config.smooth_eps);
    auto x = coherent_projection(g, o.cone, eps, o.u, o.equivariant ? ProjectionMode::Equivariant : ProjectionMode::Homogeneous);
    return {"smooth-project", {{"u", o.u}, {"cone", o.cone}, {"eps", eps}, {"projection", x}}, {}, Ok};
}

Output smooth_flow(const Project& p, const SmoothOptions& o)
{
    TriangulationFan tf = p.triangulation_fan();
    ScalingField field;
    field.geometry = std::make_shared<const FanGeometry>(tf.base);
    field.mode = o.nef ? ScalingMode::Nef : ScalingMode::Total;
    field.block_of_ray = tf.summand_of_ray;
    field.smoothed = o.eps2 > 0;
    field.eps_prime = o.eps2;
    field.delta_prime = o.delta;
    auto x = scaling_flow(field, o.u, o.t);
    return {"smooth-flow",
            {{"u", o.u}, {"t", o.t}, {"mode", o.nef ? "nef" : "total"}, {"eps_prime", o.eps2}, {"delta", o.delta},
             {"image", x}},
            {},
            Ok};
}

Output smooth_diagnose(const Project& p, const SmoothOptions& o, unsigned seed)
{
    TriangulationFan tf = p.triangulation_fan();
    DiagnosticConfig cfg;
    cfg.eps = o.eps.value_or(p.config.smooth_eps);
    cfg.commutator_samples = o.samples;
    cfg.seed = seed;
    auto r = smoothing_diagnostics(std::make_shared<const FanGeometry>(tf.base), cfg);
    return {"smooth-diagnose",
            {{"eps_grid", r.eps_grid},
             {"fitted_C", r.fitted_C},
             {"max_defect", r.max_defect},
             {"radial_ok", r.radial_ok},
             {"max_commutator", r.max_commutator},
             {"commutator_ok", r.commutator_ok},
             {"max_slice_gap", r.max_slice_gap},
             {"slice_ok", r.slice_ok},
             {"witnesses", r.witnesses},
             {"pass", r.pass()}},
            {},
            r.pass() ? Ok : NumericFailure};
}

// ---------------------------------------------------------------------------------------------------------------
// potential

struct PotentialOptions {
    std::string polytope;
    std::vector<double> eps;
    bool quadratic = false;
    bool auto_tune = false;
    int samples = 1000;
};

RationalPolytope potential_polytope(const Project& p, const PotentialOptions& o)
{
    if (o.polytope.empty())
        return p.nef().parent;
    json j = read_json(o.polytope);
    const json& pts = j.is_object() ? j.at("vertices") : j;
    return convex_hull(parse_points(pts));
}

TentedPotentialSpec tented_spec(const Project& p, const PotentialOptions& o)
{
    TentedPotentialSpec s;
    s.P = potential_polytope(p, o);
    s.eps1 = p.config.eps1;
    s.eps2 = p.config.eps2;
    s.eps3 = p.config.eps3;
    if (!o.eps.empty()) {
        require(o.eps.size() == 3, ErrorKind::ParseError, "--eps expects eps1,eps2,eps3");
        s.eps1 = o.eps[0];
        s.eps2 = o.eps[1];
        s.eps3 = o.eps[2];
    }
    return s;
}

PotentialEvaluator make_potential(const Project& p, const PotentialOptions& o, json* info = nullptr)
{
    if (o.quadratic) {
        RationalPolytope P = potential_polytope(p, o);
        if (info)
            *info = {{"mode", "quadratic"}, {"polytope", to_json(P)}};
        return PotentialEvaluator::quadratic(P, Eigen::MatrixXd::Identity(P.rank, P.rank));
    }
    TentedPotentialSpec s = tented_spec(p, o);
    int halvings = 0;
    if (o.auto_tune) {
        AutoTuneResult t = auto_tune(s);
        s.eps1 = t.eps1;
        s.eps2 = t.eps2;
        s.eps3 = t.eps3;
        halvings = t.halvings;
    }
    if (info)
        *info = {{"mode", "tented"}, {"eps", {s.eps1, s.eps2, s.eps3}}, {"halvings", halvings}};
    return PotentialEvaluator(s);
}

Output potential_build(const Project& p, const PotentialOptions& o)
{
    if (o.quadratic) {
        json info;
        auto ev = make_potential(p, o, &info);
        info["g"] = matrix_json(Eigen::MatrixXd::Identity(ev.dim(), ev.dim()));
        return {"potential-build", info, {}, Ok};
    }
    TentedPotentialSpec s = validated(tented_spec(p, o));
    PotentialEvaluator ev(s);
    return {"potential-build",
            {{"mode", "tented"},
             {"polytope", to_json(s.P)},
             {"eps", {s.eps1, s.eps2, s.eps3}},
             {"tent_points", s.tent_points},
             {"psi", {{"center", s.psi.center}, {"g", matrix_json(s.psi.g)}}},
             {"chains", ev.phi1().chains.size()}},
            {},
            Ok};
}

Output potential_check(const Project& p, const PotentialOptions& o)
{
    json info;
    auto ev = make_potential(p, o, &info);
    AdaptedReport r = check_adapted(ev);
    json faces = json::array();
    for (const auto& f : r.faces)
        faces.push_back({{"face", f.face},
                         {"dim", f.dim},
                         {"minimizer", f.minimizer},
                         {"margin", f.margin},
                         {"interior", f.interior},
                         {"in_cone", f.in_cone},
                         {"star_failures", f.star_failures},
                         {"ok", f.ok()}});
    info["adapted"] = r.adapted();
    info["faces"] = faces;
    return {"potential-check", info, {}, r.adapted() ? Ok : NumericFailure};
}

Output potential_bound(const Project& p, const PotentialOptions& o, unsigned seed)
{
    json info;
    auto ev = make_potential(p, o, &info);
    NefPartition dual = p.dual();
    TropicalCellComplex hyp = tropical_hypersurface(p.height(dual));
    StrongConvexity sc = strong_convexity_constant(ev, 0, 1000, seed);
    auto Ts = boundary_simplices(hyp);
    auto reports = parallel_map<AdaptedBoundReport>(Ts.size(), [&](size_t i) {
        return adapted_bound_check(ev, hyp, Ts[i], sc.m, o.samples, seed + static_cast<unsigned>(i));
    });
    json faces = json::array();
    bool holds = true;
    for (const auto& r : reports) {
        holds = holds && r.holds;
        faces.push_back({{"T", r.T},
                         {"u_T", r.u_T},
                         {"t", r.t},
                         {"c", r.c},
                         {"samples", r.samples},
                         {"worst_slack", r.worst_slack},
                         {"holds", r.holds}});
    }
    info["m"] = sc.m;
    info["holds"] = holds;
    info["faces"] = faces;
    return {"potential-bound", info, {}, holds ? Ok : NumericFailure};
}

// ---------------------------------------------------------------------------------------------------------------
// tailor

struct TailorOptions {
    std::vector<double> betas;
    std::optional<int> samples;
    bool strict = false;
};

std::vector<double> betas_of(const Project& p, const TailorOptions& o, bool grid)
{
    if (!o.betas.empty())
        return o.betas;
    return grid ? p.config.betas : std::vector<double>{p.config.beta};
}

Output tailor_boundary(const Project& p, const TailorOptions& o, unsigned seed)
{
    auto betas = betas_of(p, o, false);
    const int samples = o.samples.value_or(p.config.samples);
    TailoredSystem base = p.tailored(betas.front());
    auto rows = parallel_map<json>(betas.size(), [&](size_t k) {
        TailoredSystem sys = with_beta(base, betas[k]);
        std::mt19937 rng(seed + static_cast<unsigned>(k));
        std::normal_distribution<double> N;
        json pts = json::array();
        double max_dist = 0;
        for (int s = 0; s < samples; ++s) {
            std::vector<double> dir(static_cast<size_t>(sys.n));
            for (auto& x : dir)
                x = N(rng);
            auto u = ray_sample(sys, dir);
            double d = distance_to_tropical_boundary(sys, u);
            max_dist = std::max(max_dist, d);
            pts.push_back({{"u", u}, {"distance", d}});
        }
        std::vector<double> diag(static_cast<size_t>(sys.n), 1.0);
        auto ud = ray_sample(sys, diag);
        return json{{"beta", betas[k]},
                    {"K", sys.K},
                    {"max_distance", max_dist},
                    {"diagonal", {{"u", ud}, {"distance", distance_to_tropical_boundary(sys, ud)}}},
                    {"samples", pts}};
    });
    return {"tailor-boundary", {{"rows", rows}}, {}, Ok};
}

Output tailor_report(const Project& p, const TailorOptions& o, unsigned seed)
{
    auto betas = betas_of(p, o, true);
    TailoredSystem sys = p.tailored(betas.front());
    LimitReport r = convexity_and_limit_report(sys, betas, o.samples.value_or(p.config.samples), seed, o.strict);
    json rows = json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"beta", row.beta},
                        {"v_samples", row.v_samples},
                        {"min_eig", row.min_eig},
                        {"boundary_samples", row.boundary_samples},
                        {"max_dist", row.max_dist},
                        {"diag_dist", row.diag_dist}});
    return {"tailor-report",
            {{"rows", rows}, {"slope", r.slope}, {"min_eig", r.min_eig}, {"convex", r.convex}, {"rate_ok", r.rate_ok}},
            {},
            Ok};
}

Output tailor_defects(const Project& p, const TailorOptions& o, unsigned seed)
{
    auto betas = betas_of(p, o, true);
    const int samples = o.samples.value_or(50);
    TailoredSystem base = p.tailored(betas.front());
    auto ev = PotentialEvaluator::quadratic(p.nef().parent, Eigen::MatrixXd::Identity(p.rank, p.rank));
    auto reps = parallel_map<DefectReport>(betas.size(), [&](size_t k) {
        TailoredSystem s = with_beta(base, betas[k]);
        return analytic_defects(s, ev, positive_locus_samples(s, samples, seed + static_cast<unsigned>(k)));
    });
    json rows = json::array();
    std::vector<double> x, y;
    double min_det = 1;
    for (size_t k = 0; k < betas.size(); ++k) {
        const auto& r = reps[k];
        // e^{sqrt(beta)} times the ratio estimates the constant of the exponential envelope
        rows.push_back({{"beta", betas[k]},
                        {"samples", r.samples.size()},
                        {"max_ratio", r.max_ratio},
                        {"envelope_constant", r.max_ratio * std::exp(std::sqrt(betas[k]))},
                        {"min_det", r.min_det}});
        x.push_back(std::sqrt(betas[k]));
        y.push_back(std::log(r.max_ratio));
        min_det = std::min(min_det, r.min_det);
    }
    json slope = betas.size() >= 2 ? json(fit_slope(x, y)) : json(nullptr);
    return {"tailor-defects", {{"rows", rows}, {"slope", slope}, {"min_det", min_det}}, {}, Ok};
}

// ---------------------------------------------------------------------------------------------------------------
// dist

Output dist_affine(const Project& p, const std::vector<std::string>& xs, const std::string& polyhedron, unsigned seed)
{
    QVec x;
    for (const auto& s : xs)
        x.push_back(parse_rational(s));
    if (!polyhedron.empty()) {
        ParameterisedPolyhedron P = minimal_subcollection(parse_polyhedron(read_json(polyhedron)));
        require(static_cast<int>(x.size()) == P.n, ErrorKind::DimensionMismatch, "--x has the wrong length");
        LipschitzConstant k = lipschitz_constant(P, 1000, seed);
        Q d2 = euclidean_distance_sq(x, P);
        return {"dist-affine",
                {{"x", to_json(x)},
                 {"polyhedron", to_json(P)},
                 {"d_aff", to_json(affine_distance(x, P, true))},
                 {"d_squared", to_json(d2)},
                 {"projection", to_json(orthogonal_projection(x, P))},
                 {"K", k.K},
                 {"certified", k.certified}},
                {},
                Ok};
    }
    require(static_cast<int>(x.size()) == p.rank, ErrorKind::DimensionMismatch, "--x has the wrong length");
    NefPartition dual = p.dual();
    ParameterisedComplex sigma = tropical_parameterisation(tci_complex(p.factors(dual)));
    json cells = json::array();
    for (size_t i = 0; i < sigma.cells.size(); ++i)
        cells.push_back(to_json(affine_distance(x, sigma.cells[i])));
    return {"dist-affine", {{"x", to_json(x)}, {"d_aff", to_json(sigma.affine_distance(x))}, {"per_cell", cells}}, {},
            Ok};
}

int emit(const Globals& g, const Output& out)
{
    if (g.output_dir.empty()) {
        std::cout << out.result.dump(2) << "\n";
        return out.exit;
    }
    std::filesystem::create_directories(g.output_dir);
    auto write = [&](const std::string& name, const std::string& text) {
        auto path = std::filesystem::path(g.output_dir) / name;
        std::ofstream(path) << text;
        std::cout << path.string() << "\n";
    };
    write(out.name + ".json", out.result.dump(2) + "\n");
    for (const auto& [name, text] : out.files)
        write(name, text);
    return out.exit;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Combinatorics and numerics of Batyrev-Borisov complete intersections"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("-i,--input", g.input, "Project file (JSON)");
    app.add_option("-o,--output-dir", g.output_dir, "Write reports and OBJ files here instead of stdout");
    app.add_option("--seed", g.seed, "Overrides config.seed");
    app.add_option("--tol", g.tol, "Overrides config.tol");

    std::function<Output(const Project&)> action;
    auto sub = [&](CLI::App* parent, const char* name, const char* help, std::function<Output(const Project&)> f) {
        auto* c = parent->add_subcommand(name, help);
        c->fallthrough();
        c->callback([&action, f] { action = f; });
        return c;
    };
    auto group = [&](const char* name, const char* help) {
        auto* c = app.add_subcommand(name, help);
        c->require_subcommand(1);
        c->fallthrough();
        return c;
    };
    auto seed_of = [&](const Project& p) { return g.seed.value_or(p.config.seed); };
    auto tol_of = [&](const Project& p) { return g.tol.value_or(p.config.tol); };

    auto* nef = group("nef", "Nef partitions and duality");
    sub(nef, "dualize", "Dual nef partition and duality report", nef_dualize);
    sub(nef, "check", "Validate the partition; exit 2 with a report when invalid", nef_check);
    std::string blocks;
    sub(nef, "regroup", "Grouped and cogrouped partitions",
        [&](const Project& p) { return nef_regroup(p, blocks); })
        ->add_option("--blocks", blocks, "1-based blocks such as \"1;2\" or \"1,2\"")
        ->required();

    auto* trop = group("trop", "Tropical complete intersections");
    sub(trop, "cells", "All cells of the tropical complete intersection", trop_cells);
    sub(trop, "bounded", "Bounded complex of the running construction", trop_bounded);
    sub(trop, "unbounded", "Unbounded cells with recession directions", trop_unbounded);
    sub(trop, "homology", "Rational Betti numbers", trop_homology);
    sub(trop, "strata", "Compactification strata", trop_strata);

    auto* skel = group("skeleton", "Transversal-cone skeleton model");
    sub(skel, "model", "Charts, inclusions and OBJ export", [](const Project& p) { return skeleton_charts(p, true); });
    sub(skel, "charts", "Charts and inclusion table", [](const Project& p) { return skeleton_charts(p, false); });
    std::vector<double> mu, mtheta;
    auto* member = sub(skel, "member", "Membership of (u, theta)",
                       [&](const Project& p) { return skeleton_member(p, mu, mtheta, tol_of(p)); });
    member->add_option("--u", mu)->delimiter(',')->required()->allow_extra_args(false);
    member->add_option("--theta", mtheta)->delimiter(',')->required()->allow_extra_args(false);

    auto* smooth = group("smooth", "Smoothed star functions, projections and flows");
    SmoothOptions so;
    auto smooth_sub = [&](const char* name, const char* help, std::function<Output(const Project&)> f) {
        auto* c = sub(smooth, name, help, f);
        c->add_option("--eps", so.eps, "Mollification radius (config.smooth_eps)");
        return c;
    };
    smooth_sub("eval", "Smoothed defining functions at u", [&](const Project& p) { return smooth_eval(p, so); })
        ->add_option("--u", so.u)
        ->delimiter(',')
        ->required()
        ->allow_extra_args(false);
    auto* proj = smooth_sub("project", "Coherent projection of u to a cone",
                            [&](const Project& p) { return smooth_project(p, so); });
    proj->add_option("--u", so.u)->delimiter(',')->required()->allow_extra_args(false);
    proj->add_option("--cone", so.cone, "Ray indices")->delimiter(',')->required()->allow_extra_args(false);
    proj->add_flag("--equivariant", so.equivariant);
    auto* flow = smooth_sub("flow", "Scaling flow of u for times t", [&](const Project& p) { return smooth_flow(p, so); });
    flow->add_option("--u", so.u)->delimiter(',')->required()->allow_extra_args(false);
    flow->add_option("--t", so.t, "Per ray, or per block with --nef")->delimiter(',')->required()->allow_extra_args(false);
    flow->add_option("--eps2", so.eps2, "Ramp width of the smoothed field (0 for the PL field)");
    flow->add_option("--delta", so.delta, "Mollification radius of the smoothed field");
    flow->add_flag("--nef", so.nef);
    smooth_sub("diagnose", "Radial, commutator and slice diagnostics",
               [&](const Project& p) { return smooth_diagnose(p, so, seed_of(p)); })
        ->add_option("--samples", so.samples, "Commutator samples");

    auto* pot = group("potential", "Adapted potentials");
    PotentialOptions po;
    auto pot_sub = [&](const char* name, const char* help, std::function<Output(const Project&)> f) {
        auto* c = sub(pot, name, help, f);
        c->add_option("--polytope", po.polytope, "Polytope JSON (defaults to the nef parent)");
        c->add_option("--eps", po.eps, "eps1,eps2,eps3")->delimiter(',')->allow_extra_args(false);
        c->add_flag("--quadratic", po.quadratic, "Quadratic instead of tented potential");
        c->add_flag("--auto-tune", po.auto_tune, "Halve the eps until adapted");
        return c;
    };
    pot_sub("build", "Validated potential specification", [&](const Project& p) { return potential_build(p, po); });
    pot_sub("check", "Adaptedness report", [&](const Project& p) { return potential_check(p, po); });
    pot_sub("bound", "Adapted bound inequality per boundary face",
            [&](const Project& p) { return potential_bound(p, po, seed_of(p)); })
        ->add_option("--samples", po.samples);

    auto* tail = group("tailor", "Tailored polynomials");
    TailorOptions to;
    auto tail_sub = [&](const char* name, const char* help, std::function<Output(const Project&)> f) {
        auto* c = sub(tail, name, help, f);
        c->add_option("--beta", to.betas, "beta or a list such as 20,50,100")->delimiter(',')->allow_extra_args(false);
        c->add_option("--samples", to.samples);
        return c;
    };
    tail_sub("boundary", "Boundary samples and distances to the tropical boundary",
             [&](const Project& p) { return tailor_boundary(p, to, seed_of(p)); });
    tail_sub("report", "Convexity and convergence rate",
             [&](const Project& p) { return tailor_report(p, to, seed_of(p)); })
        ->add_flag("--strict", to.strict, "Fail on non-convexity or a rate out of band");
    tail_sub("defects", "Analytic defects on the positive locus",
             [&](const Project& p) { return tailor_defects(p, to, seed_of(p)); });

    auto* dist = group("dist", "Affine distances");
    std::vector<std::string> dx;
    std::string poly;
    auto* aff = sub(dist, "affine", "Affine distance to a polyhedron or to the tropical complex",
                    [&](const Project& p) { return dist_affine(p, dx, poly, seed_of(p)); });
    aff->add_option("--x", dx, "Rational coordinates")->delimiter(',')->required()->allow_extra_args(false);
    aff->add_option("--polyhedron", poly, "Polyhedron JSON {n, functionals}");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return ParseFailure;
    }
    try {
        Project p;
        if (!g.input.empty())
            p = load_project(g.input);
        else
            require(dist->parsed() && !poly.empty(), ErrorKind::ParseError, "--input is required");
        return emit(g, action(p));
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return NumericFailure;
    }
}
