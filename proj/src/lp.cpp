#include "bbci/lp.hpp"

#include "bbci/error.hpp"

namespace bbci {

namespace {

// Tableau over variables y >= 0 with rows M y = r (r >= 0) and a basis per row.
struct Tableau {
    QMat t;  // rows 0..m-1 constraints, last column rhs
    std::vector<int> basis;
    int ncols = 0;

    void pivot(int row, int col)
    {
        auto& pr = t[static_cast<size_t>(row)];
        Q inv = 1 / pr[static_cast<size_t>(col)];
        for (auto& e : pr)
            e *= inv;
        for (size_t i = 0; i < t.size(); ++i) {
            if (static_cast<int>(i) == row)
                continue;
            Q fct = t[i][static_cast<size_t>(col)];
            if (fct == 0)
                continue;
            for (size_t j = 0; j < pr.size(); ++j)
                if (pr[j] != 0)
                    t[i][j] -= fct * pr[j];
        }
        basis[static_cast<size_t>(row)] = col;
    }

    // Maximize obj.y over allowed columns; returns false when unbounded.
    bool optimize(const QVec& obj, const std::vector<bool>& allowed)
    {
        const size_t m = t.size();
        for (;;) {
            // reduced cost d_j = obj_j - sum_i obj_{B_i} t_ij
            int enter = -1;
            for (int j = 0; j < ncols; ++j) {
                if (!allowed[static_cast<size_t>(j)])
                    continue;
                bool in_basis = false;
                for (int b : basis)
                    if (b == j) {
                        in_basis = true;
                        break;
                    }
                if (in_basis)
                    continue;
                Q d = obj[static_cast<size_t>(j)];
                for (size_t i = 0; i < m; ++i)
                    if (t[i][static_cast<size_t>(j)] != 0)
                        d -= obj[static_cast<size_t>(basis[i])] * t[i][static_cast<size_t>(j)];
                if (d > 0) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0)
                return true;
            int leave = -1;
            Q best;
            for (size_t i = 0; i < m; ++i) {
                const Q& a = t[i][static_cast<size_t>(enter)];
                if (a <= 0)
                    continue;
                Q ratio = t[i][static_cast<size_t>(ncols)] / a;
                if (leave < 0 || ratio < best ||
                    (ratio == best && basis[i] < basis[static_cast<size_t>(leave)])) {
                    leave = static_cast<int>(i);
                    best = ratio;
                }
            }
            if (leave < 0)
                return false;
            pivot(leave, enter);
        }
    }
};

LpResult solve_free(const QVec& c, const QMat& A, const QVec& b, int n)
{
    // x = xp - xm, slack s; rows A xp - A xm + s = b.
    const int m = static_cast<int>(A.size());
    int nart = 0;
    for (int i = 0; i < m; ++i)
        if (b[static_cast<size_t>(i)] < 0)
            ++nart;
    const int nvar = 2 * n + m;
    Tableau tb;
    tb.ncols = nvar + nart;
    tb.t.assign(static_cast<size_t>(m), QVec(static_cast<size_t>(tb.ncols + 1), Q(0)));
    tb.basis.assign(static_cast<size_t>(m), -1);
    int art = nvar;
    for (int i = 0; i < m; ++i) {
        auto& row = tb.t[static_cast<size_t>(i)];
        const Q sgn = b[static_cast<size_t>(i)] < 0 ? -1 : 1;
        for (int j = 0; j < n; ++j) {
            row[static_cast<size_t>(j)] = sgn * A[static_cast<size_t>(i)][static_cast<size_t>(j)];
            row[static_cast<size_t>(n + j)] = -sgn * A[static_cast<size_t>(i)][static_cast<size_t>(j)];
        }
        row[static_cast<size_t>(2 * n + i)] = sgn;
        row[static_cast<size_t>(tb.ncols)] = sgn * b[static_cast<size_t>(i)];
        if (sgn > 0) {
            tb.basis[static_cast<size_t>(i)] = 2 * n + i;
        } else {
            row[static_cast<size_t>(art)] = 1;
            tb.basis[static_cast<size_t>(i)] = art++;
        }
    }
    std::vector<bool> allowed(static_cast<size_t>(tb.ncols), true);
    if (nart > 0) {
        QVec obj1(static_cast<size_t>(tb.ncols), Q(0));
        for (int j = nvar; j < tb.ncols; ++j)
            obj1[static_cast<size_t>(j)] = -1;
        tb.optimize(obj1, allowed);
        Q phase1 = 0;
        for (size_t i = 0; i < tb.t.size(); ++i)
            if (tb.basis[i] >= nvar)
                phase1 += tb.t[i][static_cast<size_t>(tb.ncols)];
        if (phase1 > 0)
            return {LpStatus::Infeasible, 0, {}};
        // drive remaining artificials out of the basis
        for (size_t i = 0; i < tb.t.size(); ++i) {
            if (tb.basis[i] < nvar)
                continue;
            for (int j = 0; j < nvar; ++j)
                if (tb.t[i][static_cast<size_t>(j)] != 0) {
                    tb.pivot(static_cast<int>(i), j);
                    break;
                }
        }
        for (int j = nvar; j < tb.ncols; ++j)
            allowed[static_cast<size_t>(j)] = false;
    }
    QVec obj(static_cast<size_t>(tb.ncols), Q(0));
    for (int j = 0; j < n; ++j) {
        obj[static_cast<size_t>(j)] = c[static_cast<size_t>(j)];
        obj[static_cast<size_t>(n + j)] = -c[static_cast<size_t>(j)];
    }
    if (!tb.optimize(obj, allowed))
        return {LpStatus::Unbounded, 0, {}};
    QVec y(static_cast<size_t>(tb.ncols), Q(0));
    for (size_t i = 0; i < tb.t.size(); ++i)
        if (tb.basis[i] >= 0)
            y[static_cast<size_t>(tb.basis[i])] = tb.t[i][static_cast<size_t>(tb.ncols)];
    QVec x(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j)
        x[static_cast<size_t>(j)] = y[static_cast<size_t>(j)] - y[static_cast<size_t>(n + j)];
    return {LpStatus::Optimal, dot(c, x), x};
}

}  // namespace

LpResult lp_maximize(const QVec& c, const QMat& A, const QVec& b, const QMat& E, const QVec& f)
{
    const int n = static_cast<int>(c.size());
    if (E.empty())
        return solve_free(c, A, b, n);
    auto x0 = solve(E, f, n);
    if (!x0)
        return {LpStatus::Infeasible, 0, {}};
    QMat N = nullspace(E, n);  // rows are basis vectors
    const int k = static_cast<int>(N.size());
    if (k == 0) {
        for (size_t i = 0; i < A.size(); ++i)
            if (dot(A[i], *x0) > b[i])
                return {LpStatus::Infeasible, 0, {}};
        return {LpStatus::Optimal, dot(c, *x0), *x0};
    }
    QMat A2;
    QVec b2;
    for (size_t i = 0; i < A.size(); ++i) {
        QVec row(static_cast<size_t>(k));
        for (int j = 0; j < k; ++j)
            row[static_cast<size_t>(j)] = dot(A[i], N[static_cast<size_t>(j)]);
        A2.push_back(std::move(row));
        b2.push_back(b[i] - dot(A[i], *x0));
    }
    QVec c2(static_cast<size_t>(k));
    for (int j = 0; j < k; ++j)
        c2[static_cast<size_t>(j)] = dot(c, N[static_cast<size_t>(j)]);
    LpResult r = solve_free(c2, A2, b2, k);
    if (r.status != LpStatus::Optimal)
        return r;
    QVec x = *x0;
    for (int j = 0; j < k; ++j)
        x = x + r.x[static_cast<size_t>(j)] * N[static_cast<size_t>(j)];
    return {LpStatus::Optimal, dot(c, x), x};
}

bool lp_feasible(const QMat& A, const QVec& b, const QMat& E, const QVec& f, int n)
{
    if (n < 0)
        n = static_cast<int>(!A.empty() ? A[0].size() : (!E.empty() ? E[0].size() : 0));
    return lp_maximize(zeros(n), A, b, E, f).status != LpStatus::Infeasible;
}

std::optional<QVec> lp_strict_point(const QMat& A, const QVec& b, const std::vector<bool>& strict, const QMat& E,
                                    const QVec& f, int n)
{
    // variables (x, t): A_i x + [strict_i] t <= b_i, t <= 1; maximize t
    QMat A2;
    QVec b2;
    for (size_t i = 0; i < A.size(); ++i) {
        QVec row = A[i];
        row.push_back(strict[i] ? Q(1) : Q(0));
        A2.push_back(std::move(row));
        b2.push_back(b[i]);
    }
    QVec cap = zeros(n + 1);
    cap[static_cast<size_t>(n)] = 1;
    A2.push_back(cap);
    b2.push_back(1);
    QMat E2;
    for (const auto& row : E) {
        QVec r = row;
        r.push_back(0);
        E2.push_back(std::move(r));
    }
    LpResult r = lp_maximize(cap, A2, b2, E2, f);
    if (r.status != LpStatus::Optimal || r.value <= 0)
        return std::nullopt;
    r.x.pop_back();
    return r.x;
}

}  // namespace bbci
