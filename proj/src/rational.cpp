#include "bbci/rational.hpp"

#include "bbci/error.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace bbci {

Q parse_rational(const std::string& raw)
{
    std::string s;
    for (char c : raw)
        if (c != ' ')
            s.push_back(c);
    if (s.empty())
        fail(ErrorKind::ParseError, "empty rational");
    try {
        auto dot_pos = s.find('.');
        if (dot_pos != std::string::npos && s.find('/') == std::string::npos) {
            std::string digits = s.substr(0, dot_pos) + s.substr(dot_pos + 1);
            int scale = static_cast<int>(s.size() - dot_pos - 1);
            Q q(Z(digits, 10));
            Z den;
            mpz_ui_pow_ui(den.get_mpz_t(), 10, static_cast<unsigned long>(scale));
            q /= den;
            q.canonicalize();
            return q;
        }
        Q q(s, 10);
        if (q.get_den() == 0)
            fail(ErrorKind::ParseError, "zero denominator in '" + raw + "'");
        q.canonicalize();
        return q;
    } catch (const std::invalid_argument&) {
        fail(ErrorKind::ParseError, "not a rational: '" + raw + "'");
    }
}

Q qfrac(long a, long b)
{
    Q q(a, b);
    q.canonicalize();
    return q;
}

std::string to_string(const Q& q) { return q.get_str(); }

std::string to_string(const QVec& v)
{
    std::ostringstream os;
    os << '(';
    for (size_t i = 0; i < v.size(); ++i)
        os << (i ? "," : "") << v[i].get_str();
    os << ')';
    return os.str();
}

QVec zeros(int n) { return QVec(static_cast<size_t>(n), Q(0)); }

QVec unit(int n, int i)
{
    QVec v = zeros(n);
    v[static_cast<size_t>(i)] = 1;
    return v;
}

QVec operator+(const QVec& a, const QVec& b)
{
    QVec r(a.size());
    for (size_t i = 0; i < a.size(); ++i)
        r[i] = a[i] + b[i];
    return r;
}

QVec operator-(const QVec& a, const QVec& b)
{
    QVec r(a.size());
    for (size_t i = 0; i < a.size(); ++i)
        r[i] = a[i] - b[i];
    return r;
}

QVec operator-(const QVec& a)
{
    QVec r(a.size());
    for (size_t i = 0; i < a.size(); ++i)
        r[i] = -a[i];
    return r;
}

QVec operator*(const Q& s, const QVec& a)
{
    QVec r(a.size());
    for (size_t i = 0; i < a.size(); ++i)
        r[i] = s * a[i];
    return r;
}

Q dot(const QVec& a, const QVec& b)
{
    Q s = 0;
    for (size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

bool is_zero(const QVec& v)
{
    return std::all_of(v.begin(), v.end(), [](const Q& q) { return q == 0; });
}

bool is_integral(const QVec& v)
{
    return std::all_of(v.begin(), v.end(), [](const Q& q) { return q.get_den() == 1; });
}

QVec to_qvec(const std::vector<long>& v)
{
    QVec r;
    r.reserve(v.size());
    for (long x : v)
        r.emplace_back(x);
    return r;
}

std::vector<double> to_double(const QVec& v)
{
    std::vector<double> r;
    r.reserve(v.size());
    for (const Q& q : v)
        r.push_back(q.get_d());
    return r;
}

QMat transpose(const QMat& a)
{
    if (a.empty())
        return {};
    QMat t(a[0].size(), QVec(a.size()));
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < a[0].size(); ++j)
            t[j][i] = a[i][j];
    return t;
}

QVec mat_vec(const QMat& a, const QVec& x)
{
    QVec r;
    r.reserve(a.size());
    for (const auto& row : a)
        r.push_back(dot(row, x));
    return r;
}

QVec primitive(const QVec& v)
{
    Z l = 1;
    for (const Q& q : v)
        l = lcm(l, q.get_den());
    Z g = 0;
    ZVec z;
    z.reserve(v.size());
    for (const Q& q : v) {
        Z e = q.get_num() * (l / q.get_den());
        g = gcd(g, e);
        z.push_back(e);
    }
    QVec r;
    r.reserve(v.size());
    for (const Z& e : z)
        r.emplace_back(g == 0 ? Z(0) : Z(e / g));
    return r;
}

Rref rref(QMat a, int ncols)
{
    Rref out;
    if (a.empty()) {
        return out;
    }
    const int m = static_cast<int>(a.size());
    const int n = ncols >= 0 ? ncols : static_cast<int>(a[0].size());
    int r = 0;
    for (int c = 0; c < n && r < m; ++c) {
        int p = -1;
        for (int i = r; i < m; ++i)
            if (a[i][c] != 0) {
                p = i;
                break;
            }
        if (p < 0)
            continue;
        std::swap(a[r], a[p]);
        Q inv = 1 / a[r][c];
        for (auto& e : a[r])
            e *= inv;
        for (int i = 0; i < m; ++i) {
            if (i == r || a[i][c] == 0)
                continue;
            Q f = a[i][c];
            for (size_t j = 0; j < a[i].size(); ++j)
                a[i][j] -= f * a[r][j];
        }
        out.pivots.push_back(c);
        ++r;
    }
    a.resize(static_cast<size_t>(r));
    out.m = std::move(a);
    return out;
}

int rank(const QMat& a, int ncols) { return static_cast<int>(rref(a, ncols).pivots.size()); }

QMat nullspace(const QMat& a, int ncols)
{
    Rref r = rref(a, ncols);
    std::vector<bool> is_pivot(static_cast<size_t>(ncols), false);
    for (int p : r.pivots)
        is_pivot[static_cast<size_t>(p)] = true;
    QMat basis;
    for (int f = 0; f < ncols; ++f) {
        if (is_pivot[static_cast<size_t>(f)])
            continue;
        QVec v = zeros(ncols);
        v[static_cast<size_t>(f)] = 1;
        for (size_t i = 0; i < r.pivots.size(); ++i)
            v[static_cast<size_t>(r.pivots[i])] = -r.m[i][static_cast<size_t>(f)];
        basis.push_back(std::move(v));
    }
    return basis;
}

std::optional<QVec> solve(const QMat& a, const QVec& b, int ncols)
{
    QMat aug = a;
    for (size_t i = 0; i < aug.size(); ++i)
        aug[i].push_back(b[i]);
    Rref r = rref(aug, ncols + 1);
    QVec x = zeros(ncols);
    for (size_t i = 0; i < r.pivots.size(); ++i) {
        if (r.pivots[i] == ncols)
            return std::nullopt;
        x[static_cast<size_t>(r.pivots[i])] = r.m[i][static_cast<size_t>(ncols)];
    }
    return x;
}

Q det(QMat a)
{
    const size_t n = a.size();
    Q d = 1;
    for (size_t c = 0; c < n; ++c) {
        size_t p = c;
        while (p < n && a[p][c] == 0)
            ++p;
        if (p == n)
            return 0;
        if (p != c) {
            std::swap(a[p], a[c]);
            d = -d;
        }
        d *= a[c][c];
        for (size_t i = c + 1; i < n; ++i) {
            if (a[i][c] == 0)
                continue;
            Q f = a[i][c] / a[c][c];
            for (size_t j = c; j < n; ++j)
                a[i][j] -= f * a[c][j];
        }
    }
    return d;
}

ZMat hnf(ZMat a)
{
    if (a.empty())
        return a;
    const size_t m = a.size(), n = a[0].size();
    size_t r = 0;
    for (size_t c = 0; c < n && r < m; ++c) {
        // Euclid on column c among rows r..m-1
        for (;;) {
            size_t best = m;
            for (size_t i = r; i < m; ++i)
                if (a[i][c] != 0 && (best == m || abs(a[i][c]) < abs(a[best][c])))
                    best = i;
            if (best == m)
                break;
            std::swap(a[r], a[best]);
            bool done = true;
            for (size_t i = r + 1; i < m; ++i) {
                if (a[i][c] == 0)
                    continue;
                Z f;
                mpz_fdiv_q(f.get_mpz_t(), a[i][c].get_mpz_t(), a[r][c].get_mpz_t());
                for (size_t j = c; j < n; ++j)
                    a[i][j] -= f * a[r][j];
                if (a[i][c] != 0)
                    done = false;
            }
            if (done)
                break;
        }
        if (r < m && a[r][c] != 0) {
            if (a[r][c] < 0)
                for (auto& e : a[r])
                    e = -e;
            for (size_t i = 0; i < r; ++i) {
                Z f;
                mpz_fdiv_q(f.get_mpz_t(), a[i][c].get_mpz_t(), a[r][c].get_mpz_t());
                if (f != 0)
                    for (size_t j = c; j < n; ++j)
                        a[i][j] -= f * a[r][j];
            }
            ++r;
        }
    }
    a.resize(r);
    return a;
}

ZVec to_zvec(const QVec& v)
{
    ZVec z;
    z.reserve(v.size());
    for (const Q& q : v)
        z.push_back(q.get_num() / q.get_den());
    return z;
}

QVec to_qvec(const ZVec& v)
{
    QVec q;
    q.reserve(v.size());
    for (const Z& z : v)
        q.emplace_back(z);
    return q;
}

namespace {

// Column-style reduction a V = [H | 0] with V unimodular; returns (H columns count, V).
std::pair<size_t, ZMat> column_reduce(ZMat a, size_t n)
{
    const size_t m = a.size();
    ZMat v(n, ZVec(n, 0));
    for (size_t i = 0; i < n; ++i)
        v[i][i] = 1;
    auto col_op = [&](size_t dst, size_t src, const Z& f) {
        for (size_t i = 0; i < m; ++i)
            a[i][dst] -= f * a[i][src];
        for (size_t i = 0; i < n; ++i)
            v[i][dst] -= f * v[i][src];
    };
    auto col_swap = [&](size_t x, size_t y) {
        for (size_t i = 0; i < m; ++i)
            std::swap(a[i][x], a[i][y]);
        for (size_t i = 0; i < n; ++i)
            std::swap(v[i][x], v[i][y]);
    };
    size_t c = 0;
    for (size_t r = 0; r < m && c < n; ++r) {
        for (;;) {
            size_t best = n;
            for (size_t j = c; j < n; ++j)
                if (a[r][j] != 0 && (best == n || abs(a[r][j]) < abs(a[r][best])))
                    best = j;
            if (best == n)
                break;
            col_swap(c, best);
            bool done = true;
            for (size_t j = c + 1; j < n; ++j) {
                if (a[r][j] == 0)
                    continue;
                Z f;
                mpz_fdiv_q(f.get_mpz_t(), a[r][j].get_mpz_t(), a[r][c].get_mpz_t());
                col_op(j, c, f);
                if (a[r][j] != 0)
                    done = false;
            }
            if (done) {
                ++c;
                break;
            }
        }
    }
    return {c, v};
}

ZMat integer_rows(const QMat& a, size_t n)
{
    ZMat z;
    for (const auto& row : a) {
        QVec p = primitive(QVec(row.begin(), row.begin() + static_cast<long>(n)));
        z.push_back(to_zvec(p));
    }
    return z;
}

}  // namespace

ZMat integer_kernel(const QMat& a, int ncols)
{
    const size_t n = static_cast<size_t>(ncols);
    ZMat za = integer_rows(a, n);
    if (za.empty()) {
        ZMat id(n, ZVec(n, 0));
        for (size_t i = 0; i < n; ++i)
            id[i][i] = 1;
        return id;
    }
    auto [c, v] = column_reduce(za, n);
    ZMat ker;
    for (size_t j = c; j < n; ++j) {
        ZVec col(n);
        for (size_t i = 0; i < n; ++i)
            col[i] = v[i][j];
        ker.push_back(col);
    }
    return hnf(ker);
}

Z maximal_minor_gcd(const ZMat& a)
{
    if (a.empty())
        return 1;
    const size_t m = a.size(), n = a[0].size();
    ZMat work = a;
    ZMat h = work;
    auto [c, v] = column_reduce(work, n);
    if (c < m)
        return 0;
    // After reduction, recompute a V and take |det| of the leading m x m block.
    QMat block(m, QVec(m));
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < m; ++j) {
            Z s = 0;
            for (size_t k = 0; k < n; ++k)
                s += h[i][k] * v[k][j];
            block[i][j] = s;
        }
    Q d = det(block);
    return abs(d.get_num());
}

}  // namespace bbci
