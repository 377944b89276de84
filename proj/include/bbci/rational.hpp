#pragma once

#include <gmpxx.h>

#include <optional>
#include <string>
#include <vector>

namespace bbci {

using Q = mpq_class;
using Z = mpz_class;
using QVec = std::vector<Q>;
using QMat = std::vector<QVec>;
using ZVec = std::vector<Z>;
using ZMat = std::vector<ZVec>;

/// Parses "p/q", "p" or a decimal such as "-0.25" into a canonical rational.
Q parse_rational(const std::string& s);
/// Canonical a/b (the two-argument mpq_class constructor does not reduce).
Q qfrac(long a, long b);
std::string to_string(const Q& q);
std::string to_string(const QVec& v);

QVec zeros(int n);
QVec unit(int n, int i);
QVec operator+(const QVec& a, const QVec& b);
QVec operator-(const QVec& a, const QVec& b);
QVec operator-(const QVec& a);
QVec operator*(const Q& s, const QVec& a);
Q dot(const QVec& a, const QVec& b);
bool is_zero(const QVec& v);
bool is_integral(const QVec& v);
QVec to_qvec(const std::vector<long>& v);
std::vector<double> to_double(const QVec& v);
QMat transpose(const QMat& a);
QVec mat_vec(const QMat& a, const QVec& x);

/// Smallest positive integer multiple of v with coprime entries (sign kept).
QVec primitive(const QVec& v);

struct Rref {
    QMat m;
    std::vector<int> pivots;
};

Rref rref(QMat a, int ncols = -1);
int rank(const QMat& a, int ncols = -1);

/// Basis of {x : a x = 0} read off the reduced row echelon form (canonical).
QMat nullspace(const QMat& a, int ncols);

/// Some solution of a x = b, or nullopt when inconsistent.
std::optional<QVec> solve(const QMat& a, const QVec& b, int ncols);

Q det(QMat a);

/// Row Hermite normal form of an integer matrix; zero rows dropped.
ZMat hnf(ZMat a);

/// Lattice basis of {x in Z^n : a x = 0}, returned in row HNF.
ZMat integer_kernel(const QMat& a, int ncols);

/// gcd of the maximal minors of an integer matrix of full row rank, 0 if rank deficient.
Z maximal_minor_gcd(const ZMat& a);

ZVec to_zvec(const QVec& v);
QVec to_qvec(const ZVec& v);

}  // namespace bbci
