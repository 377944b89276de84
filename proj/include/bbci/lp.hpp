#pragma once

#include "bbci/rational.hpp"

namespace bbci {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    Q value;
    QVec x;
};

/**
 * Exact rational LP: maximize c.x subject to A x <= b and E x = f, x free.
 * Two-phase dense simplex with Bland's rule, so it always terminates.
 */
LpResult lp_maximize(const QVec& c, const QMat& A, const QVec& b, const QMat& E = {}, const QVec& f = {});

/// Is {A x <= b, E x = f} nonempty?
bool lp_feasible(const QMat& A, const QVec& b, const QMat& E = {}, const QVec& f = {}, int n = -1);

/**
 * Point of {A x <= b, E x = f} with the selected rows strict, if any.
 * Maximises a common slack t (capped at 1) and checks t > 0.
 */
std::optional<QVec> lp_strict_point(const QMat& A, const QVec& b, const std::vector<bool>& strict, const QMat& E,
                                    const QVec& f, int n);

}  // namespace bbci
