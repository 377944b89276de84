#pragma once

#include "bbci/nefpart.hpp"
#include "bbci/subdiv.hpp"

#include <compare>
#include <vector>

namespace bbci {

/// Per-factor label (S_1, ..., S_r); indices point into the factor's height function.
struct CellLabel {
    std::vector<std::vector<int>> per_factor;
    auto operator<=>(const CellLabel&) const = default;
    bool operator==(const CellLabel&) const = default;
};

/**
 * Locally closed cell C_S. The closure is {eq u = eq_rhs, ineq u <= ineq_rhs}; the cell itself has the
 * inequalities strict.
 */
struct TropCell {
    CellLabel label;
    QMat eq;
    QVec eq_rhs;
    QMat ineq;
    QVec ineq_rhs;
    int dim = -1;
    bool bounded = false;

    bool contains(const QVec& u, bool relint) const;
};

struct TropicalCellComplex {
    int n = 0;
    std::vector<HeightFunction> factors;
    std::vector<TropCell> cells;              // sorted by label
    std::vector<std::pair<int, int>> poset;   // (a, b): cell a lies in the closure of cell b, a != b
    std::vector<TropCell> regions;            // complementary regions C_alpha (hypersurfaces only)
};

/// Builds the H-representation of C_S for a label over the given factors; dim and bounded are left unset.
TropCell tropical_cell(const std::vector<HeightFunction>& factors, const CellLabel& label);

TropicalCellComplex tropical_hypersurface(const HeightFunction& h);

RationalPolytope cayley_polytope(const std::vector<RationalPolytope>& polys);

struct MixedCell {
    CellLabel label;
    int dim = 0;        // dim(S_1 + ... + S_r)
    bool mixed = false; // every S_j positive-dimensional
    int dual_dim = 0;   // n - dim
};

/// Cells of the mixed subdivision induced by the Cayley lift of all factors, faces included.
std::vector<MixedCell> mixed_subdivision(const std::vector<HeightFunction>& factors);

/// Nonempty cells C_(S_1..S_r) over all tuples of positive-dimensional cells. Throws NotTransverse.
TropicalCellComplex tci_complex(const std::vector<HeightFunction>& factors);

/// Labels of tci and mixed cells agree with matching dimensions.
bool cayley_bijection(const TropicalCellComplex& tci, const std::vector<MixedCell>& mixed);

struct TransversalComplex {
    std::vector<QVec> points;                // lattice points of the dual polytope
    std::vector<int> factor_of;              // j with point in nabla_j, -1 for the origin
    std::vector<std::vector<int>> simplices; // transversal simplices, sorted
    std::vector<RationalPolytope> cells;     // T_1 + ... + T_r per simplex
    bool realization_ok = false;
};

struct BbciComplex {
    TropicalCellComplex bounded;             // factors are h restricted to each nabla_j
    TransversalComplex transversal;
    std::vector<int> simplex_of;             // transversal simplex index per bounded cell
    bool total_matches = false;              // C_Tbar of the total hypersurface equals the factor intersection
};

/// h is a centred height function on the lattice points of conv(nabla_1 u ... u nabla_r). Throws NotCentred.
BbciComplex bbci_bounded_complex(const NefPartition& nef_dual, const HeightFunction& h);

struct UnboundedCell {
    CellLabel label;
    int dim = 0;
    QVec recession;  // primitive vector in the relative interior of the recession cone
};

std::vector<UnboundedCell> bbci_unbounded_cells(const NefPartition& nef_dual, const HeightFunction& h);

/// Rational Betti numbers b_0..b_d of a polytopal complex given by its maximal cells. Throws NonRegularComplex.
std::vector<int> complex_homology(const std::vector<RationalPolytope>& cells);
/// Homology of the bounded cells.
std::vector<int> complex_homology(const TropicalCellComplex& complex);
std::vector<int> complex_homology(const TransversalComplex& complex);

struct Stratum {
    int cone = 0;  // index into the fan's cones
    bool nonempty = false;
    std::vector<RationalPolytope> faces;  // P^sigma_j
    std::vector<HeightFunction> heights;  // h_j restricted to P^sigma_j
};

/// Throws NotARefinement when a cone is not inside a normal cone of P = P_1 + ... + P_r.
std::vector<Stratum> compactification_strata(const std::vector<HeightFunction>& factors, const Fan& fan);

/// Throws NotSimplicial.
bool mpcs_check(const Fan& fan, int r);

struct BetaTuple {
    CellLabel label;
    Q K;
    double beta = 0;
};

struct BetaThreshold {
    double beta0 = 0;
    std::vector<BetaTuple> per_tuple;
};

/// moduli[j][i] = |c_alpha| for the i-th point of factor j. Throws NotTransverse, NotTriangulation.
BetaThreshold smoothness_beta_threshold(const std::vector<HeightFunction>& factors,
                                        const std::vector<QVec>& moduli);

}  // namespace bbci
