#pragma once

#include "bbci/geom.hpp"

#include <string>
#include <vector>

namespace bbci {

struct NefPartition {
    RationalPolytope parent;
    std::vector<RationalPolytope> summands;
    int length() const { return static_cast<int>(summands.size()); }
};

/// Disjoint nonempty blocks of 0-based summand indices covering {0..r-1}.
struct IndexPartition {
    std::vector<std::vector<int>> blocks;
};

/// Parses the CLI block syntax with 1-based indices: "1;2" is {{1},{2}}, "1,2" is {{1,2}}.
IndexPartition parse_blocks(const std::string& text);

NefPartition validate_nef_partition(const std::vector<RationalPolytope>& summands);

/**
 * Dual nef partition: nabla_j is the hull of 0 and the points y of the dual polytope with psi_j(y) = 1.
 * That set is a union of faces of the dual, so its hull is spanned by the dual vertices with psi_j = 1.
 */
NefPartition dual_nef_partition(const NefPartition& nef);

struct DualityReport {
    bool nabla_reflexive = false;
    bool nabla_dual_is_hull_of_deltas = false;
    bool delta_dual_is_hull_of_nablas = false;
    std::vector<std::string> failures;
    bool ok() const { return failures.empty(); }
};

DualityReport verify_duality_theorem(const NefPartition& nef, const NefPartition& dual);

bool is_irreducible(const NefPartition& nef);
bool summand_cones_disjoint(const NefPartition& nef);

/// True iff the cones spanned by the two point sets meet only in 0.
bool cones_meet_trivially(const std::vector<QVec>& a, const std::vector<QVec>& b, int rank);

struct Regrouping {
    NefPartition grouped;
    NefPartition cogrouped;
    bool consistent = false;  // cogrouped equals dual of grouped
};

Regrouping regroup(const NefPartition& nef, const NefPartition& dual, const IndexPartition& part);

}  // namespace bbci
