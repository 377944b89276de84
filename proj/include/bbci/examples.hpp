#pragma once

#include "bbci/geom.hpp"
#include "bbci/nefpart.hpp"
#include "bbci/subdiv.hpp"

namespace bbci::examples {

/// Length-two nef partition of the cube conv(+-e1+-e2+-e3).
NefPartition running_nef();

/// Centred height on the lattice points of the octahedron conv(nabla_1 u nabla_2): 0 at the origin, 1 elsewhere.
HeightFunction running_height();

/// Fan of the first Hirzebruch surface with rays (0,1),(1,1),(0,-1),(-1,0).
Fan hirzebruch_fan();

}  // namespace bbci::examples
