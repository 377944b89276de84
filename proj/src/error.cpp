#include "bbci/error.hpp"

namespace bbci {

std::string_view kind_name(ErrorKind k)
{
    switch (k) {
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::Unbounded: return "Unbounded";
    case ErrorKind::OriginNotInterior: return "OriginNotInterior";
    case ErrorKind::NotFullDimensional: return "NotFullDimensional";
    case ErrorKind::DegenerateHull: return "DegenerateHull";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::BadPartition: return "BadPartition";
    case ErrorKind::SumNotReflexive: return "SumNotReflexive";
    case ErrorKind::SummandMissingOrigin: return "SummandMissingOrigin";
    case ErrorKind::SummandNotLattice: return "SummandNotLattice";
    case ErrorKind::NotTriangulation: return "NotTriangulation";
    case ErrorKind::NotSimplicial: return "NotSimplicial";
    case ErrorKind::NonRegularComplex: return "NonRegularComplex";
    case ErrorKind::NotTransverse: return "NotTransverse";
    case ErrorKind::NotARefinement: return "NotARefinement";
    case ErrorKind::EmptyStratum: return "EmptyStratum";
    case ErrorKind::EmptyIntersection: return "EmptyIntersection";
    case ErrorKind::ConeNotInFan: return "ConeNotInFan";
    case ErrorKind::NotCentred: return "NotCentred";
    case ErrorKind::NotMinimal: return "NotMinimal";
    case ErrorKind::NotInRelativeInterior: return "NotInRelativeInterior";
    case ErrorKind::OutsideNeighbourhood: return "OutsideNeighbourhood";
    case ErrorKind::OutsideStar: return "OutsideStar";
    case ErrorKind::NotSimplePolytope: return "NotSimplePolytope";
    case ErrorKind::SingularChainSystem: return "SingularChainSystem";
    case ErrorKind::SampleOffLocus: return "SampleOffLocus";
    case ErrorKind::SignConventionViolated: return "SignConventionViolated";
    case ErrorKind::ContextMissing: return "ContextMissing";
    case ErrorKind::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorKind::DiagnosticFailed: return "DiagnosticFailed";
    case ErrorKind::NoBracket: return "NoBracket";
    case ErrorKind::NoRoot: return "NoRoot";
    case ErrorKind::RootBracketFailed: return "RootBracketFailed";
    case ErrorKind::NewtonDiverged: return "NewtonDiverged";
    case ErrorKind::StepLimitExceeded: return "StepLimitExceeded";
    case ErrorKind::DeltaTooLarge: return "DeltaTooLarge";
    case ErrorKind::ConvexityFailed: return "ConvexityFailed";
    case ErrorKind::ConvexityViolated: return "ConvexityViolated";
    case ErrorKind::NonConvexDetected: return "NonConvexDetected";
    case ErrorKind::NotConvexForThisEpsilon: return "NotConvexForThisEpsilon";
    case ErrorKind::MinimizerNotInterior: return "MinimizerNotInterior";
    case ErrorKind::MinimizerOnBoundary: return "MinimizerOnBoundary";
    case ErrorKind::MomentSolveFailed: return "MomentSolveFailed";
    case ErrorKind::NegativeWeight: return "NegativeWeight";
    case ErrorKind::RateOutOfBand: return "RateOutOfBand";
    case ErrorKind::InvalidProject: return "InvalidProject";
    }
    return "Unknown";
}

}  // namespace bbci
