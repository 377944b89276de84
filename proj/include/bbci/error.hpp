#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bbci {

enum class ErrorKind {
    EmptyInput,
    DimensionMismatch,
    Unbounded,
    OriginNotInterior,
    NotFullDimensional,
    DegenerateHull,
    ParseError,
    BadPartition,
    SumNotReflexive,
    SummandMissingOrigin,
    SummandNotLattice,
    NotTriangulation,
    NotSimplicial,
    NonRegularComplex,
    NotTransverse,
    NotARefinement,
    EmptyStratum,
    EmptyIntersection,
    ConeNotInFan,
    NotCentred,
    NotMinimal,
    NotInRelativeInterior,
    OutsideNeighbourhood,
    OutsideStar,
    NotSimplePolytope,
    SingularChainSystem,
    SampleOffLocus,
    SignConventionViolated,
    ContextMissing,
    QuadratureNotConverged,
    DiagnosticFailed,
    NoBracket,
    NoRoot,
    RootBracketFailed,
    NewtonDiverged,
    StepLimitExceeded,
    DeltaTooLarge,
    ConvexityFailed,
    ConvexityViolated,
    NonConvexDetected,
    NotConvexForThisEpsilon,
    MinimizerNotInterior,
    MinimizerOnBoundary,
    MomentSolveFailed,
    NegativeWeight,
    RateOutOfBand,
    InvalidProject,
};

std::string_view kind_name(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(kind_name(kind)) + ": " + what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what)
{
    if (!ok)
        fail(kind, what);
}

}  // namespace bbci
