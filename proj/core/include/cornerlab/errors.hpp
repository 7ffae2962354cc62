#pragma once

#include <stdexcept>
#include <string>

namespace cornerlab {

// All recoverable failures are reported through typed exceptions so callers
// (and the CLI exit-code mapping) can tell bad input apart from runtime faults.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define CORNERLAB_DEFINE_ERROR(Name)                                        \
    struct Name : Error {                                                   \
        explicit Name(const std::string& msg) : Error(#Name ": " + msg) {}  \
    }

// geometry
CORNERLAB_DEFINE_ERROR(AngleSumViolation);
CORNERLAB_DEFINE_ERROR(GeometryMismatch);
CORNERLAB_DEFINE_ERROR(EpsilonOutOfRange);

// meshing
CORNERLAB_DEFINE_ERROR(MeshFailure);
CORNERLAB_DEFINE_ERROR(EmptyRegion);

// fem
CORNERLAB_DEFINE_ERROR(SolveFailure);
CORNERLAB_DEFINE_ERROR(SupportViolation);
CORNERLAB_DEFINE_ERROR(PointOutside);
CORNERLAB_DEFINE_ERROR(OrderUnavailable);

// spectral
CORNERLAB_DEFINE_ERROR(NonPositiveMu);
CORNERLAB_DEFINE_ERROR(PointOutsideSector);

// singular
CORNERLAB_DEFINE_ERROR(RhoOutOfRange);
CORNERLAB_DEFINE_ERROR(NotInSector);
CORNERLAB_DEFINE_ERROR(TruncationTooSmall);
CORNERLAB_DEFINE_ERROR(RadiusOutOfRange);
CORNERLAB_DEFINE_ERROR(OverlappingCutoffs);
CORNERLAB_DEFINE_ERROR(CornerMismatch);

// norms
CORNERLAB_DEFINE_ERROR(DivergentRequest);
CORNERLAB_DEFINE_ERROR(NonzeroTrace);

// experiments
CORNERLAB_DEFINE_ERROR(NonPositiveValue);
CORNERLAB_DEFINE_ERROR(SOutOfWindow);
CORNERLAB_DEFINE_ERROR(EmptyNullspace);

// cli / config
CORNERLAB_DEFINE_ERROR(ConfigError);

#undef CORNERLAB_DEFINE_ERROR

}  // namespace cornerlab
