// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace slao {

// Base class of every error thrown by this library. `kind()` gives the
// stable type name used in CSV status columns and CLI diagnostics.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
    virtual const char* kind() const { return "Error"; }
};

#define SLAO_DEFINE_ERROR(NAME)                                 \
    struct NAME : Error {                                       \
        using Error::Error;                                     \
        const char* kind() const override { return #NAME; }     \
    }

SLAO_DEFINE_ERROR(DimensionError);
SLAO_DEFINE_ERROR(RankDeficient);
SLAO_DEFINE_ERROR(ZeroVector);
SLAO_DEFINE_ERROR(IndexError);
SLAO_DEFINE_ERROR(SequenceError);
SLAO_DEFINE_ERROR(EmptyState);
SLAO_DEFINE_ERROR(DivergenceError);
SLAO_DEFINE_ERROR(ShapeError);
SLAO_DEFINE_ERROR(ShapeMismatch);
SLAO_DEFINE_ERROR(ZeroUpdate);
SLAO_DEFINE_ERROR(PreconditionError);
SLAO_DEFINE_ERROR(MissingOptimum);
SLAO_DEFINE_ERROR(IncompleteReport);
SLAO_DEFINE_ERROR(UndefinedMetric);
SLAO_DEFINE_ERROR(NeedTwoOrders);
SLAO_DEFINE_ERROR(ParseError);
SLAO_DEFINE_ERROR(ValidationError);
SLAO_DEFINE_ERROR(IoError);
SLAO_DEFINE_ERROR(FormatError);
SLAO_DEFINE_ERROR(CorruptionError);

#undef SLAO_DEFINE_ERROR

}  // namespace slao
