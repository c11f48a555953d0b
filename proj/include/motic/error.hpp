#pragma once

#include <stdexcept>
#include <string>

namespace motic {

// Base type for everything this library throws.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define MOTIC_ERROR_TYPE(Name)                                     \
    class Name : public Error {                                    \
    public:                                                        \
        explicit Name(const std::string& what) : Error(what) {}    \
    }

MOTIC_ERROR_TYPE(ZeroNormError);         // vector norm at or below the 1e-12 floor
MOTIC_ERROR_TYPE(NonFiniteError);        // NaN/inf where a finite value is required
MOTIC_ERROR_TYPE(ShapeMismatchError);    // incompatible dimensions between operands
MOTIC_ERROR_TYPE(BadMomentumError);      // momentum coefficient outside [0, 1]
MOTIC_ERROR_TYPE(BatchTooLargeError);    // queue push batch larger than, or not a divisor of, capacity
MOTIC_ERROR_TYPE(NormViolationError);    // queue key not unit-norm
MOTIC_ERROR_TYPE(IndexOutOfRangeError);  // transform or slot index out of range
MOTIC_ERROR_TYPE(LabelOutOfRangeError);  // class/virtual label outside the legal range
MOTIC_ERROR_TYPE(EmptyClassError);       // prototype requested over an empty sample set
MOTIC_ERROR_TYPE(EmptyBankError);        // classification against an empty prototype bank
MOTIC_ERROR_TYPE(MissingFineGrainedError); // bank lacks a (session, class, transform) entry
MOTIC_ERROR_TYPE(SessionOrderError);     // incremental sessions ingested out of order
MOTIC_ERROR_TYPE(ConfigError);           // invalid or inconsistent configuration
MOTIC_ERROR_TYPE(NonFiniteLossError);    // training aborted on a NaN/inf loss
MOTIC_ERROR_TYPE(SeparationError);       // synthetic class means could not be separated
MOTIC_ERROR_TYPE(CoverageGapError);      // evaluation over classes missing from the bank
MOTIC_ERROR_TYPE(EmptyInputError);       // aggregate over zero rows
MOTIC_ERROR_TYPE(IoError);               // checkpoint/bank/file problems

#undef MOTIC_ERROR_TYPE

}  // namespace motic
