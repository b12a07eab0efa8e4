// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>

namespace ofo {

// Base type for every error raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DisconnectedGraph : Error { using Error::Error; };
struct SelfLoop : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };
struct NotATree : Error { using Error::Error; };
struct UnstableDiscretization : Error { using Error::Error; };
struct NotSettled : Error { using Error::Error; };
struct SingularSystemMatrix : Error { using Error::Error; };
struct UnboundedRegion : Error { using Error::Error; };
struct StepSizeConditionViolated : Error { using Error::Error; };
struct RequiresStrongConvexityAboveOne : Error { using Error::Error; };
struct EpsilonTooLarge : Error { using Error::Error; };
struct FixedPointDiverged : Error { using Error::Error; };
struct UnboundedConstraintSet : Error { using Error::Error; };
struct SolverStalled : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace ofo
