#pragma once

#include <stdexcept>

namespace srs {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// allocation
struct AllZeroWeights : Error { using Error::Error; };
struct EmptyPopulation : Error { using Error::Error; };
struct InfeasibleBudget : Error { using Error::Error; };
struct ZeroVector : Error { using Error::Error; };

// reduction
struct NothingToEvict : Error { using Error::Error; };
struct InfeasibleTarget : Error { using Error::Error; };
struct InstanceTooLarge : Error { using Error::Error; };

// offline / streaming samplers
struct AllocationInfeasible : Error { using Error::Error; };
struct NotInitialized : Error { using Error::Error; };

// estimator
struct EmptyScopeStratum : Error { using Error::Error; };
struct UndefinedVariance : Error { using Error::Error; };
struct ZeroExact : Error { using Error::Error; };
struct EmptyScope : Error { using Error::Error; };

// data ingestion
struct ParseError : Error { using Error::Error; };
struct MissingColumn : Error { using Error::Error; };

}  // namespace srs
