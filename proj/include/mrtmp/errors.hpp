#pragma once

#include <stdexcept>
#include <string>

namespace mrtmp {

#define MRTMP_DEFINE_ERROR(Name)                                      \
  class Name : public std::runtime_error {                            \
   public:                                                            \
    explicit Name(const std::string& what) : std::runtime_error(what) {} \
  };

// world
MRTMP_DEFINE_ERROR(PlacementFailure)
MRTMP_DEFINE_ERROR(SchemaError)
MRTMP_DEFINE_ERROR(InvariantViolation)
// selection
MRTMP_DEFINE_ERROR(NoFeasibleGrasp)
// allocation
MRTMP_DEFINE_ERROR(TaskInfeasible)
MRTMP_DEFINE_ERROR(InstanceTooLarge)
// taskgraph
MRTMP_DEFINE_ERROR(DepthBudgetExceeded)
MRTMP_DEFINE_ERROR(NothingToRemove)
// motion
MRTMP_DEFINE_ERROR(StartInCollision)
MRTMP_DEFINE_ERROR(NoGraspReachable)
MRTMP_DEFINE_ERROR(TransferInfeasible)
// executor
MRTMP_DEFINE_ERROR(GroundingError)
// harness
MRTMP_DEFINE_ERROR(IOError)

#undef MRTMP_DEFINE_ERROR

}  // namespace mrtmp
