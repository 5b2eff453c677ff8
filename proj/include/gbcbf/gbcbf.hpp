#pragma once

#include "gbcbf/adaptive.hpp"
#include "gbcbf/benchmarks/double_integrator.hpp"
#include "gbcbf/benchmarks/quadrotor.hpp"
#include "gbcbf/benchmarks/validate.hpp"
#include "gbcbf/filter.hpp"
#include "gbcbf/flow.hpp"
#include "gbcbf/sets.hpp"
#include "gbcbf/sim.hpp"

namespace gbcbf {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gbcbf
