#pragma once

// Umbrella header for the advice-budgeted bandit library.

#include "core.hpp"         // IWYU pragma: export
#include "forecasters.hpp"  // IWYU pragma: export
#include "environments.hpp" // IWYU pragma: export
#include "bandit.hpp"       // IWYU pragma: export
#include "harness.hpp"      // IWYU pragma: export
