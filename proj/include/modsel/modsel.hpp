#pragma once
// Everything: library, harness and property suites.

#include "modsel/adversarial.hpp"
#include "modsel/balancing.hpp"
#include "modsel/concentration.hpp"
#include "modsel/core.hpp"
#include "modsel/environments.hpp"
#include "modsel/learners.hpp"
#include "modsel/rng.hpp"
#include "modsel/verification.hpp"
#include "modsel/harness/config.hpp"
#include "modsel/harness/experiment.hpp"
#include "modsel/harness/scenarios.hpp"
#include "modsel/harness/suites.hpp"
