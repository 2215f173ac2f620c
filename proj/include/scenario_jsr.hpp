#pragma once

// Umbrella header.
#include "scenario_jsr/errors.hpp"
#include "scenario_jsr/rng.hpp"
#include "scenario_jsr/parallel.hpp"
#include "scenario_jsr/symmat.hpp"
#include "scenario_jsr/projection.hpp"
#include "scenario_jsr/barrier.hpp"
#include "scenario_jsr/qlp.hpp"
#include "scenario_jsr/scenario.hpp"
#include "scenario_jsr/blackbox.hpp"
#include "scenario_jsr/certifier.hpp"
#include "scenario_jsr/consensus.hpp"
#include "scenario_jsr/version.hpp"
