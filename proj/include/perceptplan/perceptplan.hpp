#pragma once

#include "perceptplan/automata.hpp"
#include "perceptplan/error.hpp"
#include "perceptplan/gradient.hpp"
#include "perceptplan/model.hpp"
#include "perceptplan/objective.hpp"
#include "perceptplan/oomodel.hpp"
#include "perceptplan/policy.hpp"
#include "perceptplan/sampler.hpp"
#include "perceptplan/scenarios.hpp"
