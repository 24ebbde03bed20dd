#pragma once

#include "shepherd/agent_types.hpp"
#include "shepherd/behaviour.hpp"
#include "shepherd/config_io.hpp"
#include "shepherd/context.hpp"
#include "shepherd/harness.hpp"
#include "shepherd/library_io.hpp"
#include "shepherd/metrics.hpp"
#include "shepherd/random.hpp"
#include "shepherd/reactive.hpp"
#include "shepherd/stats.hpp"
#include "shepherd/trace.hpp"
#include "shepherd/vec2.hpp"
#include "shepherd/world.hpp"
