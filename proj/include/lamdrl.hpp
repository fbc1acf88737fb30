#pragma once

#include "lamdrl/error.hpp"
#include "lamdrl/rng.hpp"
#include "lamdrl/geometry.hpp"
#include "lamdrl/channel.hpp"
#include "lamdrl/kpi.hpp"
#include "lamdrl/allocators.hpp"
#include "lamdrl/nn.hpp"
#include "lamdrl/strategy.hpp"
#include "lamdrl/strategy_remote.hpp"
#include "lamdrl/config.hpp"
#include "lamdrl/env.hpp"
#include "lamdrl/agent.hpp"
#include "lamdrl/checkpoint.hpp"
#include "lamdrl/harness.hpp"
#include "lamdrl/runtime.hpp"
