#pragma once

#include "platoon/controller.hpp"
#include "platoon/error.hpp"
#include "platoon/merge.hpp"
#include "platoon/profiles.hpp"
#include "platoon/safety.hpp"
#include "platoon/sim.hpp"
#include "platoon/trajectory.hpp"
