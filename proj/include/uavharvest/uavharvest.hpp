#pragma once

#include "uavharvest/errors.hpp"
#include "uavharvest/propulsion.hpp"
#include "uavharvest/kinematics.hpp"
#include "uavharvest/trajectory_sca.hpp"
#include "uavharvest/visit_order.hpp"
#include "uavharvest/hover_comm.hpp"
#include "uavharvest/mission.hpp"
#include "uavharvest/scenario_io.hpp"
