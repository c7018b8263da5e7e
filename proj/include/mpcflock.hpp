#ifndef MPCFLOCK_HPP_
#define MPCFLOCK_HPP_

#include "mpcflock/types.hpp"
#include "mpcflock/geometry.hpp"
#include "mpcflock/flock_rules.hpp"
#include "mpcflock/comms.hpp"
#include "mpcflock/mpc.hpp"
#include "mpcflock/solver.hpp"
#include "mpcflock/sim.hpp"
#include "mpcflock/io.hpp"

#endif  // MPCFLOCK_HPP_
