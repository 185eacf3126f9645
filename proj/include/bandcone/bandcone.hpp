#pragma once

#include "bandcone/error.hpp"
#include "bandcone/linalg.hpp"
#include "bandcone/roots.hpp"
#include "bandcone/special.hpp"
#include "bandcone/quadrature.hpp"
#include "bandcone/random.hpp"
#include "bandcone/glm.hpp"
#include "bandcone/regions.hpp"
#include "bandcone/critval.hpp"
#include "bandcone/bands.hpp"
#include "bandcone/mcsim.hpp"
#include "bandcone/io.hpp"
#include "bandcone/cli.hpp"
