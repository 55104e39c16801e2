#pragma once

#include "driftflux/cases.hpp"
#include "driftflux/config.hpp"
#include "driftflux/diagnostics.hpp"
#include "driftflux/driver.hpp"
#include "driftflux/eos.hpp"
#include "driftflux/fields.hpp"
#include "driftflux/gas_fraction.hpp"
#include "driftflux/linalg.hpp"
#include "driftflux/mesh.hpp"
#include "driftflux/momentum.hpp"
#include "driftflux/pressure_correction.hpp"
#include "driftflux/verify.hpp"
