#pragma once

#include "drdamp/error.hpp"
#include "drdamp/seed.hpp"
#include "drdamp/sslin.hpp"
#include "drdamp/testbed.hpp"
#include "drdamp/sobol.hpp"
#include "drdamp/pce.hpp"
#include "drdamp/dro.hpp"
#include "drdamp/io.hpp"
