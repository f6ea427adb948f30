#pragma once

#include "advinv/analytic.hpp"
#include "advinv/core.hpp"
#include "advinv/datagen.hpp"
#include "advinv/estimation.hpp"
#include "advinv/grid.hpp"
#include "advinv/interpolation.hpp"
#include "advinv/io.hpp"
#include "advinv/optimize.hpp"
#include "advinv/order.hpp"
#include "advinv/parallel.hpp"
#include "advinv/schemes.hpp"
#include "advinv/student_t.hpp"
#include "advinv/uncertainty.hpp"
