#pragma once

#include "modschr/constants.hpp"
#include "modschr/csv.hpp"
#include "modschr/dispersion.hpp"
#include "modschr/eikonal.hpp"
#include "modschr/field.hpp"
#include "modschr/field_io.hpp"
#include "modschr/fit.hpp"
#include "modschr/grid.hpp"
#include "modschr/localtime.hpp"
#include "modschr/schrodinger.hpp"
#include "modschr/tridiagonal.hpp"
