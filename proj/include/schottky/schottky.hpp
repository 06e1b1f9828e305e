#pragma once

#include "schottky/errors.hpp"
#include "schottky/heisenberg_correlators.hpp"
#include "schottky/heisenberg_partition.hpp"
#include "schottky/json_io.hpp"
#include "schottky/mmt.hpp"
#include "schottky/moment_kernel.hpp"
#include "schottky/schottky_group.hpp"
#include "schottky/surface_forms.hpp"
