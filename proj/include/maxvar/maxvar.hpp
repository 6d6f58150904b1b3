#pragma once

#include "ball.hpp"
#include "coverings.hpp"
#include "distance_transform.hpp"
#include "error.hpp"
#include "experiments.hpp"
#include "family.hpp"
#include "geometry.hpp"
#include "golden.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "maximal.hpp"
#include "report.hpp"
#include "rng.hpp"
