#pragma once

#include "errors.hpp"
#include "types.hpp"
#include "polynomial.hpp"
#include "model.hpp"
#include "registry.hpp"
#include "validation.hpp"
#include "path.hpp"
#include "arrival.hpp"
#include "solver.hpp"
#include "io.hpp"
#include "scenario.hpp"
#include "commands.hpp"
