#pragma once

#include "lmoments/arith.hpp"
#include "lmoments/error.hpp"
#include "lmoments/hecke.hpp"
#include "lmoments/modforms.hpp"
#include "lmoments/moments.hpp"
#include "lmoments/parallel.hpp"
#include "lmoments/quadfamily.hpp"
#include "lmoments/specfun.hpp"
#include "lmoments/summation.hpp"
