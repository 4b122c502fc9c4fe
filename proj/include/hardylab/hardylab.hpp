#pragma once

#include "hardylab/error.hpp"
#include "hardylab/quadrature.hpp"
#include "hardylab/weights.hpp"
#include "hardylab/grid.hpp"
#include "hardylab/tridiagonal.hpp"
#include "hardylab/forms.hpp"
#include "hardylab/parallel.hpp"
#include "hardylab/hardy.hpp"
#include "hardylab/spectrum.hpp"
#include "hardylab/evolution.hpp"
#include "hardylab/io.hpp"
#include "hardylab/cli.hpp"
