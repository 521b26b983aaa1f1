#pragma once

#include "relspec/builders.hpp"
#include "relspec/errors.hpp"
#include "relspec/expression.hpp"
#include "relspec/grid.hpp"
#include "relspec/heat.hpp"
#include "relspec/index.hpp"
#include "relspec/io.hpp"
#include "relspec/operator.hpp"
#include "relspec/pipeline.hpp"
#include "relspec/quadrature.hpp"
#include "relspec/sobolev.hpp"
#include "relspec/spectrum.hpp"
#include "relspec/tridiagonal.hpp"
#include "relspec/zeta.hpp"
