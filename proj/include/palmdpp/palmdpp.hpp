#pragma once

#include "common.hpp"
#include "quadrature.hpp"
#include "specfun.hpp"
#include "kernel.hpp"
#include "chk.hpp"
#include "orthopoly.hpp"
#include "dpp.hpp"
#include "ensembles.hpp"
#include "limits.hpp"
