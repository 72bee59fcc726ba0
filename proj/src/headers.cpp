// Header self-containment check: every public header compiles on its own
// and together with the others.
#include <palmdpp/common.hpp>
#include <palmdpp/quadrature.hpp>
#include <palmdpp/specfun.hpp>
#include <palmdpp/kernel.hpp>
#include <palmdpp/chk.hpp>
#include <palmdpp/orthopoly.hpp>
#include <palmdpp/dpp.hpp>
#include <palmdpp/ensembles.hpp>
#include <palmdpp/limits.hpp>
#include <palmdpp/palmdpp.hpp>
