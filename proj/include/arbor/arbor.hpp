#pragma once

#include "arbor/catalog.hpp"
#include "arbor/commutator.hpp"
#include "arbor/dynamics.hpp"
#include "arbor/error.hpp"
#include "arbor/fpp.hpp"
#include "arbor/number_field.hpp"
#include "arbor/presentation.hpp"
#include "arbor/quotient.hpp"
#include "arbor/rational.hpp"
#include "arbor/structure.hpp"
#include "arbor/tree.hpp"
#include "arbor/validate.hpp"
