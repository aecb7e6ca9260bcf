#ifndef ILRAPPROX_ILRAPPROX_HPP
#define ILRAPPROX_ILRAPPROX_HPP

#include "ilrapprox/error.hpp"
#include "ilrapprox/linalg.hpp"
#include "ilrapprox/composition.hpp"
#include "ilrapprox/model.hpp"
#include "ilrapprox/sampling.hpp"
#include "ilrapprox/approx.hpp"
#include "ilrapprox/harness.hpp"

#endif
