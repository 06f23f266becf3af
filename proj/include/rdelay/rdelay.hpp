#ifndef RDELAY_RDELAY_HPP
#define RDELAY_RDELAY_HPP

#include "rdelay/errors.hpp"
#include "rdelay/spectral_core.hpp"
#include "rdelay/kernel_equivalence.hpp"
#include "rdelay/model_catalog.hpp"
#include "rdelay/bifurcation.hpp"
#include "rdelay/steady_state.hpp"
#include "rdelay/time_integration.hpp"
#include "rdelay/cli_io.hpp"

#endif
