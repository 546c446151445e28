#pragma once

#include "mspacings/rng.hpp"
#include "mspacings/parallel.hpp"
#include "mspacings/stats.hpp"
#include "mspacings/gamma_kernel.hpp"
#include "mspacings/process_path.hpp"
#include "mspacings/spacings.hpp"
#include "mspacings/pyke.hpp"
#include "mspacings/gaussian_limits.hpp"
#include "mspacings/rate_lab.hpp"
#include "mspacings/gof.hpp"
#include "mspacings/cli_io.hpp"
