// spinprobe.hpp: umbrella header

#pragma once

#include "spinprobe/bath_thermal.hpp"
#include "spinprobe/config.hpp"
#include "spinprobe/density.hpp"
#include "spinprobe/disorder.hpp"
#include "spinprobe/errors.hpp"
#include "spinprobe/exact_prop.hpp"
#include "spinprobe/harness.hpp"
#include "spinprobe/io.hpp"
#include "spinprobe/nmme.hpp"
#include "spinprobe/observables.hpp"
#include "spinprobe/ode.hpp"
#include "spinprobe/parallel.hpp"
#include "spinprobe/spin_ops.hpp"
#include "spinprobe/version.hpp"
