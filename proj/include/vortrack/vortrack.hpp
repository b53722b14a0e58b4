#pragma once

#include "vortrack/error.hpp"
#include "vortrack/geometry.hpp"
#include "vortrack/dynamics.hpp"
#include "vortrack/integrator.hpp"
#include "vortrack/lyapunov.hpp"
#include "vortrack/least_squares.hpp"
#include "vortrack/signal.hpp"
#include "vortrack/circulation.hpp"
#include "vortrack/reconstruction.hpp"
#include "vortrack/io.hpp"
#include "vortrack/config.hpp"
#include "vortrack/pipeline.hpp"
