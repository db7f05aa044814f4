#pragma once

// Umbrella header: the whole library.

#include "vicert/errors.hpp"
#include "vicert/mdp.hpp"
#include "vicert/policy.hpp"
#include "vicert/switching.hpp"
#include "vicert/lyapunov.hpp"
#include "vicert/engine.hpp"
#include "vicert/generate.hpp"
#include "vicert/io.hpp"
#include "vicert/workbench.hpp"
