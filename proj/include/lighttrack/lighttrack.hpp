#ifndef LIGHTTRACK_LIGHTTRACK_HPP
#define LIGHTTRACK_LIGHTTRACK_HPP

#include "lighttrack/errors.hpp"
#include "lighttrack/evaluation.hpp"
#include "lighttrack/gcn.hpp"
#include "lighttrack/geometry.hpp"
#include "lighttrack/manifest.hpp"
#include "lighttrack/matcher.hpp"
#include "lighttrack/pairs.hpp"
#include "lighttrack/providers.hpp"
#include "lighttrack/rng.hpp"
#include "lighttrack/sequence.hpp"
#include "lighttrack/skeleton.hpp"
#include "lighttrack/tracker.hpp"
#include "lighttrack/training.hpp"
#include "lighttrack/version.hpp"

#endif  // LIGHTTRACK_LIGHTTRACK_HPP
