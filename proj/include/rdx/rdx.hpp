#pragma once

// Umbrella header.

#include "rdx/align.hpp"
#include "rdx/assignment.hpp"
#include "rdx/baselines.hpp"
#include "rdx/concepts.hpp"
#include "rdx/core.hpp"
#include "rdx/difference.hpp"
#include "rdx/geometry.hpp"
#include "rdx/kmeans.hpp"
#include "rdx/metrics.hpp"
#include "rdx/npy.hpp"
#include "rdx/pipeline.hpp"
#include "rdx/report.hpp"
#include "rdx/synth.hpp"
