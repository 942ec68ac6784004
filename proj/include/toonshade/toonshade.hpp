#pragma once

// Umbrella header for the whole engine.

#include "toonshade/config.hpp"
#include "toonshade/errors.hpp"
#include "toonshade/frame_io.hpp"
#include "toonshade/guidance.hpp"
#include "toonshade/image.hpp"
#include "toonshade/metrics.hpp"
#include "toonshade/models.hpp"
#include "toonshade/pipeline.hpp"
#include "toonshade/plugin.hpp"
#include "toonshade/rng.hpp"
#include "toonshade/scheduler.hpp"
#include "toonshade/tensor.hpp"
#include "toonshade/tensor_io.hpp"
#include "toonshade/toy_models.hpp"
#include "toonshade/windows.hpp"
