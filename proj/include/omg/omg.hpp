#pragma once

/// Umbrella header.

#include "omg/compositing.hpp"
#include "omg/crossnet.hpp"
#include "omg/errors.hpp"
#include "omg/geometry.hpp"
#include "omg/grad.hpp"
#include "omg/image.hpp"
#include "omg/image_io.hpp"
#include "omg/math.hpp"
#include "omg/metrics.hpp"
#include "omg/optim.hpp"
#include "omg/parallel.hpp"
#include "omg/render.hpp"
#include "omg/scene.hpp"
#include "omg/scene_io.hpp"
#include "omg/shading.hpp"
