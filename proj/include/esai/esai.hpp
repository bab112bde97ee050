#pragma once

// Event-based synthetic aperture imaging toolkit: occluded-scene event
// simulation, event-field refocusing, spiking/convolutional reconstruction
// and quality metrics.

#include "esai/checkpoint.hpp"
#include "esai/config.hpp"
#include "esai/conv.hpp"
#include "esai/decoder.hpp"
#include "esai/errors.hpp"
#include "esai/event.hpp"
#include "esai/image.hpp"
#include "esai/io.hpp"
#include "esai/lif.hpp"
#include "esai/losses.hpp"
#include "esai/metrics.hpp"
#include "esai/parallel.hpp"
#include "esai/recon.hpp"
#include "esai/refocus.hpp"
#include "esai/report.hpp"
#include "esai/rng.hpp"
#include "esai/sample.hpp"
#include "esai/scene.hpp"
#include "esai/scene_config.hpp"
#include "esai/simulate.hpp"
#include "esai/snn.hpp"
#include "esai/subpixel_io.hpp"
#include "esai/train.hpp"
