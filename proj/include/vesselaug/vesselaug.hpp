#pragma once

#include "vesselaug/affine.hpp"
#include "vesselaug/elastic.hpp"
#include "vesselaug/filter.hpp"
#include "vesselaug/image.hpp"
#include "vesselaug/metrics.hpp"
#include "vesselaug/pipeline.hpp"
#include "vesselaug/pixel.hpp"
#include "vesselaug/plan.hpp"
#include "vesselaug/png_io.hpp"
#include "vesselaug/resample.hpp"
#include "vesselaug/rng.hpp"
