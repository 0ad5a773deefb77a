#pragma once

// Umbrella header for the camf core library.

#include "camf/error.hpp"
#include "camf/flowgraph.hpp"
#include "camf/keyvalue.hpp"
#include "camf/raster.hpp"
#include "camf/rusle.hpp"
#include "camf/selection.hpp"
#include "camf/synthcase.hpp"
#include "camf/transport.hpp"
