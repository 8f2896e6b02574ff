#pragma once

#include "banet/analysis.hpp"
#include "banet/blocks.hpp"
#include "banet/diffcheck.hpp"
#include "banet/error.hpp"
#include "banet/io.hpp"
#include "banet/metrics.hpp"
#include "banet/model.hpp"
#include "banet/ops.hpp"
#include "banet/parallel.hpp"
#include "banet/tensor.hpp"
#include "banet/volume.hpp"
#include "banet/weights.hpp"
