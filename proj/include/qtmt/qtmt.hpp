#pragma once

#include "qtmt/cost.hpp"
#include "qtmt/dataset.hpp"
#include "qtmt/enumerate.hpp"
#include "qtmt/error.hpp"
#include "qtmt/evaluate.hpp"
#include "qtmt/features.hpp"
#include "qtmt/io.hpp"
#include "qtmt/layers.hpp"
#include "qtmt/mbmp.hpp"
#include "qtmt/metrics.hpp"
#include "qtmt/parallel.hpp"
#include "qtmt/partition.hpp"
#include "qtmt/predictor.hpp"
#include "qtmt/qtdepth.hpp"
#include "qtmt/search.hpp"
#include "qtmt/synthetic.hpp"
#include "qtmt/tensor.hpp"
#include "qtmt/weights.hpp"
