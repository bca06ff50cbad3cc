#pragma once

#include "ramen/config.hpp"
#include "ramen/corpus.hpp"
#include "ramen/dataset_io.hpp"
#include "ramen/encoder.hpp"
#include "ramen/graph.hpp"
#include "ramen/metrics.hpp"
#include "ramen/objective.hpp"
#include "ramen/retrieval.hpp"
#include "ramen/sparse.hpp"
#include "ramen/synthetic.hpp"
#include "ramen/trainer.hpp"
