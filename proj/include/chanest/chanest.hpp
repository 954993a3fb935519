#pragma once

#include "chanest/baselines.hpp"
#include "chanest/channel.hpp"
#include "chanest/channel_io.hpp"
#include "chanest/config.hpp"
#include "chanest/csv.hpp"
#include "chanest/dataset_io.hpp"
#include "chanest/errors.hpp"
#include "chanest/evaluation.hpp"
#include "chanest/experiment.hpp"
#include "chanest/framing.hpp"
#include "chanest/linalg.hpp"
#include "chanest/nn/adam.hpp"
#include "chanest/nn/checkpoint.hpp"
#include "chanest/nn/gru.hpp"
#include "chanest/nn/model.hpp"
#include "chanest/nn/params.hpp"
#include "chanest/parallel.hpp"
#include "chanest/rng.hpp"
#include "chanest/sbgru.hpp"
