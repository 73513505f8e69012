#pragma once

#include "dvinfer/approx_math.hpp"
#include "dvinfer/conditioning.hpp"
#include "dvinfer/features.hpp"
#include "dvinfer/flop_counter.hpp"
#include "dvinfer/matvec.hpp"
#include "dvinfer/model_config.hpp"
#include "dvinfer/model_io.hpp"
#include "dvinfer/mulaw.hpp"
#include "dvinfer/perf_model.hpp"
#include "dvinfer/phoneme_loss.hpp"
#include "dvinfer/pipeline_engine.hpp"
#include "dvinfer/qrnn.hpp"
#include "dvinfer/reference_engine.hpp"
#include "dvinfer/rng.hpp"
#include "dvinfer/sampling.hpp"
#include "dvinfer/spin_sync.hpp"
#include "dvinfer/thread_plan.hpp"
#include "dvinfer/weights.hpp"
