#pragma once

#include "clipdepth/adamw.hpp"
#include "clipdepth/dataio/bins.hpp"
#include "clipdepth/dataio/dataset.hpp"
#include "clipdepth/dataio/grid.hpp"
#include "clipdepth/dataio/patch_target.hpp"
#include "clipdepth/dataio/pceb.hpp"
#include "clipdepth/dataio/synth.hpp"
#include "clipdepth/errors.hpp"
#include "clipdepth/eval/analysis.hpp"
#include "clipdepth/eval/crop.hpp"
#include "clipdepth/eval/evaluate.hpp"
#include "clipdepth/eval/metrics.hpp"
#include "clipdepth/eval/reconstruct.hpp"
#include "clipdepth/eval/report.hpp"
#include "clipdepth/grad_check.hpp"
#include "clipdepth/gradient_suite.hpp"
#include "clipdepth/head/depth_table.hpp"
#include "clipdepth/head/mlp.hpp"
#include "clipdepth/head/model.hpp"
#include "clipdepth/head/predict.hpp"
#include "clipdepth/head/rotation_head.hpp"
#include "clipdepth/losses.hpp"
#include "clipdepth/ops.hpp"
#include "clipdepth/tensor.hpp"
#include "clipdepth/train/checkpoint.hpp"
#include "clipdepth/train/config.hpp"
#include "clipdepth/train/trainer.hpp"
