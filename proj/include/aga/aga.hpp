#pragma once

// Feature-space augmentation guided by attribute regressors: umbrella header.

#include <aga/adam.hpp>
#include <aga/dataset.hpp>
#include <aga/dataset_io.hpp>
#include <aga/eval.hpp>
#include <aga/grad_check.hpp>
#include <aga/interval_grid.hpp>
#include <aga/loss.hpp>
#include <aga/matrix.hpp>
#include <aga/model_io.hpp>
#include <aga/network.hpp>
#include <aga/parallel.hpp>
#include <aga/regressor.hpp>
#include <aga/report_io.hpp>
#include <aga/rng.hpp>
#include <aga/run_config.hpp>
#include <aga/stats.hpp>
#include <aga/svm.hpp>
#include <aga/synthesis.hpp>
#include <aga/synthetic.hpp>
