#pragma once

#include "scenegnn/checkpoint.hpp"
#include "scenegnn/detections.hpp"
#include "scenegnn/error.hpp"
#include "scenegnn/experiments.hpp"
#include "scenegnn/gnn_models.hpp"
#include "scenegnn/grad_check.hpp"
#include "scenegnn/graph_builder.hpp"
#include "scenegnn/laf.hpp"
#include "scenegnn/ops.hpp"
#include "scenegnn/parameter_store.hpp"
#include "scenegnn/synthetic.hpp"
#include "scenegnn/tensor.hpp"
#include "scenegnn/training.hpp"
