#pragma once
// Convenience umbrella header: the whole pipeline in one include.

#include "ncpp/ablation.hpp"
#include "ncpp/baselines.hpp"
#include "ncpp/checkpoint.hpp"
#include "ncpp/csv.hpp"
#include "ncpp/encode.hpp"
#include "ncpp/errors.hpp"
#include "ncpp/explain.hpp"
#include "ncpp/ingest.hpp"
#include "ncpp/manifest.hpp"
#include "ncpp/metrics.hpp"
#include "ncpp/model.hpp"
#include "ncpp/schema.hpp"
#include "ncpp/synth.hpp"
#include "ncpp/tensor.hpp"
#include "ncpp/train.hpp"
