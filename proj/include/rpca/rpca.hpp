#pragma once

#include "rpca/certificate.hpp"
#include "rpca/contamination.hpp"
#include "rpca/core_types.hpp"
#include "rpca/dataset_io.hpp"
#include "rpca/errors.hpp"
#include "rpca/estimators.hpp"
#include "rpca/filter.hpp"
#include "rpca/linops.hpp"
#include "rpca/memory_meter.hpp"
#include "rpca/oracle.hpp"
#include "rpca/robust_pca.hpp"
#include "rpca/sample_source.hpp"
#include "rpca/streaming.hpp"
#include "rpca/vector_ops.hpp"
