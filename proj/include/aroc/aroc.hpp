#pragma once

#include "aroc/common.hpp"
#include "aroc/binary_io.hpp"
#include "aroc/dataset.hpp"
#include "aroc/knn.hpp"
#include "aroc/clustering.hpp"
#include "aroc/rankorder.hpp"
#include "aroc/eval.hpp"
#include "aroc/quality.hpp"
#include "aroc/report.hpp"
