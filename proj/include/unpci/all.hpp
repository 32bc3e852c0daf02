#pragma once

// Convenience umbrella for the whole library.

#include "unpci/clustering.hpp"
#include "unpci/covariance.hpp"
#include "unpci/csv.hpp"
#include "unpci/data_model.hpp"
#include "unpci/error.hpp"
#include "unpci/kde.hpp"
#include "unpci/matrix.hpp"
#include "unpci/parallel.hpp"
#include "unpci/rng.hpp"
#include "unpci/simulate.hpp"
#include "unpci/stats.hpp"
#include "unpci/theory.hpp"
#include "unpci/unpci.hpp"
#include "unpci/version.hpp"
