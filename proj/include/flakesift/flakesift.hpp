#pragma once

// Umbrella header for the whole library.

#include "flakesift/cluster.hpp"
#include "flakesift/config.hpp"
#include "flakesift/cooccur.hpp"
#include "flakesift/dataset.hpp"
#include "flakesift/dendrogram_svg.hpp"
#include "flakesift/ensemble.hpp"
#include "flakesift/error.hpp"
#include "flakesift/features.hpp"
#include "flakesift/io_util.hpp"
#include "flakesift/junit_xml.hpp"
#include "flakesift/learn.hpp"
#include "flakesift/metrics.hpp"
#include "flakesift/run_matrix.hpp"
#include "flakesift/shap.hpp"
#include "flakesift/strdist.hpp"
#include "flakesift/synth.hpp"
#include "flakesift/test_id.hpp"
#include "flakesift/triage.hpp"
#include "flakesift/version.hpp"
