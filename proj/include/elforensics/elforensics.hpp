#pragma once

#include "elforensics/anomaly.hpp"
#include "elforensics/dataset.hpp"
#include "elforensics/histogram.hpp"
#include "elforensics/manifest.hpp"
#include "elforensics/metrics.hpp"
#include "elforensics/regional.hpp"
#include "elforensics/report_json.hpp"
#include "elforensics/synth.hpp"
