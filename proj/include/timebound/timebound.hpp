#pragma once

#include "timebound/model.hpp"
#include "timebound/threshold.hpp"
#include "timebound/detector.hpp"
#include "timebound/simulator.hpp"
#include "timebound/io.hpp"
